"""Small shared helpers: stable seed derivation and atomic file writes."""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path


def stable_seed(*parts) -> int:
    """Derive a reproducible 63-bit seed from arbitrary hashable parts.

    Python's builtin hash() is salted per process, so seeds derived from it
    would not replay across runs.  This uses SHA-256 over a canonical string
    form instead, which is stable across runs, platforms and job counts.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def atomic_write_text(path, text: str) -> None:
    """Write text to path via a temp file + rename; no partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def fmt_float(x: float) -> str:
    """Shortest round-tripping decimal form of a float (repr semantics)."""
    return repr(float(x))
