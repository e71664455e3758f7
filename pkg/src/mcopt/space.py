"""Hierarchical multi-cloud configuration domain.

A search space is a set of cloud providers, each with its own ordered list
of categorical parameters, plus a node-count axis shared by all providers.
A candidate deployment (one provider, one value per parameter of that
provider, one cluster size) is a ConfigPoint.  Enumeration order is
deterministic: providers in declared order, then parameter values in
declared order (last parameter fastest before nodes), then node counts.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError

# delimiters used by the canonical point string; identifiers must avoid them
_FORBIDDEN_CHARS = set("/;=,\n\r")


def _check_identifier(text: str, what: str) -> None:
    if not text:
        raise DomainError(f"{what} must be non-empty")
    bad = _FORBIDDEN_CHARS & set(text)
    if bad:
        raise DomainError(f"{what} {text!r} contains reserved characters {sorted(bad)}")


@dataclass(frozen=True)
class ProviderSpace:
    """One provider's categorical parameters, in declaration order."""

    name: str
    params: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        # tolerate lists from callers; hashability needs tuples throughout
        object.__setattr__(
            self, "params", tuple((pname, tuple(values)) for pname, values in self.params)
        )
        _check_identifier(self.name, "provider name")
        if not self.params:
            raise DomainError(f"provider {self.name!r} must declare at least one parameter")
        seen = set()
        for pname, values in self.params:
            _check_identifier(pname, "parameter name")
            if pname in seen:
                raise DomainError(f"duplicate parameter {pname!r} in provider {self.name!r}")
            seen.add(pname)
            if not values:
                raise DomainError(f"parameter {pname!r} of {self.name!r} has no values")
            if len(set(values)) != len(values):
                raise DomainError(f"parameter {pname!r} of {self.name!r} has duplicate values")
            for v in values:
                _check_identifier(v, f"value of parameter {pname!r}")

    @property
    def n_configs(self) -> int:
        """Number of parameter assignments (product of value counts)."""
        out = 1
        for _, values in self.params:
            out *= len(values)
        return out

    def assignments(self):
        """All parameter assignments in lexicographic declaration order."""
        return itertools.product(*(values for _, values in self.params))


@dataclass(frozen=True)
class SearchSpace:
    """Providers plus the shared node-count axis."""

    providers: tuple[ProviderSpace, ...]
    node_counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "providers", tuple(self.providers))
        object.__setattr__(self, "node_counts", tuple(self.node_counts))
        if not self.providers:
            raise DomainError("search space needs at least one provider")
        names = [p.name for p in self.providers]
        if len(set(names)) != len(names):
            raise DomainError(f"provider names must be unique, got {names}")
        if not self.node_counts:
            raise DomainError("node_counts must be non-empty")
        for n in self.node_counts:
            if not isinstance(n, int) or n < 1:
                raise DomainError(f"node counts must be integers >= 1, got {n!r}")
        if any(b <= a for a, b in zip(self.node_counts, self.node_counts[1:])):
            raise DomainError(f"node_counts must be strictly increasing, got {self.node_counts}")

    @property
    def n_providers(self) -> int:
        return len(self.providers)

    def provider_index(self, name: str) -> int:
        for k, p in enumerate(self.providers):
            if p.name == name:
                return k
        raise DomainError(f"unknown provider {name!r}")

    def size(self) -> int:
        """Total number of candidate deployments across all providers."""
        return sum(p.n_configs for p in self.providers) * len(self.node_counts)


@dataclass(frozen=True)
class ConfigPoint:
    """One candidate deployment: provider index, parameter assignment, nodes."""

    provider: int
    nodes: int
    assignment: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(self.assignment))

    def key(self) -> tuple:
        return (self.provider, self.assignment, self.nodes)


def validate_point(space: SearchSpace, point: ConfigPoint) -> None:
    """Raise DomainError unless point is a member of space."""
    if not 0 <= point.provider < space.n_providers:
        raise DomainError(f"provider index {point.provider} out of range")
    prov = space.providers[point.provider]
    if point.nodes not in space.node_counts:
        raise DomainError(f"node count {point.nodes} not in {space.node_counts}")
    if len(point.assignment) != len(prov.params):
        raise DomainError(
            f"assignment length {len(point.assignment)} != {len(prov.params)} "
            f"parameters of provider {prov.name!r}"
        )
    for value, (pname, values) in zip(point.assignment, prov.params):
        if value not in values:
            raise DomainError(f"value {value!r} not valid for parameter {pname!r} of {prov.name!r}")


def enumerate_provider(space: SearchSpace, k: int) -> list[ConfigPoint]:
    """All points of provider k: assignments x node counts, canonical order."""
    if not 0 <= k < space.n_providers:
        raise DomainError(f"provider index {k} out of range (0..{space.n_providers - 1})")
    prov = space.providers[k]
    return [
        ConfigPoint(provider=k, nodes=n, assignment=tuple(assignment))
        for assignment in prov.assignments()
        for n in space.node_counts
    ]


def enumerate_all(space: SearchSpace) -> list[ConfigPoint]:
    """All points of all providers, provider-major canonical order."""
    out = []
    for k in range(space.n_providers):
        out.extend(enumerate_provider(space, k))
    return out


def _node_feature(space: SearchSpace, nodes: int) -> float:
    lo, hi = space.node_counts[0], space.node_counts[-1]
    if lo == hi:
        return 0.5
    return (nodes - lo) / (hi - lo)


def encode(space: SearchSpace, point: ConfigPoint) -> np.ndarray:
    """Numeric features for a point within its own provider's domain.

    One-hot block per categorical parameter followed by the node count
    scaled to [0, 1] over the node range (0.5 if the range is degenerate).
    Dimension: sum of per-parameter value counts, plus one.
    """
    validate_point(space, point)
    prov = space.providers[point.provider]
    parts = []
    for value, (_, values) in zip(point.assignment, prov.params):
        block = np.zeros(len(values))
        block[values.index(value)] = 1.0
        parts.append(block)
    parts.append(np.array([_node_feature(space, point.nodes)]))
    return np.concatenate(parts)


def encode_flat(space: SearchSpace, point: ConfigPoint) -> np.ndarray:
    """Numeric features in a single domain spanning every provider.

    Needed when one surrogate models points from different providers: a
    provider one-hot block, then each provider's parameter blocks (all zero
    for providers other than the point's), then the shared node feature.
    """
    validate_point(space, point)
    parts = [np.zeros(space.n_providers)]
    parts[0][point.provider] = 1.0
    for k, prov in enumerate(space.providers):
        for i, (_, values) in enumerate(prov.params):
            block = np.zeros(len(values))
            if k == point.provider:
                block[values.index(point.assignment[i])] = 1.0
            parts.append(block)
    parts.append(np.array([_node_feature(space, point.nodes)]))
    return np.concatenate(parts)


def assignment_string(space: SearchSpace, point: ConfigPoint) -> str:
    """Middle segment of the canonical string: ``k1=v1;k2=v2``."""
    prov = space.providers[point.provider]
    return ";".join(f"{pname}={value}" for (pname, _), value in zip(prov.params, point.assignment))


def point_to_string(space: SearchSpace, point: ConfigPoint) -> str:
    """Canonical form ``<provider>/<k1>=<v1>;<k2>=<v2>/n=<nodes>``."""
    validate_point(space, point)
    prov = space.providers[point.provider]
    return f"{prov.name}/{assignment_string(space, point)}/n={point.nodes}"


def parse_assignment(space: SearchSpace, k: int, text: str) -> tuple[str, ...]:
    """Parse the ``k1=v1;k2=v2`` segment for provider k, enforcing order."""
    prov = space.providers[k]
    pairs = []
    for item in text.split(";"):
        if "=" not in item:
            raise ParseError(f"malformed assignment segment {text!r}")
        pname, _, value = item.partition("=")
        pairs.append((pname, value))
    if [p for p, _ in pairs] != [p for p, _ in prov.params]:
        raise DomainError(
            f"assignment {text!r} does not list provider {prov.name!r} parameters "
            f"in declaration order {[p for p, _ in prov.params]}"
        )
    return tuple(v for _, v in pairs)


def point_from_string(space: SearchSpace, text: str) -> ConfigPoint:
    """Inverse of point_to_string."""
    parts = text.split("/")
    if len(parts) != 3:
        raise ParseError(f"malformed point string {text!r}")
    name, assignment_text, nodes_text = parts
    k = space.provider_index(name)
    if not nodes_text.startswith("n="):
        raise ParseError(f"malformed node segment in {text!r}")
    try:
        nodes = int(nodes_text[2:])
    except ValueError as e:
        raise ParseError(f"malformed node count in {text!r}") from e
    point = ConfigPoint(provider=k, nodes=nodes, assignment=parse_assignment(space, k, assignment_text))
    validate_point(space, point)
    return point


def space_to_json_dict(space: SearchSpace) -> dict:
    return {
        "providers": [
            {"name": p.name, "params": {pname: list(values) for pname, values in p.params}}
            for p in space.providers
        ],
        "nodes": list(space.node_counts),
    }


def space_from_json_dict(doc: dict) -> SearchSpace:
    try:
        providers = tuple(
            ProviderSpace(
                name=str(entry["name"]),
                params=tuple(
                    (str(pname), tuple(str(v) for v in values))
                    for pname, values in entry["params"].items()
                ),
            )
            for entry in doc["providers"]
        )
        nodes = tuple(int(n) for n in doc["nodes"])
    except (KeyError, TypeError, AttributeError) as e:
        raise ParseError(f"malformed space document: {e}") from e
    return SearchSpace(providers=providers, node_counts=nodes)


def load_space(path) -> SearchSpace:
    """Load a space from its JSON file form (parameter order = document order)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON in {path}: {e}") from e
    return space_from_json_dict(doc)


def save_space(space: SearchSpace, path) -> None:
    Path(path).write_text(json.dumps(space_to_json_dict(space), indent=2) + "\n", encoding="utf-8")


def default_space() -> SearchSpace:
    """Built-in three-provider space (88 points) used by the CLI by default.

    Shapes mirror common offerings: 6, 4 and 12 per-provider assignments,
    each crossed with cluster sizes 2..5.
    """
    return SearchSpace(
        providers=(
            ProviderSpace(
                name="aws",
                params=(("family", ("m4", "r4", "c4")), ("size", ("large", "xlarge"))),
            ),
            ProviderSpace(
                name="azure",
                params=(("family", ("D_v2", "D_v3")), ("cpu_size", ("2", "4"))),
            ),
            ProviderSpace(
                name="gcp",
                params=(
                    ("family", ("e2", "n1")),
                    ("type", ("standard", "highmem", "highcpu")),
                    ("vcpu", ("2", "4")),
                ),
            ),
        ),
        node_counts=(2, 3, 4, 5),
    )
