"""Minimal self-contained SVG charts (no external refs, byte-deterministic).

Only what the reports need: a multi-series line chart for mean regret vs
budget, and a box chart for savings distributions.  Coordinates are emitted
with fixed precision so identical inputs always produce identical bytes.
"""

from __future__ import annotations

from .errors import DomainError

WIDTH, HEIGHT = 720, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 160, 40, 50

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _f(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


class _Canvas:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" '
            f'font-family="monospace" font-size="15">{title}</text>',
        ]

    def text(self, x, y, s, anchor="middle", size=11, rotate=None):
        extra = f' transform="rotate(-90 {_f(x)} {_f(y)})"' if rotate else ""
        self.parts.append(
            f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}" '
            f'font-family="monospace" font-size="{size}"{extra}>{s}</text>'
        )

    def line(self, x1, y1, x2, y2, color="#333333", width=1.0):
        self.parts.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="{color}" stroke-width="{width}"/>'
        )

    def finish(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


class _Scale:
    def __init__(self, lo, hi, out_lo, out_hi):
        if hi <= lo:
            hi = lo + 1.0
        self.lo, self.hi, self.out_lo, self.out_hi = lo, hi, out_lo, out_hi

    def __call__(self, v: float) -> float:
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.out_lo + frac * (self.out_hi - self.out_lo)


def _axes(canvas: _Canvas, sx: _Scale, sy: _Scale, xticks, yticks, xlabel, ylabel):
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    canvas.line(x0, y0, x1, y0)
    canvas.line(x0, y0, x0, y1)
    for t in xticks:
        px = sx(t)
        canvas.line(px, y0, px, y0 + 4)
        canvas.text(px, y0 + 16, f"{t:g}")
    for t in yticks:
        py = sy(t)
        canvas.line(x0 - 4, py, x0, py)
        canvas.line(x0, py, x1, py, color="#dddddd", width=0.5)
        canvas.text(x0 - 8, py + 3, f"{t:.3g}", anchor="end")
    canvas.text((x0 + x1) / 2, HEIGHT - 12, xlabel)
    canvas.text(16, (y0 + y1) / 2, ylabel, rotate=True)


def line_chart(series: dict, title: str, xlabel: str, ylabel: str) -> str:
    """series: label -> list of (x, y); one polyline per label."""
    if not series or any(not pts for pts in series.values()):
        raise DomainError("line chart needs at least one non-empty series")
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    sx = _Scale(min(xs), max(xs), MARGIN_L, WIDTH - MARGIN_R)
    sy = _Scale(0.0, max(ys), HEIGHT - MARGIN_B, MARGIN_T)
    canvas = _Canvas(title)
    distinct_xs = sorted(set(xs))
    xticks = distinct_xs if len(distinct_xs) <= 10 else _ticks(min(xs), max(xs))
    _axes(canvas, sx, sy, xticks, _ticks(0.0, max(ys)), xlabel, ylabel)
    for i, (label, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in pts)
        canvas.parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>'
        )
        for x, y in pts:
            canvas.parts.append(
                f'<circle cx="{_f(sx(x))}" cy="{_f(sy(y))}" r="2.5" fill="{color}"/>'
            )
        ly = MARGIN_T + 14 * i
        canvas.line(WIDTH - MARGIN_R + 10, ly, WIDTH - MARGIN_R + 30, ly, color=color, width=1.5)
        canvas.text(WIDTH - MARGIN_R + 36, ly + 3, label, anchor="start")
    return canvas.finish()


def box_chart(boxes: dict, title: str, ylabel: str) -> str:
    """boxes: label -> (whisker_low, q25, median, q75, whisker_high, outliers)."""
    if not boxes:
        raise DomainError("box chart needs at least one box")
    vals = []
    for wl, q25, med, q75, wh, outliers in boxes.values():
        vals.extend([wl, q25, med, q75, wh, *outliers])
    sy = _Scale(min(vals + [0.0]), max(vals), HEIGHT - MARGIN_B, MARGIN_T)
    canvas = _Canvas(title)
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    slot = (x1 - x0) / len(boxes)
    _axes(
        canvas,
        _Scale(0, 1, x0, x1),
        sy,
        [],
        _ticks(min(vals + [0.0]), max(vals)),
        "",
        ylabel,
    )
    zero_y = sy(0.0)
    canvas.line(x0, zero_y, x1, zero_y, color="#888888", width=0.8)
    half_box = min(30.0, slot * 0.3)
    for i, (label, (wl, q25, med, q75, wh, outliers)) in enumerate(boxes.items()):
        cx = x0 + slot * (i + 0.5)
        color = PALETTE[i % len(PALETTE)]
        canvas.line(cx, sy(wl), cx, sy(q25))
        canvas.line(cx, sy(q75), cx, sy(wh))
        canvas.line(cx - half_box / 2, sy(wl), cx + half_box / 2, sy(wl))
        canvas.line(cx - half_box / 2, sy(wh), cx + half_box / 2, sy(wh))
        canvas.parts.append(
            f'<rect x="{_f(cx - half_box)}" y="{_f(sy(q75))}" width="{_f(2 * half_box)}" '
            f'height="{_f(max(sy(q25) - sy(q75), 0.5))}" fill="{color}" fill-opacity="0.35" '
            f'stroke="{color}"/>'
        )
        canvas.line(cx - half_box, sy(med), cx + half_box, sy(med), color=color, width=2.0)
        for v in outliers:
            canvas.parts.append(
                f'<circle cx="{_f(cx)}" cy="{_f(sy(v))}" r="2.5" fill="none" stroke="{color}"/>'
            )
        canvas.text(cx, HEIGHT - MARGIN_B + 16, label)
    return canvas.finish()
