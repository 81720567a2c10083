"""Minimal self-contained SVG line-chart writer (no plotting dependency).

Renders axes with ticks, optional shaded bands, and polyline series into a
deterministic SVG string. Non-finite values split a series into segments.
"""
from __future__ import annotations

import math


WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 36, 48
PALETTE = ("#1f6fb2", "#c23b22", "#3a7d44", "#7d3a78")


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if mag * mult >= raw:
            step = mag * mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


def _fmt_tick(value: float) -> str:
    text = f"{value:.6g}"
    return "0" if text == "-0" else text


class _Scale:
    def __init__(self, lo, hi, out_lo, out_hi):
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.04 * (hi - lo)
        self.lo, self.hi = lo - pad, hi + pad
        self.out_lo, self.out_hi = out_lo, out_hi

    def __call__(self, value: float) -> float:
        frac = (value - self.lo) / (self.hi - self.lo)
        return self.out_lo + frac * (self.out_hi - self.out_lo)


def render_svg(title: str, x_label: str, y_label: str, series, bands=()) -> str:
    """Build an SVG chart.

    ``series`` is a list of (label, xs, ys) tuples; ``bands`` a list of
    (xs, lo, hi) tuples shaded behind the series.
    """
    finite_x, finite_y = [], []
    for _, xs, ys in series:
        for x, y in zip(xs, ys):
            if math.isfinite(x) and math.isfinite(y):
                finite_x.append(float(x))
                finite_y.append(float(y))
    for xs, lo, hi in bands:
        for x, a, b in zip(xs, lo, hi):
            if math.isfinite(x) and math.isfinite(a) and math.isfinite(b):
                finite_x.append(float(x))
                finite_y.extend((float(a), float(b)))
    if not finite_x:
        finite_x, finite_y = [0.0, 1.0], [0.0, 1.0]
    sx = _Scale(min(finite_x), max(finite_x), MARGIN_L, WIDTH - MARGIN_R)
    sy = _Scale(min(finite_y), max(finite_y), HEIGHT - MARGIN_B, MARGIN_T)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    for xs, lo, hi in bands:
        pts = [
            (float(x), float(a), float(b))
            for x, a, b in zip(xs, lo, hi)
            if math.isfinite(x) and math.isfinite(a) and math.isfinite(b)
        ]
        if not pts:
            continue
        ring = [f"{sx(x):.2f},{sy(a):.2f}" for x, a, _ in pts]
        ring += [f"{sx(x):.2f},{sy(b):.2f}" for x, _, b in reversed(pts)]
        parts.append(f'<polygon points="{" ".join(ring)}" fill="#9cc3e4" fill-opacity="0.45"/>')

    axis_y = HEIGHT - MARGIN_B
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{axis_y}" x2="{WIDTH - MARGIN_R}" y2="{axis_y}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{axis_y}" stroke="black"/>'
    )
    for tick in _nice_ticks(sx.lo, sx.hi):
        px = sx(tick)
        parts.append(f'<line x1="{px:.2f}" y1="{axis_y}" x2="{px:.2f}" y2="{axis_y + 5}" stroke="black"/>')
        parts.append(
            f'<text x="{px:.2f}" y="{axis_y + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(tick)}</text>'
        )
    for tick in _nice_ticks(sy.lo, sy.hi):
        py = sy(tick)
        parts.append(f'<line x1="{MARGIN_L - 5}" y1="{py:.2f}" x2="{MARGIN_L}" y2="{py:.2f}" stroke="black"/>')
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{py + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(tick)}</text>'
        )
    parts.append(
        f'<text x="{(MARGIN_L + WIDTH - MARGIN_R) / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{(MARGIN_T + axis_y) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(MARGIN_T + axis_y) / 2:.1f})">{y_label}</text>'
    )

    for k, (label, xs, ys) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        segment: list[str] = []
        segments = []
        for x, y in zip(xs, ys):
            if math.isfinite(float(x)) and math.isfinite(float(y)):
                segment.append(f"{sx(float(x)):.2f},{sy(float(y)):.2f}")
            elif segment:
                segments.append(segment)
                segment = []
        if segment:
            segments.append(segment)
        for seg in segments:
            if len(seg) == 1:
                cx, cy = seg[0].split(",")
                parts.append(f'<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>')
            else:
                parts.append(
                    f'<polyline points="{" ".join(seg)}" fill="none" stroke="{color}" stroke-width="1.6"/>'
                )
        ly = MARGIN_T + 14 + 16 * k
        lx = WIDTH - MARGIN_R - 150
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="1.6"/>')
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" font-size="11">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
