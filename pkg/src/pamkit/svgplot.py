"""Hand-rolled SVG scatter and line plots.

Plain text out, no rendering dependency, and nothing time- or
machine-dependent in the output: rerunning a command must reproduce the
SVG byte for byte.
"""

from __future__ import annotations

import math

import numpy as np

WIDTH = 640
HEIGHT = 480
MARGIN_LEFT = 64
MARGIN_RIGHT = 20
MARGIN_TOP = 40
MARGIN_BOTTOM = 52

PALETTE = ("#1f6fb2", "#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e", "#a6761d")


def _fmt(value: float) -> str:
    text = f"{value:.6g}"
    return "0" if text == "-0" else text


def _ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if lo == hi:
        pad = 1.0 if lo == 0 else abs(lo) * 0.1
        lo, hi = lo - pad, hi + pad
    raw_step = (hi - lo) / target
    magnitude = 10.0 ** math.floor(math.log10(raw_step))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * magnitude
        if raw_step <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


class _Axes:
    def __init__(self, xs: list[float], ys: list[float]):
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys), max(ys)
        x_pad = (x_hi - x_lo) * 0.05 or max(abs(x_lo), 1.0) * 0.05
        y_pad = (y_hi - y_lo) * 0.05 or max(abs(y_lo), 1.0) * 0.05
        self.x_lo, self.x_hi = x_lo - x_pad, x_hi + x_pad
        self.y_lo, self.y_hi = y_lo - y_pad, y_hi + y_pad

    def px(self, x: float) -> float:
        frac = (x - self.x_lo) / (self.x_hi - self.x_lo)
        return MARGIN_LEFT + frac * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)

    def py(self, y: float) -> float:
        frac = (y - self.y_lo) / (self.y_hi - self.y_lo)
        return HEIGHT - MARGIN_BOTTOM - frac * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{_escape(title)}</text>',
    ]


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _axes_markup(ax: _Axes, x_label: str, y_label: str) -> list[str]:
    parts = []
    x0, x1 = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    y0, y1 = HEIGHT - MARGIN_BOTTOM, MARGIN_TOP
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    for t in _ticks(ax.x_lo, ax.x_hi):
        px = ax.px(t)
        parts.append(f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 5}" stroke="black"/>')
        parts.append(
            f'<text x="{px:.1f}" y="{y0 + 18}" text-anchor="middle">{_fmt(t)}</text>'
        )
    for t in _ticks(ax.y_lo, ax.y_hi):
        py = ax.py(t)
        parts.append(f'<line x1="{x0 - 5}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" stroke="black"/>')
        parts.append(
            f'<text x="{x0 - 8}" y="{py + 4:.1f}" text-anchor="end">{_fmt(t)}</text>'
        )
    parts.append(
        f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 14}" text-anchor="middle">{_escape(x_label)}</text>'
    )
    parts.append(
        f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{_escape(y_label)}</text>'
    )
    return parts


def scatter_svg(
    xs,
    ys,
    *,
    title: str,
    x_label: str,
    y_label: str,
    annotation: str | None = None,
    fit_line: bool = True,
) -> str:
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    if not xs or len(xs) != len(ys):
        raise ValueError("scatter needs equal-length non-empty x and y")
    ax = _Axes(xs, ys)
    parts = _header(title) + _axes_markup(ax, x_label, y_label)

    if fit_line and len(xs) >= 2:
        x_arr, y_arr = np.asarray(xs), np.asarray(ys)
        var = float(np.var(x_arr))
        if var > 0:
            slope = float(np.cov(x_arr, y_arr, bias=True)[0, 1]) / var
            intercept = float(y_arr.mean() - slope * x_arr.mean())
            fx = [min(xs), max(xs)]
            fy = [slope * v + intercept for v in fx]
            parts.append(
                f'<line x1="{ax.px(fx[0]):.1f}" y1="{ax.py(fy[0]):.1f}" '
                f'x2="{ax.px(fx[1]):.1f}" y2="{ax.py(fy[1]):.1f}" '
                f'stroke="{PALETTE[1]}" stroke-width="1.5"/>'
            )
    for x, y in zip(xs, ys):
        parts.append(
            f'<circle cx="{ax.px(x):.1f}" cy="{ax.py(y):.1f}" r="3" '
            f'fill="{PALETTE[0]}" fill-opacity="0.7"/>'
        )
    if annotation:
        parts.append(
            f'<text x="{WIDTH - MARGIN_RIGHT - 6}" y="{MARGIN_TOP + 14}" '
            f'text-anchor="end">{_escape(annotation)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def line_svg(series: dict[str, list[tuple[float, float]]], *, title: str, x_label: str, y_label: str) -> str:
    """One polyline per named series, points marked, legend top-right."""
    if not series:
        raise ValueError("line plot needs at least one series")
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    if not xs:
        raise ValueError("line plot needs at least one point")
    ax = _Axes(xs, ys)
    parts = _header(title) + _axes_markup(ax, x_label, y_label)

    for i, (name, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = sorted(pts)
        coords = " ".join(f"{ax.px(x):.1f},{ax.py(y):.1f}" for x, y in pts)
        if len(pts) > 1:
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        for x, y in pts:
            parts.append(f'<circle cx="{ax.px(x):.1f}" cy="{ax.py(y):.1f}" r="3" fill="{color}"/>')
        ly = MARGIN_TOP + 14 + 16 * i
        parts.append(
            f'<rect x="{WIDTH - MARGIN_RIGHT - 130}" y="{ly - 9}" width="10" height="10" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{WIDTH - MARGIN_RIGHT - 115}" y="{ly}">{_escape(name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
