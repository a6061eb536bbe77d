"""Minimal static SVG 1.1 line plots: axes, ticks, legend and polylines."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=40, bottom=55)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def nice_ticks(lo, hi, target=6):
    """Round tick positions covering [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("tick range must be finite")
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step + 1e-9) * step
    ticks = []
    value = start
    while value <= hi + 1e-9 * step:
        if value >= lo - 1e-9 * step:
            ticks.append(round(value, 12))
        value += step
    return ticks


def _fmt(value):
    return f"{value:.6g}"


def render_svg(x, series, title="", xlabel="", ylabel="", markers=()):
    """SVG text for line ``series`` (name -> y values) against ``x``.

    Names listed in ``markers`` are drawn as circles instead of lines, which
    suits numerical samples laid over analytic curves. NaN points are skipped.
    """
    x = np.asarray(x, dtype=float)
    ys = {name: np.asarray(y, dtype=float) for name, y in series.items()}
    finite = np.concatenate([y[np.isfinite(y)] for y in ys.values()] or [np.zeros(1)])
    x_lo, x_hi = float(np.min(x)), float(np.max(x))
    y_lo, y_hi = (float(np.min(finite)), float(np.max(finite))) if finite.size else (0.0, 1.0)
    xt, yt = nice_ticks(x_lo, x_hi), nice_ticks(min(y_lo, 0.0), max(y_hi, 1e-12))
    x_lo, x_hi = min(xt[0], x_lo), max(xt[-1], x_hi)
    y_lo, y_hi = yt[0], yt[-1]
    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return left + (v - x_lo) / (x_hi - x_lo or 1.0) * pw

    def py(v):
        return top + ph - (v - y_lo) / (y_hi - y_lo or 1.0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="{top - 15}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in xt:
        p = px(t)
        out.append(f'<line x1="{p:.2f}" y1="{top + ph}" x2="{p:.2f}" y2="{top + ph + 5}" '
                   'stroke="black"/>')
        out.append(f'<text x="{p:.2f}" y="{top + ph + 20}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12">{_fmt(t)}</text>')
    for t in yt:
        p = py(t)
        out.append(f'<line x1="{left - 5}" y1="{p:.2f}" x2="{left}" y2="{p:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{p + 4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="12">{_fmt(t)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.1f})" font-family="sans-serif" '
               f'font-size="13">{escape(ylabel)}</text>')

    for idx, (name, y) in enumerate(ys.items()):
        color = COLORS[idx % len(COLORS)]
        ok = np.isfinite(y)
        if name in markers:
            for xv, yv in zip(x[ok], y[ok]):
                out.append(f'<circle cx="{px(xv):.2f}" cy="{py(yv):.2f}" r="2.5" '
                           f'fill="none" stroke="{color}"/>')
        else:
            pts = " ".join(f"{px(xv):.2f},{py(yv):.2f}" for xv, yv in zip(x[ok], y[ok]))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                       'stroke-width="1.6"/>')
        ly = top + 15 + 20 * idx
        lx = left + pw + 15
        if name in markers:
            out.append(f'<circle cx="{lx + 12}" cy="{ly}" r="3" fill="none" stroke="{color}"/>')
        else:
            out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" '
                       'stroke-width="1.6"/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}" font-family="sans-serif" '
                   f'font-size="12">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, x, series, **kwargs):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_svg(x, series, **kwargs))
