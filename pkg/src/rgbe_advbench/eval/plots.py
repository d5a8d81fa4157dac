"""Tiny deterministic SVG line charts (loss traces, metric curves).

Hand-rolled on purpose: byte-identical output for identical data, no
renderer state or font discovery involved.
"""

from __future__ import annotations

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 60, 16, 34, 46


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def line_chart(series, path, title: str = "", xlabel: str = "", ylabel: str = ""):
    """Write a multi-series line chart.

    ``series`` is a list of (label, xs, ys) with equal-length numeric
    sequences.
    """
    xs_all = [float(x) for _, xs, _ in series for x in xs]
    ys_all = [float(y) for _, _, ys in series for y in ys]
    if not xs_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return _MT + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#444" stroke-width="1"/>',
    ]
    if title:
        parts.append(f'<text x="{_W / 2:.1f}" y="20" font-family="sans-serif" '
                     f'font-size="14" text-anchor="middle">{title}</text>')
    for t in _ticks(x_lo, x_hi):
        x = px(t)
        parts.append(f'<line x1="{x:.1f}" y1="{_MT + ph}" x2="{x:.1f}" '
                     f'y2="{_MT + ph + 4}" stroke="#444"/>')
        parts.append(f'<text x="{x:.1f}" y="{_MT + ph + 18}" font-family="sans-serif" '
                     f'font-size="11" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        y = py(t)
        parts.append(f'<line x1="{_ML - 4}" y1="{y:.1f}" x2="{_ML}" y2="{y:.1f}" '
                     f'stroke="#444"/>')
        parts.append(f'<text x="{_ML - 8}" y="{y + 4:.1f}" font-family="sans-serif" '
                     f'font-size="11" text-anchor="end">{_fmt(t)}</text>')
    if xlabel:
        parts.append(f'<text x="{_ML + pw / 2:.1f}" y="{_H - 10}" '
                     f'font-family="sans-serif" font-size="12" '
                     f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="16" y="{_MT + ph / 2:.1f}" font-family="sans-serif" '
                     f'font-size="12" text-anchor="middle" '
                     f'transform="rotate(-90 16 {_MT + ph / 2:.1f})">{ylabel}</text>')
    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}"
                       for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        if label:
            ly = _MT + 14 + 16 * i
            parts.append(f'<line x1="{_ML + pw - 120}" y1="{ly - 4}" '
                         f'x2="{_ML + pw - 96}" y2="{ly - 4}" stroke="{color}" '
                         f'stroke-width="2"/>')
            parts.append(f'<text x="{_ML + pw - 90}" y="{ly}" '
                         f'font-family="sans-serif" font-size="11">{label}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
