"""Minimal SVG heatmap writer (no plotting dependency)."""
from __future__ import annotations

from html import escape

import numpy as np

# viridis anchor colours
_ANCHORS = np.array([
    [68, 1, 84], [72, 40, 120], [62, 74, 137], [49, 104, 142], [38, 130, 142],
    [31, 158, 137], [53, 183, 121], [109, 205, 89], [180, 222, 44], [253, 231, 37],
], float)


def colour(v):
    """Hex colour for ``v`` in [0, 1]."""
    x = float(np.clip(v, 0, 1)) * (len(_ANCHORS) - 1)
    i = min(int(x), len(_ANCHORS) - 2)
    c = _ANCHORS[i] + (x - i) * (_ANCHORS[i + 1] - _ANCHORS[i])
    return "#%02x%02x%02x" % tuple(int(round(ch)) for ch in c)


def _downsample(z, n_max, axis):
    n = z.shape[axis]
    if n <= n_max:
        return z, np.arange(n)
    step = int(np.ceil(n / n_max))
    idx = np.arange(0, n, step)
    return np.take(z, idx, axis=axis), idx


def heatmap(z, x, y, title="", xlabel="", ylabel="", max_cols=400, max_rows=200,
            cell_w=None, height=360):
    """Render ``z[row, col]`` with rows along ``y`` (upwards) and columns along ``x``."""
    z = np.asarray(z, float)
    z, ci = _downsample(z, max_cols, 1)
    z, ri = _downsample(z, max_rows, 0)
    x = np.asarray(x)[ci]
    y = np.asarray(y)[ri]
    zmax = z.max() if z.size and z.max() > 0 else 1.0
    rows, cols = z.shape
    left, top, bottom = 70, 30, 50
    plot_w = 600 if cell_w is None else cell_w * cols
    plot_h = height
    cw, rh = plot_w / cols, plot_h / rows
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{left + plot_w + 20:.0f}" '
           f'height="{top + plot_h + bottom:.0f}" font-family="sans-serif" font-size="12">']
    out.append(f'<text x="{left}" y="18">{escape(title)}</text>')
    for r in range(rows):
        yy = top + plot_h - (r + 1) * rh
        for c in range(cols):
            out.append(f'<rect x="{left + c * cw:.2f}" y="{yy:.2f}" width="{cw + 0.05:.2f}" '
                       f'height="{rh + 0.05:.2f}" fill="{colour(z[r, c] / zmax)}"/>')
    out.append(f'<rect x="{left}" y="{top}" width="{plot_w:.2f}" height="{plot_h:.2f}" '
               'fill="none" stroke="black"/>')
    for frac in (0.0, 0.5, 1.0):
        c = min(int(round(frac * (cols - 1))), cols - 1)
        out.append(f'<text x="{left + (c + 0.5) * cw:.2f}" y="{top + plot_h + 16}" '
                   f'text-anchor="middle">{x[c]:.3g}</text>')
        r = min(int(round(frac * (rows - 1))), rows - 1)
        out.append(f'<text x="{left - 6}" y="{top + plot_h - (r + 0.5) * rh + 4:.2f}" '
                   f'text-anchor="end">{y[r]:.3g}</text>')
    out.append(f'<text x="{left + plot_w / 2:.0f}" y="{top + plot_h + 38}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + plot_h / 2:.0f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + plot_h / 2:.0f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
