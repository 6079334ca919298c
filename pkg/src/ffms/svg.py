"""Small self-contained SVG writer for line charts and heat maps."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
W, H = 640, 400
M = dict(left=70, right=20, top=30, bottom=50)


def _fmt(v):
    return f"{v:.6g}"


def _frame(title, xlabel, ylabel, x0, x1, y0, y1):
    pw = W - M["left"] - M["right"]
    ph = H - M["top"] - M["bottom"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<rect x="{M["left"]}" y="{M["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{M["left"] + pw / 2:.1f}" y="{H - 10}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12">{escape(xlabel)}</text>',
        f'<text x="15" y="{M["top"] + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 15 {M["top"] + ph / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for k in range(5):
        fx = x0 + (x1 - x0) * k / 4
        fy = y0 + (y1 - y0) * k / 4
        px = M["left"] + pw * k / 4
        py = M["top"] + ph * (1 - k / 4)
        out.append(f'<text x="{px:.1f}" y="{H - M["bottom"] + 15}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="10">{_fmt(fx)}</text>')
        out.append(f'<text x="{M["left"] - 5}" y="{py + 3:.1f}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="10">{_fmt(fy)}</text>')
    return out, pw, ph


def _span(a):
    lo, hi = float(np.min(a)), float(np.max(a))
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def line_chart(x, series, title="", xlabel="", ylabel="", max_points=2000):
    """Render named y-series against a shared x axis. Returns SVG text."""
    x = np.asarray(x, dtype=float)
    names = list(series)
    ys = [np.asarray(series[n], dtype=float) for n in names]
    step = max(1, len(x) // max_points)
    x0, x1 = _span(x)
    y0, y1 = _span(np.concatenate(ys))
    out, pw, ph = _frame(title, xlabel, ylabel, x0, x1, y0, y1)
    for i, (name, y) in enumerate(zip(names, ys)):
        px = M["left"] + (x[::step] - x0) / (x1 - x0) * pw
        py = M["top"] + (1 - (y[::step] - y0) / (y1 - y0)) * ph
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        color = PALETTE[i % len(PALETTE)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{W - M["right"] - 5}" y="{M["top"] + 15 + 14 * i}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11" fill="{color}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _color(u):
    # white to dark red
    u = min(max(u, 0.0), 1.0)
    r = 255 - int(round(u * 105))
    g = b = 255 - int(round(u * 255))
    return f"#{r:02x}{g:02x}{b:02x}"


def heat_map(t, values, title="", xlabel="time (s)", ylabel="segment", max_columns=400):
    """Render ``values`` (samples x rows) as colored cells, time along x."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    step = max(1, len(t) // max_columns)
    t, v = t[::step], v[::step]
    n_rows = v.shape[1]
    x0, x1 = _span(t)
    out, pw, ph = _frame(title, xlabel, ylabel, x0, x1, 0.5, n_rows + 0.5)
    vmax = float(v.max()) or 1.0
    cw = pw / len(t)
    rh = ph / n_rows
    for j in range(n_rows):
        y = M["top"] + (n_rows - 1 - j) * rh
        for k in range(len(t)):
            out.append(f'<rect x="{M["left"] + k * cw:.2f}" y="{y:.2f}" width="{cw + 0.05:.2f}" '
                       f'height="{rh:.2f}" fill="{_color(v[k, j] / vmax)}"/>')
    out.append(f'<text x="{W - M["right"]}" y="{H - 10}" text-anchor="end" font-family="sans-serif" '
               f'font-size="10">max {_fmt(vmax)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
