"""Self-contained SVG renderers for run artifacts.

Pure functions of the emitted CSV data (same arrays, same file), so every
figure can be regenerated offline without the solver.  Heatmaps use a
linear color scale normalized to the per-file maximum with an embedded
scale bar; ``diverging=True`` switches to a signed blue/white/red scale
for fields like the extracted control.
"""

from __future__ import annotations

import numpy as np

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 64, 86, 34, 46


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _lerp_color(lo, hi, s: float) -> str:
    return "#%02x%02x%02x" % tuple(int(round(a + (b - a) * s)) for a, b in zip(lo, hi))


def _seq_color(s: float) -> str:
    return _lerp_color((255, 255, 255), (16, 78, 139), s)


def _div_color(s: float) -> str:
    # s in [-1, 1]: blue below, white at zero, red above
    if s < 0.0:
        return _lerp_color((255, 255, 255), (33, 62, 160), -s)
    return _lerp_color((255, 255, 255), (178, 24, 43), s)


def _svg_header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="DejaVu Sans, sans-serif" font-size="11">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
    ]


def heatmap_svg(values: np.ndarray, t_extent, x_extent, title: str, diverging: bool = False) -> str:
    """Heatmap of values[i, j] over (time, state); NaN cells render gray."""
    values = np.asarray(values, dtype=float)
    n_t, n_x = values.shape
    finite = np.isfinite(values)
    vmax = float(np.abs(values[finite]).max()) if finite.any() else 0.0
    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB
    cw = plot_w / n_t
    ch = plot_h / n_x
    out = _svg_header(title)
    for i in range(n_t):
        px = _ML + i * cw
        col = values[i]
        for j in range(n_x):
            v = col[j]
            if not np.isfinite(v):
                fill = "#cccccc"
            elif vmax == 0.0:
                fill = "#ffffff"
            elif diverging:
                fill = _div_color(float(v) / vmax)
            else:
                fill = _seq_color(float(v) / vmax)
            py = _MT + plot_h - (j + 1) * ch
            out.append(f'<rect x="{px:.2f}" y="{py:.2f}" width="{cw + 0.5:.2f}" height="{ch + 0.5:.2f}" fill="{fill}"/>')
    # axes labels
    out.append(f'<text x="{_ML}" y="{_H - 14}" text-anchor="middle">{_fmt(t_extent[0])}</text>')
    out.append(f'<text x="{_ML + plot_w}" y="{_H - 14}" text-anchor="middle">{_fmt(t_extent[1])}</text>')
    out.append(f'<text x="{_ML + plot_w / 2}" y="{_H - 14}" text-anchor="middle">t</text>')
    out.append(f'<text x="{_ML - 8}" y="{_MT + plot_h}" text-anchor="end">{_fmt(x_extent[0])}</text>')
    out.append(f'<text x="{_ML - 8}" y="{_MT + 10}" text-anchor="end">{_fmt(x_extent[1])}</text>')
    out.append(f'<text x="{_ML - 8}" y="{_MT + plot_h / 2}" text-anchor="end">x</text>')
    # scale bar
    bar_x, bar_w, steps = _W - _MR + 18, 16, 64
    for s in range(steps):
        frac = (s + 0.5) / steps
        if diverging:
            fill = _div_color(2.0 * frac - 1.0)
        else:
            fill = _seq_color(frac)
        py = _MT + plot_h - (s + 1) / steps * plot_h
        out.append(f'<rect x="{bar_x}" y="{py:.2f}" width="{bar_w}" height="{plot_h / steps + 0.5:.2f}" fill="{fill}"/>')
    top_label = _fmt(vmax)
    low_label = _fmt(-vmax) if diverging else "0"
    out.append(f'<text x="{bar_x + bar_w + 4}" y="{_MT + 10}">{top_label}</text>')
    out.append(f'<text x="{bar_x + bar_w + 4}" y="{_MT + plot_h}">{low_label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_chart_svg(series, title: str, x_label: str, y_label: str) -> str:
    """Polyline chart; ``series`` is a list of (label, xs, ys)."""
    palette = ["#1f4e8c", "#b2182b", "#2a7f3f", "#7b3294"]
    xs_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(min(ys_all.min(), 0.0)), float(ys_all.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return _MT + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    out = _svg_header(title)
    out.append(
        f'<rect x="{_ML}" y="{_MT}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#777" stroke-width="1"/>'
    )
    for idx, (label, xs, ys) in enumerate(series):
        color = palette[idx % len(palette)]
        pts = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        out.append(f'<text x="{_W - _MR + 6}" y="{_MT + 16 + 16 * idx}" fill="{color}">{label}</text>')
    out.append(f'<text x="{_ML}" y="{_H - 14}" text-anchor="middle">{_fmt(x_lo)}</text>')
    out.append(f'<text x="{_ML + plot_w}" y="{_H - 14}" text-anchor="middle">{_fmt(x_hi)}</text>')
    out.append(f'<text x="{_ML + plot_w / 2}" y="{_H - 14}" text-anchor="middle">{x_label}</text>')
    out.append(f'<text x="{_ML - 8}" y="{_MT + plot_h}" text-anchor="end">{_fmt(y_lo)}</text>')
    out.append(f'<text x="{_ML - 8}" y="{_MT + 10}" text-anchor="end">{_fmt(y_hi)}</text>')
    out.append(f'<text x="{_ML - 8}" y="{_MT + plot_h / 2}" text-anchor="end">{y_label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
