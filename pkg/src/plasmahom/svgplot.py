"""Minimal deterministic SVG writers for correctors, sweeps and field maps.

Hand-rolled on purpose: the outputs are plain text with no timestamps or
library version strings, so identical inputs produce identical bytes.
"""

from __future__ import annotations

import numpy as np

_DIVERGING = [(0.0, (5, 48, 97)), (0.25, (66, 146, 198)), (0.5, (247, 247, 247)),
              (0.75, (214, 96, 77)), (1.0, (103, 0, 31))]
_SEQUENTIAL = [(0.0, (68, 1, 84)), (0.33, (49, 104, 142)), (0.66, (53, 183, 121)),
               (1.0, (253, 231, 37))]


def _lerp_color(stops, u: float) -> str:
    u = min(max(float(u), 0.0), 1.0)
    for (u0, c0), (u1, c1) in zip(stops[:-1], stops[1:]):
        if u <= u1:
            t = 0.0 if u1 == u0 else (u - u0) / (u1 - u0)
            rgb = [round(a + t * (b - a)) for a, b in zip(c0, c1)]
            return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"
    r, g, b = stops[-1][1]
    return f"rgb({r},{g},{b})"


def _svg_header(w, h):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}">\n'
            f'<rect width="{w}" height="{h}" fill="white"/>\n')


def _panel_triangles(out, mesh, values, ox, oy, size, diverging=True):
    vmax = float(np.abs(values).max()) or 1.0
    pts = mesh.vertices
    vals_tri = values[mesh.triangles].mean(axis=1)
    for tri, v in zip(mesh.triangles, vals_tri):
        u = 0.5 + 0.5 * v / vmax if diverging else v / vmax
        color = _lerp_color(_DIVERGING if diverging else _SEQUENTIAL, u)
        coords = " ".join(f"{ox + size * pts[i, 0]:.2f},{oy + size * (1.0 - pts[i, 1]):.2f}"
                          for i in tri)
        out.append(f'<polygon points="{coords}" fill="{color}" stroke="none"/>')


def corrector_panels_svg(field, path, size: int = 320):
    """Side-by-side real/imaginary heatmaps of a corrector component."""
    mesh = field.mesh
    pad, gap = 28, 24
    w = 2 * size + 3 * pad + gap
    h = size + 2 * pad + 18
    out = [_svg_header(w, h)]
    for k, (part, label) in enumerate((("real", "Re"), ("imag", "Im"))):
        vals = getattr(field.nodal_values, part)
        ox = pad + k * (size + gap + pad // 2)
        _panel_triangles(out, mesh, vals, ox, pad, size)
        out.append(f'<rect x="{ox}" y="{pad}" width="{size}" height="{size}" '
                   f'fill="none" stroke="black" stroke-width="1"/>')
        out.append(f'<text x="{ox + size // 2}" y="{pad + size + 15}" '
                   f'font-size="13" text-anchor="middle" font-family="sans-serif">'
                   f'{label} chi_{field.direction}</text>')
    out.append("</svg>\n")
    with open(path, "w") as f:
        f.write("\n".join(out))


def sweep_plot_svg(records, path, entry: str = "eps11", size=(560, 360)):
    """Re/Im of one tensor entry vs frequency with the negative-Re band shaded."""
    ok = [r for r in records if r.ok]
    ws = np.array([r.omega_tilde for r in ok])
    vals = np.array([complex(r.entry(entry)) for r in ok])
    w_px, h_px = size
    pad = 46
    span = max(float(np.abs(vals.real).max()), float(np.abs(vals.imag).max())) or 1.0
    lo, hi = -span, span

    def sx(w):
        return pad + (w - ws[0]) / (ws[-1] - ws[0]) * (w_px - 2 * pad)

    def sy(v):
        return h_px - pad - (v - lo) / (hi - lo) * (h_px - 2 * pad)

    out = [_svg_header(w_px, h_px)]
    # shade the negative-real band(s)
    neg = vals.real < 0
    k = 0
    while k < len(ws):
        if neg[k]:
            k2 = k
            while k2 + 1 < len(ws) and neg[k2 + 1]:
                k2 += 1
            out.append(f'<rect x="{sx(ws[k]):.1f}" y="{pad}" '
                       f'width="{max(sx(ws[k2]) - sx(ws[k]), 1.0):.1f}" '
                       f'height="{h_px - 2 * pad}" fill="rgb(230,230,230)"/>')
            k = k2 + 1
        else:
            k += 1
    out.append(f'<line x1="{pad}" y1="{sy(0.0):.1f}" x2="{w_px - pad}" '
               f'y2="{sy(0.0):.1f}" stroke="rgb(180,180,180)" stroke-width="1"/>')
    for series, color, label in ((vals.real, "rgb(178,24,43)", "Re"),
                                 (vals.imag, "rgb(33,102,172)", "Im")):
        path_pts = " ".join(f"{sx(w):.1f},{sy(v):.1f}" for w, v in zip(ws, series))
        out.append(f'<polyline points="{path_pts}" fill="none" '
                   f'stroke="{color}" stroke-width="1.6"/>')
        out.append(f'<text x="{w_px - pad + 4}" y="{sy(series[-1]):.1f}" '
                   f'font-size="12" font-family="sans-serif" fill="{color}">{label}</text>')
    out.append(f'<rect x="{pad}" y="{pad}" width="{w_px - 2 * pad}" '
               f'height="{h_px - 2 * pad}" fill="none" stroke="black"/>')
    for wt in np.linspace(ws[0], ws[-1], 8):
        out.append(f'<text x="{sx(wt):.1f}" y="{h_px - pad + 16}" font-size="11" '
                   f'text-anchor="middle" font-family="sans-serif">{wt:.1f}</text>')
    out.append(f'<text x="{w_px // 2}" y="{h_px - 8}" font-size="12" '
               f'text-anchor="middle" font-family="sans-serif">omega_tilde</text>')
    out.append(f'<text x="{w_px // 2}" y="{pad - 10}" font-size="13" '
               f'text-anchor="middle" font-family="sans-serif">{entry}</text>')
    out.append("</svg>\n")
    with open(path, "w") as f:
        f.write("\n".join(out))


def macro_maps_svg(field, path, max_cells: int = 120):
    """Magnitude and phase maps of the out-of-plane field, side by side."""
    hz = field.hz
    nx, ny = hz.shape
    step = max(1, int(np.ceil(max(nx, ny) / max_cells)))
    sub = hz[::step, ::step]
    mx, my = sub.shape
    cell = max(2, int(round(480 / max(mx, my))))
    pad, gap = 24, 30
    pw, ph = mx * cell, my * cell
    w = 2 * pw + 2 * pad + gap
    h = ph + 2 * pad + 16
    mag = np.abs(sub)
    vmax = mag.max() or 1.0
    phase = np.angle(sub)
    out = [_svg_header(w, h)]
    for k, (data, stops, norm, label) in enumerate((
            (mag, _SEQUENTIAL, lambda v: v / vmax, "|H|"),
            (phase, _DIVERGING, lambda v: 0.5 + 0.5 * v / np.pi, "arg H"))):
        ox = pad + k * (pw + gap)
        for i in range(mx):
            for j in range(my):
                color = _lerp_color(stops, norm(data[i, j]))
                x = ox + i * cell
                y = pad + (my - 1 - j) * cell
                out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                           f'fill="{color}"/>')
        out.append(f'<rect x="{ox}" y="{pad}" width="{pw}" height="{ph}" '
                   f'fill="none" stroke="black"/>')
        out.append(f'<text x="{ox + pw // 2}" y="{pad + ph + 14}" font-size="12" '
                   f'text-anchor="middle" font-family="sans-serif">{label}</text>')
    out.append("</svg>\n")
    with open(path, "w") as f:
        f.write("\n".join(out))
