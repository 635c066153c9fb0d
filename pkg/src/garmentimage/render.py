"""Static SVG views of patterns and GarmentImages."""

from __future__ import annotations

import numpy as np

from .grid import EdgeType, GarmentImage, Layer
from .pattern import Side, SewingPattern, edge_polyline, loop_polygon

EDGE_COLORS = {
    EdgeType.NON_STITCH: "#000000",
    EdgeType.FRONT_TO_BACK: "#1f5fd0",
    EdgeType.SIDE_BY_SIDE: "#d02020",
}
SIDE_FILL = {Side.FRONT: "#f3d9b1", Side.BACK: "#c9dcef", Side.WRAP: "#d8ecc8"}
STITCH_COLORS = ("#d02020", "#1f9d3a", "#7a3fc0", "#e07b00", "#008b8b", "#b8860b", "#c71585", "#4b6f00")


def _f(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".") if abs(x) >= 5e-4 else "0"


def _path(points: np.ndarray, closed: bool = True) -> str:
    d = "M" + " L".join(f"{_f(x)},{_f(y)}" for x, y in points)
    return d + (" Z" if closed else "")


def _svg(width: float, height: float, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
            f'viewBox="0 0 {_f(width)} {_f(height)}">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def render_pattern(pattern: SewingPattern, scale: float = 4.0, margin: float = 10.0) -> str:
    """Panels at their placements (y up), stitched edges colored per stitch."""
    polys = {p.name: [loop_polygon(p, li, 32, with_placement=True) for li in range(len(p.loops))]
             for p in pattern.panels}
    allpts = np.vstack([r for rings in polys.values() for r in rings])
    lo, hi = allpts.min(axis=0) - margin, allpts.max(axis=0) + margin
    W, H = (hi - lo) * scale

    def tf(pts):
        q = (np.asarray(pts) - lo) * scale
        return np.column_stack([q[:, 0], H - q[:, 1]])

    body = ['<rect width="100%" height="100%" fill="#ffffff"/>']
    for p in pattern.panels:
        d = " ".join(_path(tf(r)) for r in polys[p.name])
        body.append(f'<path d="{d}" fill="{SIDE_FILL[p.side]}" fill-opacity="0.7" fill-rule="evenodd" '
                    f'stroke="#333333" stroke-width="1"/>')
        c = tf(polys[p.name][0].mean(axis=0, keepdims=True))[0]
        body.append(f'<text x="{_f(c[0])}" y="{_f(c[1])}" font-size="10" text-anchor="middle">{p.name}</text>')
    for si, s in enumerate(pattern.stitches):
        color = STITCH_COLORS[si % len(STITCH_COLORS)]
        for ref in (s.a, s.b):
            panel = pattern.panel(ref.panel)
            for i in ref.indices:
                p0, c, p1 = panel.edge_geometry(i)
                line = edge_polyline(p0, c, p1, 1 if c is None else 32) + np.asarray(panel.placement)
                body.append(f'<path d="{_path(tf(line), closed=False)}" fill="none" stroke="{color}" '
                            f'stroke-width="3"><title>stitch {si}</title></path>')
    return _svg(W, H, body)


def render_tensor(gi: GarmentImage, cell_px: float = 24.0, gap_cells: float = 1.0) -> str:
    """Front and back layers side by side: inside cells shaded, typed lattice edges colored,
    and each inside cell's deformation drawn as a quad built from its edge vectors."""
    G = gi.G
    W = (2 * G + gap_cells) * cell_px
    H = (G + 1) * cell_px
    body = ['<rect width="100%" height="100%" fill="#ffffff"/>']
    for layer in (Layer.FRONT, Layer.BACK):
        ox = layer * (G + gap_cells) * cell_px

        def pt(x, y):
            return ox + x * cell_px, H - cell_px * 0.5 - y * cell_px

        x0, y0 = pt(0, G)
        body.append(f'<text x="{_f(x0)}" y="{_f(cell_px * 0.4)}" font-size="12">{layer.name.lower()}</text>')
        body.append(f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(G * cell_px)}" height="{_f(G * cell_px)}" '
                    f'fill="none" stroke="#dddddd"/>')
        for c, r in gi.inside_cells(layer):
            x, y = pt(c, r + 1)
            body.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(cell_px)}" height="{_f(cell_px)}" fill="#eeeeee"/>')
            b, rt, _, lf = (gi.deform[layer, k, :, r, c].astype(float) for k in range(4))
            corners = np.array([[0, 0], b, b + rt, lf])
            corners = corners - corners.mean(axis=0) + (c + 0.5, r + 0.5)
            q = np.array([pt(*(np.array([c + 0.5, r + 0.5]) + 0.8 * (p - (c + 0.5, r + 0.5)))) for p in corners])
            body.append(f'<path d="{_path(q)}" fill="#ffb347" fill-opacity="0.6" stroke="#a05a00" stroke-width="0.6"/>')
        for le in gi.lattice_edges():
            t = gi.edge_type(layer, le)
            if t == EdgeType.NON_BOUNDARY:
                continue
            x, y, o = le
            (ax, ay), (bx, by) = pt(x, y), pt(x + 1, y) if o == "h" else pt(x, y + 1)
            body.append(f'<line x1="{_f(ax)}" y1="{_f(ay)}" x2="{_f(bx)}" y2="{_f(by)}" '
                        f'stroke="{EDGE_COLORS[t]}" stroke-width="2.5"/>')
    return _svg(W, H, body)
