"""Sewing pattern -> GarmentImage."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .grid import EdgeType, GarmentImage, Layer, edge_cells
from .lsq import BoundaryConstraint, Cell, LatticeEdge, QuadMesh, SolverError, build_quad_mesh, solve_constrained
from .pattern import (Panel, PanelEdge, PatternError, Point2, Polyline, SeamRef, Side, SewingPattern, Stitch,
                      loop_polygon, make_panel, make_pattern, point_at_arclength, points_in_polygons,
                      sample_boundary, signed_area)


class EncodeError(ValueError):
    """Encoding failed; ``violations`` carries validation findings when that was the cause."""

    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass(frozen=True)
class GridConfig:
    grid_size: int = 16
    origin: Point2 = (-64.0, -6.0)
    extent: float = 128.0
    margin_cells: int = 1

    def __post_init__(self):
        if self.grid_size < 4:
            raise ValueError("grid_size must be at least 4")
        if self.margin_cells < 1:
            raise ValueError("margin_cells must be at least 1")
        if not self.extent > 0:
            raise ValueError("extent must be positive")

    @property
    def cell_size(self) -> float:
        return self.extent / self.grid_size


# ---------------------------------------------------------------------------
# wrap splitting


def _mirror_edge(e: PanelEdge) -> PanelEdge:
    return e if e.control is None else PanelEdge(e.start, e.end, (e.control[0], -e.control[1]))


def _split_wrap(panel: Panel) -> tuple[Panel, Panel, dict[int, tuple[int, int]], list[Stitch]]:
    """Cut a wrap panel at its vertical bounding-box midline.

    The left half becomes the front; the right half is mirrored onto it and becomes the
    back. The panel is treated as a tube: its leftmost and rightmost edges are joined.
    Returns front, back, old-edge -> (0 front | 1 back, new edge) map, and new stitches.
    """
    outer = loop_polygon(panel, 0, curve_segments=32)
    xmin, xmax = float(outer[:, 0].min()), float(outer[:, 0].max())
    xm = 0.5 * (xmin + xmax)
    tol = 1e-9 * max(1.0, xmax - xmin)
    V = [np.asarray(v, dtype=float) for v in panel.vertices]

    def side(p):
        return 0 if abs(p[0] - xm) <= tol else (-1 if p[0] < xm else 1)

    # walk outer loop, inserting vertices where straight edges cross the midline
    walk: list[tuple[int, PanelEdge | None, int | None]] = []  # (vertex, edge to next, original edge idx)
    verts = list(V)
    for k, e in enumerate(panel.loops[0]):
        p0, p1 = V[e.start], V[e.end]
        s0, s1 = side(p0), side(p1)
        if s0 * s1 < 0:
            if e.control is not None:
                raise EncodeError(f"panel {panel.name!r}: split line crosses curved edge {k}")
            t = (xm - p0[0]) / (p1[0] - p0[0])
            verts.append(np.array([xm, p0[1] + t * (p1[1] - p0[1])]))
            mid = len(verts) - 1
            walk.append((e.start, PanelEdge(e.start, mid), None))
            walk.append((mid, PanelEdge(mid, e.end), None))
        else:
            if e.control is not None:
                cx = point_at_arclength(panel, k, np.linspace(0, 1, 33))[:, 0]
                if np.any(cx < xm - tol) and np.any(cx > xm + tol):
                    raise EncodeError(f"panel {panel.name!r}: split line crosses curved edge {k}")
            walk.append((e.start, e, k))
    n = len(walk)
    sides = [side(verts[w[0]]) for w in walk]
    cuts = []
    for i in range(n):
        if sides[i] != 0:
            continue
        prev = next(sides[(i - j) % n] for j in range(1, n + 1) if sides[(i - j) % n] != 0)
        nxt = next(sides[(i + j) % n] for j in range(1, n + 1) if sides[(i + j) % n] != 0)
        if prev != nxt:
            cuts.append(i)
    if len(cuts) != 2:
        raise EncodeError(f"panel {panel.name!r}: split line does not cut the outline into two loops")

    pieces = []
    for a, b in ((cuts[0], cuts[1]), (cuts[1], cuts[0])):
        idx = [(a + j) % n for j in range(((b - a) % n) + 1)]
        pieces.append(idx)
    cx_of = [np.mean([verts[walk[i][0]][0] for i in idx]) for idx in pieces]
    front_idx, back_idx = (pieces[0], pieces[1]) if cx_of[0] < cx_of[1] else (pieces[1], pieces[0])

    results = []
    edge_maps = []
    for which, idx in ((0, front_idx), (1, back_idx)):
        used = sorted({walk[i][0] for i in idx})
        local = {v: j for j, v in enumerate(used)}
        loop, emap = [], {}
        for i in idx[:-1]:
            _, e, orig = walk[i]
            emap[len(loop)] = orig
            loop.append(PanelEdge(local[e.start], local[e.end], e.control))
        cut_pos = len(loop)
        loop.append(PanelEdge(local[walk[idx[-1]][0]], local[walk[idx[0]][0]]))
        pts = [tuple(verts[v]) for v in used]
        loops = [loop]
        if which == 1:
            pts = [(2 * xm - x, y) for x, y in pts]
            loops = [[_mirror_edge(e) for e in loop]]
        # holes
        for hi in range(1, len(panel.loops)):
            hpoly = loop_polygon(panel, hi)
            if (np.mean(hpoly[:, 0]) < xm) != (which == 0):
                continue
            if np.any(np.sign(hpoly[:, 0] - xm) * (1 if which == 0 else -1) > 0):
                raise EncodeError(f"panel {panel.name!r}: hole {hi} crosses the split line")
            base = len(pts)
            hverts = sorted({v for e in panel.loops[hi] for v in (e.start, e.end)})
            hl = {v: base + j for j, v in enumerate(hverts)}
            for v in hverts:
                x, y = panel.vertices[v]
                pts.append((2 * xm - x, y) if which == 1 else (x, y))
            hloop = []
            for k2, e in enumerate(panel.loops[hi]):
                emap[sum(len(l) for l in loops)] = panel.loop_offset(hi) + k2
                ne = PanelEdge(hl[e.start], hl[e.end], e.control)
                hloop.append(_mirror_edge(ne) if which == 1 else ne)
            loops.append(hloop)
        name = f"{panel.name}_{'front' if which == 0 else 'back'}"
        newp, remap = make_panel(name, pts, loops, Side.FRONT if which == 0 else Side.BACK, panel.placement)
        emap = {remap[k]: v for k, v in emap.items()}
        results.append((newp, remap[cut_pos], emap))

    (front, f_cut, f_map), (back, b_cut, b_map) = results
    old_to_new = {}
    for which, m in ((0, f_map), (1, b_map)):
        for new, old in m.items():
            if old is not None:
                old_to_new[old] = (which, new)
    stitches = [Stitch(SeamRef(front.name, f_cut, f_cut), SeamRef(back.name, b_cut, b_cut))]
    # tube closure: edges lying on the extreme verticals, which coincide after mirroring
    def closure(p: Panel) -> list[int]:
        out = []
        for k, e in enumerate(p.loops[0]):
            (x0, _), (x1, _) = p.vertices[e.start], p.vertices[e.end]
            if e.control is None and abs(x0 - xmin) <= tol and abs(x1 - xmin) <= tol:
                out.append(k)
        return out

    fc, bc = closure(front), closure(back)
    if fc and bc:
        if fc != list(range(fc[0], fc[-1] + 1)) or bc != list(range(bc[0], bc[-1] + 1)):
            raise EncodeError(f"panel {panel.name!r}: tube closure edges are not contiguous")
        stitches.append(Stitch(SeamRef(front.name, fc[0], fc[-1]), SeamRef(back.name, bc[0], bc[-1])))
    return front, back, old_to_new, stitches


def classify_and_split(pattern: SewingPattern) -> SewingPattern:
    """Replace every WRAP panel by a FRONT and a BACK half joined by new stitches."""
    if not any(p.side == Side.WRAP for p in pattern.panels):
        return pattern
    panels: list[Panel] = []
    new_stitches: list[Stitch] = []
    retarget: dict[str, tuple[str, str, dict[int, tuple[int, int]]]] = {}
    for p in pattern.panels:
        if p.side != Side.WRAP:
            panels.append(p)
            continue
        front, back, emap, st = _split_wrap(p)
        panels.extend([front, back])
        new_stitches.extend(st)
        retarget[p.name] = (front.name, back.name, emap)

    def fix(ref: SeamRef) -> SeamRef:
        if ref.panel not in retarget:
            return ref
        fname, bname, emap = retarget[ref.panel]
        mapped = []
        for i in ref.indices:
            if i not in emap:
                raise EncodeError(f"stitch on panel {ref.panel!r} edge {i} crosses the wrap split line")
            mapped.append(emap[i])
        if len({w for w, _ in mapped}) != 1:
            raise EncodeError(f"stitch on panel {ref.panel!r} spans both halves")
        idx = [k for _, k in mapped]
        return SeamRef(fname if mapped[0][0] == 0 else bname, min(idx), max(idx))

    stitches = [Stitch(fix(s.a), fix(s.b)) for s in pattern.stitches] + new_stitches
    try:
        return make_pattern(panels, stitches, pattern.units_per_cm)
    except PatternError as exc:
        raise EncodeError(str(exc)) from exc


# ---------------------------------------------------------------------------
# alignment


@dataclass
class AlignedLayout:
    """Warped boundary polylines in body-plane cm, one list of loops per panel."""

    pattern: SewingPattern
    loops: dict[str, list[Polyline]]
    seams: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def side(self, name: str) -> Side:
        return self.pattern.panel(name).side

    def vertex_positions(self, name: str, loop_idx: int) -> np.ndarray:
        """Warped position of each loop edge's start vertex, in loop order."""
        panel = self.pattern.panel(name)
        pl = self.loops[name][loop_idx]
        return np.array([pl.points[pl.vertex_at[e.start]] for e in panel.loops[loop_idx]])

    def max_seam_gap(self) -> float:
        gap = 0.0
        for a, b in self.seams.values():
            gap = max(gap, _max_dist_to_polyline(a, b), _max_dist_to_polyline(b, a))
        return gap


def _max_dist_to_polyline(pts: np.ndarray, line: np.ndarray) -> float:
    a, b = line[:-1], line[1:]
    d = b - a
    L2 = np.maximum((d * d).sum(axis=1), 1e-300)
    worst = 0.0
    for p in pts:
        t = np.clip(((p - a) * d).sum(axis=1) / L2, 0, 1)
        q = a + t[:, None] * d
        worst = max(worst, float(np.min(np.linalg.norm(q - p, axis=1))))
    return worst


def _seam_points(pl: Polyline, panel: Panel, ref: SeamRef) -> np.ndarray:
    """Indices of polyline points covering a seam, from its first vertex to its last."""
    li, k0 = panel.locate_edge(ref.first)
    start = pl.vertex_at[panel.edges[ref.first].start]
    end = pl.vertex_at[panel.edges[ref.last].end]
    n = len(pl.points)
    count = (end - start) % n
    if count == 0:
        count = n
    return (start + np.arange(count + 1)) % n


def _arclen(pts: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])


def _resample(line: np.ndarray, frac: np.ndarray) -> np.ndarray:
    s = _arclen(line)
    t = frac * s[-1]
    return np.column_stack([np.interp(t, s, line[:, 0]), np.interp(t, s, line[:, 1])])


def _interpolate_loop(disp: np.ndarray, known: np.ndarray, s: np.ndarray, length: float) -> np.ndarray:
    """Fill unknown displacements by linear interpolation in arc length around the loop."""
    if not known.any():
        return np.zeros_like(disp)
    idx = np.flatnonzero(known)
    ks = s[idx]
    ext_s = np.concatenate([ks - length, ks, ks + length])
    ext = np.concatenate([disp[idx]] * 3)
    out = disp.copy()
    unk = ~known
    for d in range(2):
        out[unk, d] = np.interp(s[unk], ext_s, ext[:, d])
    return out


def _traversal_order(pattern: SewingPattern) -> list[tuple[str, bool]]:
    """(panel name, is_component_root) in breadth-first stitch-graph order."""
    adj: dict[str, set[str]] = {p.name: set() for p in pattern.panels}
    for s in pattern.stitches:
        if s.a.panel != s.b.panel:
            adj[s.a.panel].add(s.b.panel)
            adj[s.b.panel].add(s.a.panel)
    areas = {p.name: p.area() for p in pattern.panels}
    fronts = sorted((p.name for p in pattern.panels if p.side == Side.FRONT), key=lambda n: (-areas[n], n))
    rest = sorted((p.name for p in pattern.panels), key=lambda n: (-areas[n], n))
    order, seen = [], set()
    for root in fronts + rest:
        if root in seen:
            continue
        seen.add(root)
        order.append((root, True))
        q = deque([root])
        while q:
            u = q.popleft()
            for v in sorted(adj[u]):
                if v not in seen:
                    seen.add(v)
                    order.append((v, False))
                    q.append(v)
    return order


def _dart_stitches(pattern: SewingPattern) -> list[tuple[str, int, int, int]]:
    """(panel, leg-a edge, leg-b edge, apex vertex) for every self-stitch."""
    out = []
    for s in pattern.stitches:
        if s.a.panel != s.b.panel:
            continue
        p = pattern.panel(s.a.panel)
        if s.a.first != s.a.last or s.b.first != s.b.last:
            raise EncodeError(f"panel {p.name!r}: self-stitch must pair two single edges (dart legs)")
        ea, eb = p.edges[s.a.first], p.edges[s.b.first]
        shared = {ea.start, ea.end} & {eb.start, eb.end}
        if len(shared) != 1:
            raise EncodeError(f"panel {p.name!r}: self-stitched edges {s.a.first}, {s.b.first} do not meet at an apex")
        out.append((p.name, s.a.first, s.b.first, shared.pop()))
    return out


def align_layout(pattern: SewingPattern, cfg: GridConfig) -> AlignedLayout:
    """Place panels at their offsets and warp them so stitched seams coincide."""
    if any(p.side == Side.WRAP for p in pattern.panels):
        raise EncodeError("align_layout requires a split pattern (no WRAP panels)")
    spacing = cfg.cell_size / 8.0
    placed: dict[str, list[Polyline]] = {}
    seams: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for name, is_root in _traversal_order(pattern):
        panel = pattern.panel(name)
        loops = []
        for li in range(len(panel.loops)):
            pl = sample_boundary(panel, li, spacing)
            pl.points = pl.points + np.asarray(panel.placement)
            loops.append(pl)
        outer = loops[0]
        disp = np.zeros_like(outer.points)
        known = np.zeros(len(outer.points), dtype=bool)
        if not is_root:
            for si, s in enumerate(pattern.stitches):
                for mine, other in ((s.a, s.b), (s.b, s.a)):
                    if mine.panel != name or other.panel == name or other.panel not in placed:
                        continue
                    if panel.locate_edge(mine.first)[0] != 0:
                        continue
                    oth_panel = pattern.panel(other.panel)
                    oli = oth_panel.locate_edge(other.first)[0]
                    opl = placed[other.panel][oli]
                    my_idx = _seam_points(outer, panel, mine)
                    target_line = opl.points[_seam_points(opl, oth_panel, other)]
                    mine_pts = outer.points[my_idx]
                    direct = np.linalg.norm(mine_pts[0] - target_line[0]) + np.linalg.norm(mine_pts[-1] - target_line[-1])
                    flipped = np.linalg.norm(mine_pts[0] - target_line[-1]) + np.linalg.norm(mine_pts[-1] - target_line[0])
                    if flipped < direct:
                        target_line = target_line[::-1]
                    frac = _arclen(mine_pts)
                    frac = frac / frac[-1] if frac[-1] > 0 else np.zeros_like(frac)
                    disp[my_idx] = _resample(target_line, frac) - mine_pts
                    known[my_idx] = True
        full = _interpolate_loop(disp, known, outer.s, outer.length)
        outer.points = outer.points + full
        for hl in loops[1:]:
            nearest = np.argmin(np.linalg.norm(hl.points[:, None, :] - outer.points[None, :, :] + full[None], axis=2), axis=1)
            hl.points = hl.points + full[nearest]
        placed[name] = loops
    for si, s in enumerate(pattern.stitches):
        pa, pb = pattern.panel(s.a.panel), pattern.panel(s.b.panel)
        la = placed[s.a.panel][pa.locate_edge(s.a.first)[0]]
        lb = placed[s.b.panel][pb.locate_edge(s.b.first)[0]]
        if s.a.panel != s.b.panel:
            seams[si] = (la.points[_seam_points(la, pa, s.a)], lb.points[_seam_points(lb, pb, s.b)])
    layout = AlignedLayout(pattern, placed, seams)
    _check_overlaps(layout, cfg)
    return layout


def _check_overlaps(layout: AlignedLayout, cfg: GridConfig) -> None:
    from shapely.geometry import Polygon

    polys = {}
    for p in layout.pattern.panels:
        loops = layout.loops[p.name]
        poly = Polygon(loops[0].points, [h.points for h in loops[1:]])
        if not poly.is_valid or signed_area(loops[0].points) <= 0:
            raise EncodeError(f"panel {p.name!r} folds over itself after seam alignment")
        polys[p.name] = poly
    names = [p.name for p in layout.pattern.panels]
    tol = 1e-3 * cfg.cell_size ** 2
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if layout.side(a) != layout.side(b):
                continue
            if polys[a].intersection(polys[b]).area > tol:
                raise EncodeError(f"irreconcilable overlap between panels {a!r} and {b!r}")


# ---------------------------------------------------------------------------
# rasterization and correspondence


@dataclass
class PanelRaster:
    name: str
    layer: Layer
    cells: list[Cell]
    slits: set[LatticeEdge]
    mesh: QuadMesh
    loops: list[list[tuple[int, LatticeEdge, Cell]]]          # mesh boundary walks
    loop_match: list[int]                                      # pattern loop of each walk
    anchors: list[np.ndarray]                                  # walk position of each pattern edge start
    targets: dict[int, np.ndarray] = field(default_factory=dict)  # mesh vertex -> grid-unit target
    params: dict[int, tuple[int, float]] = field(default_factory=dict)  # mesh vertex -> (loop, edge + fraction)
    step_edge: list[np.ndarray] = field(default_factory=list)      # pattern edge per walk step


@dataclass
class Raster:
    owner: np.ndarray                                   # (2, G, G) panel index or -1
    panels: dict[str, PanelRaster]
    types: dict[tuple[int, LatticeEdge], EdgeType]
    correspondence: dict[str, dict[int, tuple[tuple[int, float], np.ndarray]]]  # BoundaryCorrespondence


def _segments_cross(p, q, a, b) -> bool:
    def orient(u, v, w):
        return (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])
    d1, d2 = orient(a, b, p), orient(a, b, q)
    d3, d4 = orient(p, q, a), orient(p, q, b)
    return (d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0 and ((d3 > 0) != (d4 > 0) or d3 == 0 or d4 == 0)


CORNER_WEIGHT = 0.2


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v, axis=1, keepdims=True)
    return v / np.where(n > 0, n, 1.0)


def cyclic_assignment(P: np.ndarray, L: np.ndarray) -> np.ndarray:
    """Strictly increasing cyclic assignment of points P (in order) to loop positions of L
    minimizing total distance. Returns position index for each point of P."""
    K, N = len(P), len(L)
    if K > N:
        raise EncodeError(f"boundary has {N} lattice vertices for {K} pattern vertices")
    cost = np.linalg.norm(P[:, None, :] - L[None, :, :], axis=2)
    # small corner-shape term breaks distance ties in favour of matching turns
    tp_in, tp_out = _unit(P - np.roll(P, 1, axis=0)), _unit(np.roll(P, -1, axis=0) - P)
    tl_in, tl_out = _unit(L - np.roll(L, 1, axis=0)), _unit(np.roll(L, -1, axis=0) - L)
    cost += CORNER_WEIGHT * (np.linalg.norm(tp_in[:, None] - tl_in[None], axis=2)
                             + np.linalg.norm(tp_out[:, None] - tl_out[None], axis=2))
    best, best_path = math.inf, None
    ar = np.arange(N)
    for s in range(N):
        c = cost[:, (s + ar) % N]
        dp = np.full(N, math.inf)
        dp[0] = c[0, 0]
        back = np.zeros((K, N), dtype=int)
        for k in range(1, K):
            pm = np.minimum.accumulate(dp)
            pidx = np.maximum.accumulate(np.where(dp == pm, ar, 0))
            new = np.full(N, math.inf)
            new[1:] = c[k, 1:] + pm[:-1]
            back[k, 1:] = pidx[:-1]
            dp = new
        o = int(np.argmin(dp))
        if dp[o] < best - 1e-12:
            best = float(dp[o])
            path = [o]
            for k in range(K - 1, 0, -1):
                o = back[k, o]
                path.append(o)
            best_path = [(s + q) % N for q in reversed(path)]
    return np.asarray(best_path, dtype=int)


def _cell_centers(cfg: GridConfig) -> np.ndarray:
    G = cfg.grid_size
    cc, rr = np.meshgrid(np.arange(G), np.arange(G))
    return np.column_stack([(cc.ravel() + 0.5), (rr.ravel() + 0.5)]) * cfg.cell_size + np.asarray(cfg.origin)


def rasterize(layout: AlignedLayout, cfg: GridConfig) -> Raster:
    pattern = layout.pattern
    G, cs = cfg.grid_size, cfg.cell_size
    origin = np.asarray(cfg.origin)
    centers = _cell_centers(cfg)
    names = [p.name for p in pattern.panels]
    owner = np.full((2, G, G), -1, dtype=int)
    darts = _dart_stitches(pattern)
    for pi, p in enumerate(pattern.panels):
        layer = 0 if p.side == Side.FRONT else 1
        loops = layout.loops[p.name]
        inside = points_in_polygons(centers, [loops[0].points])
        if len(loops) > 1:
            in_hole = points_in_polygons(centers, [h.points for h in loops[1:]], boundary_inside=False)
            inside &= ~in_hole
        for dname, ea, eb, apex in darts:
            if dname != p.name:
                continue
            tri = _dart_triangle(layout, p, ea, eb, apex)
            inside |= points_in_polygons(centers, [tri])
        grid = inside.reshape(G, G)
        free = (owner[layer] < 0) & grid
        owner[layer][free] = pi
    m = cfg.margin_cells
    if np.any(owner[:, G - m:, :] >= 0) or np.any(owner[:, :, G - m:] >= 0):
        raise EncodeError("garment reaches the top/right margin of the canvas")

    panels: dict[str, PanelRaster] = {}
    for pi, p in enumerate(pattern.panels):
        layer = Layer.FRONT if p.side == Side.FRONT else Layer.BACK
        rows, cols = np.nonzero(owner[layer] == pi)
        cells = sorted(zip(cols.tolist(), rows.tolist()), key=lambda c: (c[1], c[0]))
        if not cells:
            raise EncodeError(f"panel {p.name!r} covers no cell centers at grid size {G}")
        slits: set[LatticeEdge] = set()
        cellset = set(cells)
        for dname, ea, eb, apex in darts:
            if dname != p.name:
                continue
            tri = (_dart_triangle(layout, p, ea, eb, apex) - origin) / cs
            T = tri[1]
            M = 0.5 * (tri[0] + tri[2])
            found = set()
            for c, r in cells:
                for nb, le in (((c + 1, r), (c + 1, r, "v")), ((c, r + 1), (c, r + 1, "h"))):
                    if nb in cellset and _segments_cross((c + .5, r + .5), (nb[0] + .5, nb[1] + .5), M, T):
                        found.add(le)
            if not found:
                raise EncodeError(f"panel {p.name!r}: dart too short for grid size {G}")
            slits |= found
        try:
            mesh = build_quad_mesh(cells, slits)
            walks = mesh.boundary_loops()
        except SolverError as exc:
            raise EncodeError(f"panel {p.name!r}: {exc}") from exc
        panels[p.name] = _correspond(layout, p, layer, cells, slits, mesh, walks, cs, origin)
    types = _edge_types(pattern, owner, panels, names)
    corr = {n: {v: (pr.params[v], t) for v, t in pr.targets.items()} for n, pr in panels.items()}
    return Raster(owner, panels, types, corr)


def _dart_triangle(layout: AlignedLayout, p: Panel, ea: int, eb: int, apex: int) -> np.ndarray:
    pl = layout.loops[p.name][p.locate_edge(ea)[0]]
    e1, e2 = p.edges[ea], p.edges[eb]
    a = e1.start if e1.end == apex else e1.end
    b = e2.start if e2.end == apex else e2.end
    return np.array([pl.points[pl.vertex_at[a]], pl.points[pl.vertex_at[apex]], pl.points[pl.vertex_at[b]]])


def _correspond(layout, p: Panel, layer, cells, slits, mesh, walks, cs, origin) -> PanelRaster:
    areas = [signed_area(mesh.vertices[[w[0] for w in walk]]) for walk in walks]
    outer = [i for i, a in enumerate(areas) if a > 0]
    holes = [i for i, a in enumerate(areas) if a <= 0]
    if len(outer) != 1:
        raise EncodeError(f"panel {p.name!r}: cell block has {len(outer)} outer boundaries")
    if len(holes) != len(p.loops) - 1:
        raise EncodeError(f"panel {p.name!r}: {len(p.loops) - 1} holes in pattern but {len(holes)} in the grid")
    match = [0] * len(walks)
    match[outer[0]] = 0
    remaining = list(range(1, len(p.loops)))
    for h in holes:
        cen = mesh.vertices[[w[0] for w in walks[h]]].mean(axis=0)
        dists = [np.linalg.norm((layout.loops[p.name][li].points.mean(axis=0) - origin) / cs - cen) for li in remaining]
        match[h] = remaining.pop(int(np.argmin(dists)))
    pr = PanelRaster(p.name, layer, cells, slits, mesh, walks, match, [])
    placement = np.asarray(p.placement)
    for wi, walk in enumerate(walks):
        li = match[wi]
        L = mesh.vertices[[w[0] for w in walk]]
        P = (layout.vertex_positions(p.name, li) - origin) / cs
        anchors = cyclic_assignment(P, L)
        pr.anchors.append(anchors)
        N, K = len(walk), len(anchors)
        step_edge = np.empty(N, dtype=int)
        off = p.loop_offset(li)
        for k in range(K):
            a, b = anchors[k], anchors[(k + 1) % K]
            span = (b - a) % N or N
            pos = (a + np.arange(span)) % N
            step_edge[pos] = off + k
            frac = np.arange(span) / span
            pts = point_at_arclength(p, off + k, frac)
            for j, q, f in zip(pos, pts, frac):
                pr.targets[walk[j][0]] = (q + placement - origin) / cs
                pr.params[walk[j][0]] = (li, k + float(f))
        pr.step_edge.append(step_edge)
    return pr


def _edge_types(pattern: SewingPattern, owner, panels: dict[str, PanelRaster], names) -> dict:
    stitched_pairs = set()
    partner_side: dict[tuple[str, int], set[Side]] = {}
    for s in pattern.stitches:
        stitched_pairs.add(frozenset((s.a.panel, s.b.panel)))
        for mine, other in ((s.a, s.b), (s.b, s.a)):
            for i in mine.indices:
                partner_side.setdefault((mine.panel, i), set()).add(pattern.panel(other.panel).side)
    G = owner.shape[-1]

    def own(layer, cell):
        c, r = cell
        return int(owner[layer, r, c]) if 0 <= c < G and 0 <= r < G else -1

    types: dict[tuple[int, LatticeEdge], EdgeType] = {}
    f2b: set[LatticeEdge] = set()
    for name, pr in panels.items():
        pi = names.index(name)
        layer = int(pr.layer)
        my_side = pattern.panel(name).side
        for wi, walk in enumerate(pr.loops):
            for j, (_, le, cell) in enumerate(walk):
                a, b = edge_cells(le)
                across = b if a == cell else a
                q = own(layer, across)
                if le in pr.slits:
                    t = EdgeType.SIDE_BY_SIDE
                elif q >= 0 and q != pi:
                    t = EdgeType.SIDE_BY_SIDE if frozenset((name, names[q])) in stitched_pairs else EdgeType.NON_STITCH
                else:
                    e = int(pr.step_edge[wi][j])
                    sides = partner_side.get((name, e), set())
                    t = EdgeType.NON_STITCH
                    if any(s != my_side for s in sides):
                        f2b.add(le)
                prev = types.get((layer, le))
                if prev is not None and prev != t:
                    t = max(prev, t)
                types[(layer, le)] = t
    for le in f2b:
        if all((layer, le) in types and types[(layer, le)] == EdgeType.NON_STITCH
               and sum(own(layer, c) >= 0 for c in edge_cells(le)) == 1 for layer in (0, 1)):
            types[(0, le)] = types[(1, le)] = EdgeType.FRONT_TO_BACK
    return types


# ---------------------------------------------------------------------------


def deform_panel(pr: PanelRaster) -> np.ndarray:
    """Boundary-constrained deformation of one panel's quad mesh (grid units)."""
    cons = [BoundaryConstraint(v, (float(t[0]), float(t[1]))) for v, t in sorted(pr.targets.items())]
    return solve_constrained(pr.mesh, cons)


def encode(pattern: SewingPattern, cfg: GridConfig | None = None, check: bool = True) -> GarmentImage:
    from .validate import validate

    cfg = cfg or GridConfig()
    split = classify_and_split(pattern)
    layout = align_layout(split, cfg)
    raster = rasterize(layout, cfg)
    gi = GarmentImage.empty(cfg.grid_size, cfg.origin, cfg.cell_size)
    for (layer, le), t in raster.types.items():
        gi.set_edge_type(layer, le, t)
    for name, pr in raster.panels.items():
        try:
            x = deform_panel(pr)
        except SolverError as exc:
            raise EncodeError(f"panel {name!r}: {exc}") from exc
        layer = int(pr.layer)
        for (c, r), (bl, br, tr, tl) in zip(pr.mesh.cells, pr.mesh.cell_vertices):
            gi.inside[layer, r, c] = True
            vecs = (x[br] - x[bl], x[tr] - x[br], x[tr] - x[tl], x[tl] - x[bl])
            for k, v in enumerate(vecs):
                gi.deform[layer, k, :, r, c] = v
    if check:
        violations = validate(gi)
        if violations:
            raise EncodeError(f"encoded image is invalid: {violations[0].format()}", violations)
    return gi
