"""Vector sewing-pattern model: panels, stitches, interchange format, geometry queries."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Sequence

import numpy as np

Point2 = tuple[float, float]

BOUNDARY_TOL = 1e-9


class PatternError(ValueError):
    """Raised for malformed or inconsistent pattern documents."""


class Side(str, Enum):
    FRONT = "front"
    BACK = "back"
    WRAP = "wrap"


@dataclass(frozen=True)
class PanelEdge:
    """One boundary edge. ``control`` is the quadratic control point in edge-local
    coordinates: x along the chord (0 at start, 1 at end), y along the chord's left
    normal, both as fractions of the chord length."""

    start: int
    end: int
    control: Point2 | None = None

    def reversed(self) -> "PanelEdge":
        if self.control is None:
            return PanelEdge(self.end, self.start)
        cx, cy = self.control
        return PanelEdge(self.end, self.start, (1.0 - cx, -cy))


@dataclass(frozen=True)
class Panel:
    name: str
    vertices: tuple[Point2, ...]
    loops: tuple[tuple[PanelEdge, ...], ...]
    side: Side = Side.FRONT
    placement: Point2 = (0.0, 0.0)

    @property
    def edges(self) -> tuple[PanelEdge, ...]:
        """All edges, loop 0 first; stitch edge indices refer to this order."""
        return tuple(e for loop in self.loops for e in loop)

    def loop_offset(self, loop_idx: int) -> int:
        return sum(len(loop) for loop in self.loops[:loop_idx])

    def locate_edge(self, edge_idx: int) -> tuple[int, int]:
        """Flat edge index -> (loop index, index within loop)."""
        for li, loop in enumerate(self.loops):
            if edge_idx < len(loop):
                return li, edge_idx
            edge_idx -= len(loop)
        raise IndexError("edge index out of range")

    def edge_geometry(self, edge_idx: int) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
        """(start, absolute control point or None, end) in panel coordinates."""
        e = self.edges[edge_idx]
        return _edge_points(self.vertices, e)

    def area(self) -> float:
        """Signed-free area: outer loop minus holes, on the flattened polygon."""
        total = 0.0
        for li in range(len(self.loops)):
            total += signed_area(loop_polygon(self, li))
        return total

    def translated(self, offset: Point2) -> "Panel":
        return Panel(self.name, self.vertices, self.loops, self.side,
                     (self.placement[0] + offset[0], self.placement[1] + offset[1]))


@dataclass(frozen=True)
class SeamRef:
    """A contiguous run of edges ``first..last`` (flat indices, inclusive) of one panel loop."""

    panel: str
    first: int
    last: int

    @property
    def indices(self) -> range:
        return range(self.first, self.last + 1)


@dataclass(frozen=True)
class Stitch:
    a: SeamRef
    b: SeamRef


@dataclass(frozen=True)
class SewingPattern:
    panels: tuple[Panel, ...]
    stitches: tuple[Stitch, ...] = ()
    units_per_cm: float = 1.0

    def panel(self, name: str) -> Panel:
        for p in self.panels:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.panels]


# ---------------------------------------------------------------------------
# geometry helpers


def _edge_points(vertices: Sequence[Point2], e: PanelEdge):
    p0 = np.asarray(vertices[e.start], dtype=float)
    p1 = np.asarray(vertices[e.end], dtype=float)
    if e.control is None:
        return p0, None, p1
    d = p1 - p0
    perp = np.array([-d[1], d[0]])
    c = p0 + e.control[0] * d + e.control[1] * perp
    return p0, c, p1


def bezier(p0: np.ndarray, c: np.ndarray, p1: np.ndarray, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)[:, None]
    return (1 - t) ** 2 * p0 + 2 * t * (1 - t) * c + t**2 * p1


def edge_polyline(p0, c, p1, n: int) -> np.ndarray:
    """n+1 points along the edge by uniform parameter subdivision."""
    t = np.linspace(0.0, 1.0, n + 1)
    if c is None:
        return p0 + t[:, None] * (p1 - p0)
    return bezier(p0, c, p1, t)


def signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    if abs(a) < 1e-15:
        return poly.mean(axis=0)
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)


def loop_polygon(panel: Panel, loop_idx: int, curve_segments: int = 16,
                 with_placement: bool = False) -> np.ndarray:
    """Closed loop as an (N, 2) vertex array (last point not repeated)."""
    pts = []
    for e in panel.loops[loop_idx]:
        p0, c, p1 = _edge_points(panel.vertices, e)
        pts.append(edge_polyline(p0, c, p1, 1 if c is None else curve_segments)[:-1])
    poly = np.concatenate(pts, axis=0)
    if with_placement:
        poly = poly + np.asarray(panel.placement)
    return poly


def points_in_polygons(points: np.ndarray, polygons: Iterable[np.ndarray],
                       tol: float = BOUNDARY_TOL, boundary_inside: bool = True) -> np.ndarray:
    """Even-odd containment of ``points`` in the union of closed ``polygons``.

    Points within ``tol`` of any polygon edge count as inside (or, with
    ``boundary_inside=False``, as outside).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    px, py = points[:, 0][:, None], points[:, 1][:, None]
    crossings = np.zeros(len(points), dtype=int)
    on_edge = np.zeros(len(points), dtype=bool)
    for poly in polygons:
        a = poly
        b = np.roll(poly, -1, axis=0)
        ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
        straddle = (ay > py) != (by > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = ax + (py - ay) * (bx - ax) / (by - ay)
        crossings += np.sum(straddle & (px < xint), axis=1)
        dx, dy = bx - ax, by - ay
        L2 = dx * dx + dy * dy
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.clip(((px - ax) * dx + (py - ay) * dy) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
        qx, qy = ax + t * dx, ay + t * dy
        d2 = (px - qx) ** 2 + (py - qy) ** 2
        on_edge |= np.any(d2 <= tol * tol, axis=1)
    if boundary_inside:
        return (crossings % 2 == 1) | on_edge
    return (crossings % 2 == 1) & ~on_edge


def point_in_panel(panel: Panel, p: Point2) -> bool:
    """Even-odd test over all loops in panel coordinates; boundary counts as inside."""
    polys = [loop_polygon(panel, li, curve_segments=64) for li in range(len(panel.loops))]
    return bool(points_in_polygons(np.asarray([p], dtype=float), polys)[0])


@dataclass
class Polyline:
    """Sampled loop: points, source edge per point (flat index), loop arc length per point."""

    points: np.ndarray
    edge: np.ndarray
    s: np.ndarray
    length: float
    vertex_at: dict[int, int] = field(default_factory=dict)  # panel vertex -> point index


def sample_boundary(panel: Panel, loop_idx: int, spacing: float) -> Polyline:
    """Sample a loop so consecutive points are at most ``spacing`` apart.

    Lines are split uniformly; curves by uniform parameter subdivision, refined until
    every chord fits. Every panel vertex on the loop is a sample point.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if not 0 <= loop_idx < len(panel.loops):
        raise IndexError(f"panel {panel.name!r} has no loop {loop_idx}")
    offset = panel.loop_offset(loop_idx)
    pts, edges, vmap = [], [], {}
    for k, e in enumerate(panel.loops[loop_idx]):
        p0, c, p1 = _edge_points(panel.vertices, e)
        chord = float(np.linalg.norm(p1 - p0))
        n = max(1, math.ceil(chord / spacing - 1e-12))
        seg = edge_polyline(p0, c, p1, n)
        if c is not None:
            while np.max(np.linalg.norm(np.diff(seg, axis=0), axis=1)) > spacing:
                n += max(1, n // 4)
                seg = edge_polyline(p0, c, p1, n)
        vmap[e.start] = len(pts)
        pts.extend(seg[:-1])
        edges.extend([offset + k] * (len(seg) - 1))
    points = np.asarray(pts)
    gaps = np.linalg.norm(np.diff(np.vstack([points, points[:1]]), axis=0), axis=1)
    total = float(gaps.sum())
    if total < 2 * spacing:
        raise ValueError(f"degenerate loop {loop_idx} of panel {panel.name!r}: length {total:g}")
    s = np.concatenate([[0.0], np.cumsum(gaps)[:-1]])
    return Polyline(points, np.asarray(edges, dtype=int), s, total, vmap)


def edge_length(panel: Panel, edge_idx: int, segments: int = 256) -> float:
    p0, c, p1 = panel.edge_geometry(edge_idx)
    pts = edge_polyline(p0, c, p1, 1 if c is None else segments)
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def point_at_arclength(panel: Panel, edge_idx: int, frac: np.ndarray, segments: int = 128) -> np.ndarray:
    """Points at relative arc length ``frac`` (0..1) along one edge."""
    p0, c, p1 = panel.edge_geometry(edge_idx)
    frac = np.asarray(frac, dtype=float)
    if c is None:
        return p0 + frac[:, None] * (p1 - p0)
    dense = edge_polyline(p0, c, p1, segments)
    cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(dense, axis=0), axis=1))])
    target = frac * cum[-1]
    return np.column_stack([np.interp(target, cum, dense[:, 0]), np.interp(target, cum, dense[:, 1])])


# ---------------------------------------------------------------------------
# construction / validation


def _normalize_loops(vertices, loops) -> tuple[tuple[tuple[PanelEdge, ...], ...], dict[int, int]]:
    """Orient loop 0 CCW and holes CW. Returns new loops and old->new flat edge index map."""
    out, remap, flat = [], {}, 0
    new_flat = 0
    for li, loop in enumerate(loops):
        tmp = Panel("_", tuple(vertices), (tuple(loop),))
        area = signed_area(loop_polygon(tmp, 0))
        want_ccw = li == 0
        if (area > 0) != want_ccw:
            n = len(loop)
            loop = tuple(e.reversed() for e in reversed(loop))
            for k in range(n):
                remap[flat + k] = new_flat + (n - 1 - k)
        else:
            for k in range(len(loop)):
                remap[flat + k] = new_flat + k
        flat += len(loop)
        new_flat += len(loop)
        out.append(tuple(loop))
    return tuple(out), remap


def make_panel(name: str, vertices: Sequence[Point2], loops: Sequence[Sequence[PanelEdge]],
               side: Side | str = Side.FRONT, placement: Point2 = (0.0, 0.0)) -> tuple[Panel, dict[int, int]]:
    """Build a checked, orientation-normalized panel; also returns the edge index remap."""
    verts = tuple((float(x), float(y)) for x, y in vertices)
    if not all(math.isfinite(c) for v in verts for c in v):
        raise PatternError(f"panel {name!r}: non-finite vertex")
    if not loops:
        raise PatternError(f"panel {name!r}: no loops")
    for li, loop in enumerate(loops):
        if len(loop) < 2:
            raise PatternError(f"panel {name!r}: loop {li} has fewer than 2 edges")
        for k, e in enumerate(loop):
            if e.start == e.end:
                raise PatternError(f"panel {name!r}: loop {li} edge {k} starts and ends at vertex {e.start}")
            for v in (e.start, e.end):
                if not 0 <= v < len(verts):
                    raise PatternError(f"panel {name!r}: loop {li} edge {k} references missing vertex {v}")
            nxt = loop[(k + 1) % len(loop)]
            if e.end != nxt.start:
                raise PatternError(f"panel {name!r}: loop {li} is open at edge {k}")
    normalized, remap = _normalize_loops(verts, loops)
    panel = Panel(name, verts, normalized, Side(side), (float(placement[0]), float(placement[1])))
    _check_simple(panel)
    return panel, remap


def _check_simple(panel: Panel) -> None:
    from shapely.geometry import LinearRing

    for li in range(len(panel.loops)):
        poly = loop_polygon(panel, li)
        if len(poly) >= 3 and not LinearRing(poly).is_simple:
            raise PatternError(f"panel {panel.name!r}: loop {li} self-intersects")


def check_stitches(panels: Sequence[Panel], stitches: Sequence[Stitch]) -> None:
    by_name = {p.name: p for p in panels}
    used: dict[tuple[str, int], int] = {}
    for si, st in enumerate(stitches):
        if st.a == st.b:
            raise PatternError(f"stitch {si}: both sides reference the same seam")
        for ref in (st.a, st.b):
            if ref.panel not in by_name:
                raise PatternError(f"stitch {si}: dangling reference to panel {ref.panel!r}")
            p = by_name[ref.panel]
            n = len(p.edges)
            if not (0 <= ref.first <= ref.last < n):
                raise PatternError(f"stitch {si}: edge range [{ref.first}, {ref.last}] invalid for panel {ref.panel!r}")
            if p.locate_edge(ref.first)[0] != p.locate_edge(ref.last)[0]:
                raise PatternError(f"stitch {si}: edge range spans two loops of panel {ref.panel!r}")
            for i in ref.indices:
                if (ref.panel, i) in used:
                    raise PatternError(f"stitch {si}: edge {i} of panel {ref.panel!r} already used by stitch {used[(ref.panel, i)]}")
                used[(ref.panel, i)] = si


def make_pattern(panels: Sequence[Panel], stitches: Sequence[Stitch] = (), units_per_cm: float = 1.0) -> SewingPattern:
    names = [p.name for p in panels]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise PatternError(f"duplicate panel name {sorted(dup)[0]!r}")
    check_stitches(panels, stitches)
    return SewingPattern(tuple(panels), tuple(stitches), float(units_per_cm))


# ---------------------------------------------------------------------------
# interchange document


def _remap_ref(ref: SeamRef, remap: dict[int, int]) -> SeamRef:
    a, b = remap.get(ref.first, ref.first), remap.get(ref.last, ref.last)
    return SeamRef(ref.panel, min(a, b), max(a, b))


def pattern_from_dict(doc: dict[str, Any]) -> SewingPattern:
    try:
        panels, remaps = [], {}
        for pd in doc["panels"]:
            name = str(pd["name"])
            loops = []
            for loop in pd["loops"]:
                edges = []
                for ed in loop:
                    i, j = ed["v"]
                    curve = ed.get("curve")
                    edges.append(PanelEdge(int(i), int(j), None if curve is None else (float(curve[0]), float(curve[1]))))
                loops.append(edges)
            panel, remap = make_panel(name, [tuple(v) for v in pd["vertices"]], loops,
                                      pd.get("side", "front"), tuple(pd.get("placement", (0.0, 0.0))))
            panels.append(panel)
            remaps[name] = remap
        stitches = []
        for sd in doc.get("stitches", []):
            refs = []
            for key in ("a", "b"):
                r = sd[key]
                e0, e1 = r["edges"]
                ref = SeamRef(str(r["panel"]), int(e0), int(e1))
                if ref.panel in remaps:
                    ref = _remap_ref(ref, remaps[ref.panel])
                refs.append(ref)
            stitches.append(Stitch(*refs))
        return make_pattern(panels, stitches, float(doc.get("units_per_cm", 1.0)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, PatternError):
            raise
        raise PatternError(f"malformed pattern document: {exc!r}") from exc


def parse_pattern(text: str) -> SewingPattern:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PatternError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise PatternError("syntax error at line 1 column 1: top level must be an object")
    return pattern_from_dict(doc)


def _num(x: float) -> float:
    x = round(float(x), 6)
    return 0.0 if x == 0 else x


def pattern_to_dict(pattern: SewingPattern) -> dict[str, Any]:
    panels = []
    for p in pattern.panels:
        loops = []
        for loop in p.loops:
            items = []
            for e in loop:
                d: dict[str, Any] = {"v": [e.start, e.end]}
                if e.control is not None:
                    d["curve"] = [_num(e.control[0]), _num(e.control[1])]
                items.append(d)
            loops.append(items)
        panels.append({
            "name": p.name,
            "side": p.side.value,
            "placement": [_num(p.placement[0]), _num(p.placement[1])],
            "vertices": [[_num(x), _num(y)] for x, y in p.vertices],
            "loops": loops,
        })
    stitches = [{"a": {"panel": s.a.panel, "edges": [s.a.first, s.a.last]},
                 "b": {"panel": s.b.panel, "edges": [s.b.first, s.b.last]}} for s in pattern.stitches]
    return {"units_per_cm": pattern.units_per_cm, "panels": panels, "stitches": stitches}


def serialize_pattern(pattern: SewingPattern) -> str:
    return json.dumps(pattern_to_dict(pattern), indent=1) + "\n"


def polygon_panel(name: str, points: Sequence[Point2], side: Side | str = Side.FRONT,
                  placement: Point2 = (0.0, 0.0), holes: Sequence[Sequence[Point2]] = ()) -> Panel:
    """Convenience: straight-edged panel from an outer polygon and optional hole polygons."""
    verts: list[Point2] = []
    loops = []
    for ring in [points, *holes]:
        base = len(verts)
        verts.extend(ring)
        n = len(ring)
        loops.append([PanelEdge(base + k, base + (k + 1) % n) for k in range(n)])
    return make_panel(name, verts, loops, side, placement)[0]
