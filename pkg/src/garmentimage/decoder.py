"""GarmentImage -> sewing pattern."""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .grid import EdgeType, GarmentImage, Layer, edge_cells
from .lsq import Cell, LatticeEdge, QuadMesh, build_quad_mesh, solve_anchored
from .pattern import Panel, PanelEdge, SeamRef, Side, SewingPattern, Stitch, signed_area

DEGENERATE_AREA = 0.25  # cell^2
# Anchoring keeps a collapsed prediction near its cells, so also look at the targets themselves.
DEGENERATE_EDGE = 0.5   # cell units, mean target edge length
# Weak anchoring: keeps the system non-singular while letting the edge vectors dominate.
FIDELITY_ANCHOR_WEIGHT = 1e-3


class DecodeError(ValueError):
    pass


@dataclass
class PanelCluster:
    layer: Layer
    cells: list[Cell]
    cuts: set[LatticeEdge] = field(default_factory=set)

    @cached_property
    def mesh(self) -> QuadMesh:
        return build_quad_mesh(self.cells, self.cuts)

    @cached_property
    def walks(self) -> list[list[tuple[int, LatticeEdge, Cell]]]:
        """Boundary walks, outer loop first, each rotated to start at a run boundary."""
        walks = self.mesh.boundary_loops()
        areas = [signed_area(self.mesh.vertices[[s[0] for s in w]]) for w in walks]
        order = sorted(range(len(walks)), key=lambda i: (-areas[i], i))
        return [walks[i] for i in order]


def cluster_panels(gi: GarmentImage) -> list[PanelCluster]:
    """Group inside cells that connect through NON_BOUNDARY edges, per layer."""
    clusters = []
    for layer in (Layer.FRONT, Layer.BACK):
        seen: set[Cell] = set()
        for seed in gi.inside_cells(layer):
            if seed in seen:
                continue
            comp, q = [seed], deque([seed])
            seen.add(seed)
            while q:
                c, r = q.popleft()
                for nb, le in (((c + 1, r), (c + 1, r, "v")), ((c - 1, r), (c, r, "v")),
                               ((c, r + 1), (c, r + 1, "h")), ((c, r - 1), (c, r, "h"))):
                    if nb in seen or not gi.is_inside(layer, nb):
                        continue
                    if gi.edge_type(layer, le) == EdgeType.NON_BOUNDARY:
                        seen.add(nb)
                        comp.append(nb)
                        q.append(nb)
            cells = sorted(comp, key=lambda c: (c[1], c[0]))
            cellset = set(cells)
            cuts = set()
            for c, r in cells:
                for nb, le in (((c + 1, r), (c + 1, r, "v")), ((c, r + 1), (c, r + 1, "h"))):
                    if nb in cellset and gi.edge_type(layer, le) != EdgeType.NON_BOUNDARY:
                        cuts.add(le)
            clusters.append(PanelCluster(layer, cells, cuts))
    return clusters


def edge_targets(cluster: PanelCluster, gi: GarmentImage) -> np.ndarray:
    """Per mesh edge, the mean of the deformation vectors stored by the cells sharing it."""
    mesh = cluster.mesh
    acc = np.zeros((len(mesh.edges), 2))
    cnt = np.zeros(len(mesh.edges))
    for (c, r), slots in zip(mesh.cells, mesh.cell_edges()):
        for k, e in enumerate(slots):
            acc[e] += gi.deform[cluster.layer, k, :, r, c]
            cnt[e] += 1
    return acc / cnt[:, None]


@dataclass
class RecoveredShape:
    positions: np.ndarray       # mesh vertex positions, grid units
    loops: list[list[int]]      # boundary walks as mesh vertex ids
    area: float                 # cell^2
    degenerate: bool


def recover_shape(cluster: PanelCluster, gi: GarmentImage, anchor_weight: float = 1.0,
                  smooth: bool = False) -> RecoveredShape:
    f = edge_targets(cluster, gi)
    x = solve_anchored(cluster.mesh, f, anchor_weight)
    loops = [[s[0] for s in walk] for walk in cluster.walks]
    if smooth:
        x = x.copy()
        for loop in loops:
            for _ in range(3):
                p = x[loop]
                x[loop] = p + 0.5 * (0.5 * (np.roll(p, 1, axis=0) + np.roll(p, -1, axis=0)) - p)
    area = sum(signed_area(x[loop]) for loop in loops)
    collapsed = float(np.linalg.norm(f, axis=1).mean()) < DEGENERATE_EDGE
    return RecoveredShape(x, loops, area, area < DEGENERATE_AREA or collapsed)


def decode_panel(cluster: PanelCluster, gi: GarmentImage, anchor_weight: float = 1.0,
                 name: str = "panel", smooth: bool = False) -> Panel:
    """Panel with one line edge per boundary lattice edge, in cm relative to its placement."""
    shape = recover_shape(cluster, gi, anchor_weight, smooth)
    if shape.degenerate:
        warnings.warn(f"decoded panel {name!r} is degenerate (area {shape.area:.3g} cell^2)", stacklevel=2)
    return _panel_from_shape(cluster, gi, shape, name)


def _panel_from_shape(cluster: PanelCluster, gi: GarmentImage, shape: RecoveredShape, name: str) -> Panel:
    c0 = min(c for c, _ in cluster.cells)
    r0 = min(r for _, r in cluster.cells)
    placement = gi.to_canvas((c0, r0))
    verts, loops = [], []
    for loop in shape.loops:
        base = len(verts)
        verts.extend(gi.to_canvas(shape.positions[v]) - placement for v in loop)
        n = len(loop)
        loops.append(tuple(PanelEdge(base + k, base + (k + 1) % n) for k in range(n)))
    side = Side.FRONT if cluster.layer == Layer.FRONT else Side.BACK
    return Panel(name, tuple((float(x), float(y)) for x, y in verts), tuple(loops), side,
                 (float(placement[0]), float(placement[1])))


# -- stitch recovery ----------------------------------------------------------------


@dataclass
class _Run:
    cluster: int
    kind: EdgeType
    partner: int
    first: int      # flat panel edge index
    last: int
    edges: list[LatticeEdge]


def _rotate_walks(cluster: PanelCluster, labels: list[list[tuple]]) -> None:
    """Rotate each walk (and its labels) so no run wraps past the loop start."""
    walks = cluster.walks
    for wi, walk in enumerate(walks):
        lab = labels[wi]
        n = len(walk)
        start = 0
        for j in range(n):
            if lab[j] != lab[j - 1] or walk[j][1] == walk[j - 1][1]:
                start = j
                break
        walks[wi] = walk[start:] + walk[:start]
        labels[wi] = lab[start:] + lab[:start]


def _runs(ci: int, cluster: PanelCluster, labels: list[list[tuple]]) -> list[_Run]:
    runs, offset = [], 0
    for walk, lab in zip(cluster.walks, labels):
        j, n = 0, len(walk)
        while j < n:
            kind, partner = lab[j]
            k = j + 1
            while k < n and lab[k] == lab[j] and walk[k][1] != walk[k - 1][1]:
                k += 1
            if kind in (EdgeType.SIDE_BY_SIDE, EdgeType.FRONT_TO_BACK):
                runs.append(_Run(ci, kind, partner, offset + j, offset + k - 1, [walk[i][1] for i in range(j, k)]))
            j = k
        offset += n
    return runs


def decode(gi: GarmentImage, anchor_weight: float = 1.0, smooth: bool = False) -> SewingPattern:
    clusters = cluster_panels(gi)
    G = gi.G
    owner = np.full((2, G, G), -1, dtype=int)
    for ci, cl in enumerate(clusters):
        for c, r in cl.cells:
            owner[cl.layer, r, c] = ci

    def own(layer, cell):
        c, r = cell
        return int(owner[layer, r, c]) if 0 <= c < G and 0 <= r < G else -1

    counters = {Layer.FRONT: 0, Layer.BACK: 0}
    names = []
    for cl in clusters:
        names.append(f"{'front' if cl.layer == Layer.FRONT else 'back'}_{counters[cl.layer]}")
        counters[cl.layer] += 1

    all_runs: list[_Run] = []
    for ci, cl in enumerate(clusters):
        labels = []
        for walk in cl.walks:
            lab = []
            for _, le, cell in walk:
                t = gi.edge_type(cl.layer, le)
                partner = -1
                if t == EdgeType.SIDE_BY_SIDE:
                    a, b = edge_cells(le)
                    partner = own(cl.layer, b if a == cell else a)
                elif t == EdgeType.FRONT_TO_BACK:
                    opp = 1 - cl.layer
                    hits = [own(opp, c) for c in edge_cells(le) if own(opp, c) >= 0]
                    if not hits:
                        raise DecodeError(f"FRONT_TO_BACK edge {le} on layer {Layer(cl.layer).letter} has no partner on the opposite layer")
                    partner = hits[0]
                lab.append((t, partner))
            labels.append(lab)
        _rotate_walks(cl, labels)
        all_runs.extend(_runs(ci, cl, labels))

    panels = []
    for ci, cl in enumerate(clusters):
        shape = recover_shape(cl, gi, anchor_weight, smooth)
        if shape.degenerate:
            warnings.warn(f"decoded panel {names[ci]!r} is degenerate (area {shape.area:.3g} cell^2)", stacklevel=2)
        panels.append(_panel_from_shape(cl, gi, shape, names[ci]))

    stitches = []
    used: set[int] = set()
    for i, run in enumerate(all_runs):
        if i in used or run.partner < 0:
            continue
        if run.kind == EdgeType.FRONT_TO_BACK and clusters[run.cluster].layer != Layer.FRONT:
            continue
        mine = set(run.edges)
        best, best_ov = None, 0
        for j, other in enumerate(all_runs):
            if j == i or j in used or other.kind != run.kind:
                continue
            if other.cluster != run.partner or other.partner != run.cluster:
                continue
            ov = len(mine & set(other.edges))
            if ov > best_ov:
                best, best_ov = j, ov
        if best is None:
            continue
        used.update((i, best))
        other = all_runs[best]
        stitches.append(Stitch(SeamRef(names[run.cluster], run.first, run.last),
                               SeamRef(names[other.cluster], other.first, other.last)))
    return SewingPattern(tuple(panels), tuple(stitches), 1.0)
