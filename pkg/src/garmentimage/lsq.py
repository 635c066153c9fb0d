"""Quad meshes over lattice cells and the two sparse least-squares deformations.

Lattice edges are named ``(x, y, "h")`` for the horizontal edge (x, y)->(x+1, y) and
``(x, y, "v")`` for the vertical edge (x, y)->(x, y+1). Cells are ``(col, row)`` with
corners at integer lattice points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

Cell = tuple[int, int]
LatticeEdge = tuple[int, int, str]


class SolverError(ValueError):
    """Singular or ill-posed deformation problem."""


@dataclass(frozen=True)
class BoundaryConstraint:
    vertex: int
    target: tuple[float, float]


@dataclass
class QuadMesh:
    """Vertices sit on lattice points; a lattice point split by a cut has several copies."""

    vertices: np.ndarray          # (V, 2) float, undeformed positions
    edges: np.ndarray             # (E, 2) int, directed +x / +y
    edge_lattice: list[LatticeEdge]
    cells: list[Cell]
    cell_vertices: np.ndarray     # (C, 4) int: bottom-left, bottom-right, top-right, top-left

    def cell_edges(self) -> np.ndarray:
        """(C, 4) mesh-edge index of each cell's bottom, right, top, left edge."""
        lookup = {(int(i), int(j)): k for k, (i, j) in enumerate(self.edges)}
        out = np.empty((len(self.cells), 4), dtype=int)
        for c, (bl, br, tr, tl) in enumerate(self.cell_vertices):
            out[c] = (lookup[(bl, br)], lookup[(br, tr)], lookup[(tl, tr)], lookup[(bl, tl)])
        return out

    def boundary_loops(self) -> list[list[tuple[int, LatticeEdge, Cell]]]:
        """Boundary walks (outer loops CCW, holes CW).

        Each step is ``(start vertex, lattice edge, owning cell)``; the step runs from the
        start vertex to the start vertex of the next step.
        """
        half = {}
        for c, (bl, br, tr, tl) in enumerate(self.cell_vertices):
            col, row = self.cells[c]
            for a, b, le in ((bl, br, (col, row, "h")), (br, tr, (col + 1, row, "v")),
                             (tr, tl, (col, row + 1, "h")), (tl, bl, (col, row, "v"))):
                half[(int(a), int(b))] = (le, self.cells[c])
        nxt = {}
        for (a, b), info in half.items():
            if (b, a) not in half:
                if a in nxt:
                    raise SolverError(f"non-manifold boundary at vertex {a}")
                nxt[a] = (b, info)
        loops, seen = [], set()
        for start in sorted(nxt, key=lambda v: (self.vertices[v][1], self.vertices[v][0], v)):
            if start in seen:
                continue
            loop, v = [], start
            while v not in seen:
                seen.add(v)
                b, (le, cell) = nxt[v]
                loop.append((v, le, cell))
                v = b
            loops.append(loop)
        return loops


def _quadrant_cells(x: int, y: int) -> list[Cell]:
    # SW, SE, NE, NW cells around lattice point (x, y)
    return [(x - 1, y - 1), (x, y - 1), (x, y), (x - 1, y)]


def _separating_edges(x: int, y: int) -> list[LatticeEdge]:
    # edge between quadrant k and k+1 (cyclic)
    return [(x, y - 1, "v"), (x, y, "h"), (x, y, "v"), (x - 1, y, "h")]


def cells_connected(cells: Iterable[Cell]) -> bool:
    cells = set(cells)
    if not cells:
        return False
    start = min(cells)
    stack, seen = [start], {start}
    while stack:
        c, r = stack.pop()
        for nb in ((c + 1, r), (c - 1, r), (c, r + 1), (c, r - 1)):
            if nb in cells and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(cells)


def build_quad_mesh(cells: Iterable[Cell], cuts: Iterable[LatticeEdge] = ()) -> QuadMesh:
    """Quad mesh over a 4-connected cell set.

    Lattice edges listed in ``cuts`` are split: lattice points along them get one vertex
    copy per side, so the mesh can open there (darts, slits).
    """
    cells = sorted(set(cells), key=lambda c: (c[1], c[0]))
    if not cells:
        raise SolverError("empty cell set")
    if not cells_connected(cells):
        raise SolverError("cell set is not 4-connected")
    cellset = set(cells)
    cutset = set(cuts)
    points = sorted({(c + dx, r + dy) for c, r in cells for dx in (0, 1) for dy in (0, 1)},
                    key=lambda p: (p[1], p[0]))
    corner_of: dict[tuple[Cell, tuple[int, int]], int] = {}
    verts: list[tuple[int, int]] = []
    for x, y in points:
        quads = _quadrant_cells(x, y)
        seps = _separating_edges(x, y)
        present = [q in cellset for q in quads]
        parent = list(range(4))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for k in range(4):
            k2 = (k + 1) % 4
            if present[k] and present[k2] and seps[k] not in cutset:
                parent[find(k2)] = find(k)
        groups: dict[int, int] = {}
        for k in range(4):
            if present[k]:
                root = find(k)
                if root not in groups:
                    groups[root] = len(verts)
                    verts.append((x, y))
                corner_of[(quads[k], (x, y))] = groups[root]
    cell_vertices = np.array([[corner_of[((c, r), (c, r))], corner_of[((c, r), (c + 1, r))],
                               corner_of[((c, r), (c + 1, r + 1))], corner_of[((c, r), (c, r + 1))]]
                              for c, r in cells], dtype=int)
    edge_index: dict[tuple[int, int], int] = {}
    edges, lattice = [], []
    for (c, r), (bl, br, tr, tl) in zip(cells, cell_vertices):
        for a, b, le in ((bl, br, (c, r, "h")), (tl, tr, (c, r + 1, "h")),
                         (bl, tl, (c, r, "v")), (br, tr, (c + 1, r, "v"))):
            key = (int(a), int(b))
            if key not in edge_index:
                edge_index[key] = len(edges)
                edges.append(key)
                lattice.append(le)
    order = sorted(range(len(edges)), key=lambda k: (lattice[k][2] == "v", lattice[k][1], lattice[k][0], edges[k]))
    edges = [edges[k] for k in order]
    lattice = [lattice[k] for k in order]
    return QuadMesh(np.asarray(verts, dtype=float), np.asarray(edges, dtype=int).reshape(-1, 2),
                    lattice, cells, cell_vertices)


def incidence(mesh: QuadMesh) -> sp.csr_matrix:
    """(E, V) difference operator: row e gives v_j - v_i."""
    E, V = len(mesh.edges), len(mesh.vertices)
    rows = np.repeat(np.arange(E), 2)
    cols = mesh.edges.ravel()
    vals = np.tile([-1.0, 1.0], E)
    return sp.csr_matrix((vals, (rows, cols)), shape=(E, V))


def _check_connected(mesh: QuadMesh) -> None:
    V = len(mesh.vertices)
    adj = sp.coo_matrix((np.ones(len(mesh.edges)), (mesh.edges[:, 0], mesh.edges[:, 1])), shape=(V, V))
    n, _ = connected_components(adj, directed=False)
    if n != 1:
        raise SolverError(f"mesh has {n} connected components")


def solve_constrained(mesh: QuadMesh, constraints: Sequence[BoundaryConstraint],
                      edge_targets: np.ndarray | None = None) -> np.ndarray:
    """Minimize sum over edges of |(x_j - x_i) - (v_j - v_i)|^2 with x_k = target_k.

    Fixed vertices are eliminated and the reduced SPD system is factored once and
    solved for both coordinates. ``edge_targets`` overrides the undeformed edge vectors.
    """
    V = len(mesh.vertices)
    if not constraints:
        raise SolverError("singular system: no constraints")
    _check_connected(mesh)
    fixed = np.zeros(V, dtype=bool)
    x = np.zeros((V, 2))
    for bc in constraints:
        if not 0 <= bc.vertex < V:
            raise SolverError(f"constraint on missing vertex {bc.vertex}")
        if fixed[bc.vertex]:
            raise SolverError(f"two constraints on vertex {bc.vertex}")
        t = np.asarray(bc.target, dtype=float)
        if not np.all(np.isfinite(t)):
            raise SolverError(f"non-finite target for vertex {bc.vertex}")
        fixed[bc.vertex] = True
        x[bc.vertex] = t
    D = incidence(mesh).tocsc()
    d = D @ mesh.vertices if edge_targets is None else np.asarray(edge_targets, dtype=float)
    if not np.all(np.isfinite(d)):
        raise SolverError("non-finite edge targets")
    free = np.flatnonzero(~fixed)
    if free.size == 0:
        return x
    Df, Dc = D[:, free], D[:, np.flatnonzero(fixed)]
    A = (Df.T @ Df).tocsc()
    rhs = Df.T @ (d - Dc @ x[fixed])
    try:
        x[free] = splu(A).solve(np.ascontiguousarray(rhs))
    except RuntimeError as exc:
        raise SolverError(f"singular system: {exc}") from exc
    return x


def solve_anchored(mesh: QuadMesh, edge_targets: np.ndarray, anchor_weight: float = 1.0,
                   anchors: np.ndarray | None = None) -> np.ndarray:
    """Minimize sum_e |(x_j - x_i) - f_e|^2 + w * sum_i |x_i - v_i|^2."""
    if anchor_weight < 0:
        raise SolverError("anchor weight must be non-negative")
    if anchor_weight == 0:
        raise SolverError("rank-deficient system: zero anchor weight leaves translation free")
    f = np.asarray(edge_targets, dtype=float)
    if f.shape != (len(mesh.edges), 2) or not np.all(np.isfinite(f)):
        raise SolverError("edge targets must be finite with one vector per mesh edge")
    g = mesh.vertices if anchors is None else np.asarray(anchors, dtype=float)
    D = incidence(mesh).tocsc()
    A = (D.T @ D + anchor_weight * sp.identity(len(g), format="csc")).tocsc()
    rhs = D.T @ f + anchor_weight * g
    return splu(A).solve(np.ascontiguousarray(rhs))


def edge_objective(mesh: QuadMesh, x: np.ndarray, f: np.ndarray) -> float:
    r = incidence(mesh) @ x - f
    return float(np.sum(r * r))


def anchored_objective(mesh: QuadMesh, x: np.ndarray, f: np.ndarray, w: float,
                       anchors: np.ndarray | None = None) -> float:
    g = mesh.vertices if anchors is None else anchors
    return edge_objective(mesh, x, f) + w * float(np.sum((x - g) ** 2))


def constraint_map(constraints: Mapping[int, Sequence[float]]) -> list[BoundaryConstraint]:
    return [BoundaryConstraint(int(k), (float(v[0]), float(v[1]))) for k, v in sorted(constraints.items())]
