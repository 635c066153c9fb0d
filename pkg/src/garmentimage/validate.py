"""Detection and rule-based repair of invalid GarmentImages."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grid import EdgeType, GarmentImage, Layer, edge_cells, onehot_violations
from .lsq import LatticeEdge


class ViolationKind(str, Enum):
    NONSTITCH_IN_F2B_CHAIN = "NONSTITCH_IN_F2B_CHAIN"
    NONBOUNDARY_IN_SBS_CHAIN = "NONBOUNDARY_IN_SBS_CHAIN"
    UNPAIRED_F2B = "UNPAIRED_F2B"
    SBS_ON_OUTSIDE_CELL = "SBS_ON_OUTSIDE_CELL"
    DANGLING_BOUNDARY = "DANGLING_BOUNDARY"
    ONEHOT_MALFORMED = "ONEHOT_MALFORMED"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    layer: int
    edge: LatticeEdge | None = None
    cell: tuple[int, int] | None = None
    detail: str = ""

    def format(self) -> str:
        where = (f"edge=({self.edge[0]},{self.edge[1]},{self.edge[2]})" if self.edge is not None
                 else f"cell=({self.cell[0]},{self.cell[1]})")
        return f"{self.kind.value} layer={Layer(self.layer).letter} {where} {self.detail}".rstrip()

    def sort_key(self):
        loc = self.edge if self.edge is not None else (self.cell[0], self.cell[1], "c")
        return (self.layer, loc[1], loc[0], loc[2], self.kind.value)


def _inside_count(gi: GarmentImage, layer: int, le: LatticeEdge) -> int:
    return sum(gi.is_inside(layer, c) for c in edge_cells(le))


def _sbs_degree(gi: GarmentImage, layer: int, x: int, y: int) -> int:
    inc = ((x, y, "h"), (x - 1, y, "h"), (x, y, "v"), (x, y - 1, "v"))
    return sum(gi.edge_type(layer, e) == EdgeType.SIDE_BY_SIDE for e in inc)


def _f2b_gaps(gi: GarmentImage) -> list[tuple[int, LatticeEdge]]:
    from .decoder import cluster_panels

    out = []
    for cl in cluster_panels(gi):
        for walk in cl.mesh.boundary_loops():
            n = len(walk)
            if n < 3:
                continue
            types = [gi.edge_type(cl.layer, le) for _, le, _ in walk]
            for j in range(n):
                if (types[j] == EdgeType.NON_STITCH and types[j - 1] == EdgeType.FRONT_TO_BACK
                        and types[(j + 1) % n] == EdgeType.FRONT_TO_BACK):
                    out.append((int(cl.layer), walk[j][1]))
    return out


def _sbs_gaps(gi: GarmentImage) -> list[tuple[int, LatticeEdge]]:
    out = []
    for layer in (0, 1):
        for le in gi.lattice_edges():
            if gi.edge_type(layer, le) != EdgeType.NON_BOUNDARY or _inside_count(gi, layer, le) != 2:
                continue
            x, y, o = le
            p0, p1 = (x, y), ((x + 1, y) if o == "h" else (x, y + 1))
            if _sbs_degree(gi, layer, *p0) == 1 and _sbs_degree(gi, layer, *p1) == 1:
                out.append((layer, le))
    return out


def validate(gi: GarmentImage) -> list[Violation]:
    """All rule violations, in deterministic (layer, row-major) order; empty iff valid."""
    found: list[Violation] = []
    for layer, le in _f2b_gaps(gi):
        found.append(Violation(ViolationKind.NONSTITCH_IN_F2B_CHAIN, layer, le,
                               detail="NON_STITCH edge between two FRONT_TO_BACK edges"))
    for layer, le in _sbs_gaps(gi):
        found.append(Violation(ViolationKind.NONBOUNDARY_IN_SBS_CHAIN, layer, le,
                               detail="NON_BOUNDARY edge between two SIDE_BY_SIDE edges"))
    for layer in (0, 1):
        for le in gi.lattice_edges():
            t = gi.edge_type(layer, le)
            n_in = _inside_count(gi, layer, le)
            if t == EdgeType.FRONT_TO_BACK:
                if n_in != 1:
                    found.append(Violation(ViolationKind.DANGLING_BOUNDARY, layer, le,
                                           detail=f"FRONT_TO_BACK edge with {n_in} inside cells"))
                elif _inside_count(gi, 1 - layer, le) != 1:
                    found.append(Violation(ViolationKind.UNPAIRED_F2B, layer, le,
                                           detail="no boundary edge at the same position on the opposite layer"))
            elif t == EdgeType.SIDE_BY_SIDE:
                for c in edge_cells(le):
                    if not gi.is_inside(layer, c):
                        found.append(Violation(ViolationKind.SBS_ON_OUTSIDE_CELL, layer, cell=c,
                                               detail=f"cell holding SIDE_BY_SIDE edge ({le[0]},{le[1]},{le[2]}) is outside"))
            elif t == EdgeType.NON_BOUNDARY and n_in == 1:
                found.append(Violation(ViolationKind.DANGLING_BOUNDARY, layer, le,
                                       detail="inside cell not enclosed by a boundary edge"))
            elif t == EdgeType.NON_STITCH and n_in == 0:
                found.append(Violation(ViolationKind.DANGLING_BOUNDARY, layer, le,
                                       detail="boundary edge between two outside cells"))
    return sorted(set(found), key=Violation.sort_key)


def validate_tensor(t: np.ndarray) -> list[Violation]:
    out = []
    for layer, group, r, c in onehot_violations(t):
        le = (c, r, "h" if group == 0 else "v")
        out.append(Violation(ViolationKind.ONEHOT_MALFORMED, layer, le, detail="edge type channels are not one-hot"))
    return out


@dataclass(frozen=True)
class Fix:
    rule: str          # "A" or "B"
    layer: int
    edge: LatticeEdge
    new_type: EdgeType


def repair(gi: GarmentImage) -> tuple[GarmentImage, list[Fix]]:
    """Apply the two retyping rules to a fixpoint.

    Rule A: a NON_STITCH edge between two FRONT_TO_BACK edges becomes FRONT_TO_BACK, and so
    does the boundary edge at the same position on the other layer.
    Rule B: a NON_BOUNDARY edge between two SIDE_BY_SIDE edges becomes SIDE_BY_SIDE.
    """
    out = gi.copy()
    fixes: list[Fix] = []
    for _ in range(max(1, out.G * out.G)):
        matches = [("A", l, e) for l, e in _f2b_gaps(out)] + [("B", l, e) for l, e in _sbs_gaps(out)]
        if not matches:
            break
        for rule, layer, le in sorted(matches, key=lambda m: (m[1], m[2][1], m[2][0], m[2][2])):
            if rule == "A":
                out.set_edge_type(layer, le, EdgeType.FRONT_TO_BACK)
                fixes.append(Fix("A", layer, le, EdgeType.FRONT_TO_BACK))
                other = 1 - layer
                if (_inside_count(out, other, le) == 1
                        and out.edge_type(other, le) != EdgeType.FRONT_TO_BACK):
                    out.set_edge_type(other, le, EdgeType.FRONT_TO_BACK)
                    fixes.append(Fix("A", other, le, EdgeType.FRONT_TO_BACK))
            else:
                out.set_edge_type(layer, le, EdgeType.SIDE_BY_SIDE)
                fixes.append(Fix("B", layer, le, EdgeType.SIDE_BY_SIDE))
    return out, fixes


def format_report(violations: list[Violation]) -> str:
    return "".join(v.format() + "\n" for v in violations)
