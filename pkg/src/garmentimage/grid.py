"""GarmentImage: two G x G cell layers with flags, edge types and deformation vectors.

Array conventions: row index = lattice y (row 0 at the canvas bottom), column = lattice x.
Each cell owns the type of its bottom and left lattice edges and the deformation vectors
of all four of its quad edges (bottom, right, top, left; horizontal edges point +x,
vertical edges point +y), in grid units.

Tensor layout per layer (17 channels, front layer first, back layer at +17):
    0       inside flag
    1-4     bottom edge type, one-hot
    5-8     left edge type, one-hot
    9-10    bottom deformation vector
    11-12   left deformation vector
    13-14   right deformation vector
    15-16   top deformation vector
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterator

import numpy as np

from .lsq import Cell, LatticeEdge

CHANNELS_PER_LAYER = 17
CHANNELS = 2 * CHANNELS_PER_LAYER
HEADER_MAGIC = "GIMG1"

BOTTOM, RIGHT, TOP, LEFT = range(4)


class EdgeType(IntEnum):
    NON_BOUNDARY = 0
    NON_STITCH = 1
    FRONT_TO_BACK = 2
    SIDE_BY_SIDE = 3


class Layer(IntEnum):
    FRONT = 0
    BACK = 1

    @property
    def letter(self) -> str:
        return "f" if self is Layer.FRONT else "b"


class TensorError(ValueError):
    pass


@dataclass
class GarmentImage:
    inside: np.ndarray                  # (2, G, G) bool
    types: np.ndarray                   # (2, 2, G, G) int8: [layer, bottom|left, row, col]
    deform: np.ndarray                  # (2, 4, 2, G, G) float32: [layer, edge, xy, row, col]
    origin: tuple[float, float] = (0.0, 0.0)
    cell_size: float = 1.0

    @classmethod
    def empty(cls, G: int, origin=(0.0, 0.0), cell_size: float = 1.0) -> "GarmentImage":
        if G < 2:
            raise ValueError("grid size must be at least 2")
        return cls(np.zeros((2, G, G), dtype=bool),
                   np.zeros((2, 2, G, G), dtype=np.int8),
                   np.zeros((2, 4, 2, G, G), dtype=np.float32),
                   (float(origin[0]), float(origin[1])), float(cell_size))

    @property
    def G(self) -> int:
        return self.inside.shape[-1]

    def copy(self) -> "GarmentImage":
        return GarmentImage(self.inside.copy(), self.types.copy(), self.deform.copy(), self.origin, self.cell_size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GarmentImage):
            return NotImplemented
        return (self.origin == other.origin and self.cell_size == other.cell_size
                and np.array_equal(self.inside, other.inside)
                and np.array_equal(self.types, other.types)
                and np.array_equal(self.deform.view(np.uint32), other.deform.view(np.uint32)))

    # -- cells and lattice edges ------------------------------------------------

    def in_grid(self, cell: Cell) -> bool:
        c, r = cell
        return 0 <= c < self.G and 0 <= r < self.G

    def is_inside(self, layer: int, cell: Cell) -> bool:
        return self.in_grid(cell) and bool(self.inside[layer, cell[1], cell[0]])

    def storable(self, edge: LatticeEdge) -> bool:
        x, y, o = edge
        return 0 <= x < self.G and 0 <= y < self.G

    def edge_type(self, layer: int, edge: LatticeEdge) -> EdgeType:
        x, y, o = edge
        if not self.storable(edge):
            return EdgeType.NON_BOUNDARY
        return EdgeType(int(self.types[layer, 0 if o == "h" else 1, y, x]))

    def set_edge_type(self, layer: int, edge: LatticeEdge, t: EdgeType) -> None:
        x, y, o = edge
        if not self.storable(edge):
            if t != EdgeType.NON_BOUNDARY:
                raise IndexError(f"lattice edge {edge} has no storage in a {self.G}x{self.G} grid")
            return
        self.types[layer, 0 if o == "h" else 1, y, x] = int(t)

    def lattice_edges(self) -> Iterator[LatticeEdge]:
        G = self.G
        for y in range(G):
            for x in range(G):
                yield (x, y, "h")
                yield (x, y, "v")

    def inside_cells(self, layer: int) -> list[Cell]:
        rows, cols = np.nonzero(self.inside[layer])
        return sorted(zip(cols.tolist(), rows.tolist()), key=lambda c: (c[1], c[0]))

    def to_grid_units(self, p) -> np.ndarray:
        return (np.asarray(p, dtype=float) - np.asarray(self.origin)) / self.cell_size

    def to_canvas(self, q) -> np.ndarray:
        return np.asarray(q, dtype=float) * self.cell_size + np.asarray(self.origin)


def edge_cells(edge: LatticeEdge) -> tuple[Cell, Cell]:
    """The two cells sharing a lattice edge: (below, above) or (left, right)."""
    x, y, o = edge
    if o == "h":
        return (x, y - 1), (x, y)
    return (x - 1, y), (x, y)


def cell_edges(cell: Cell) -> tuple[LatticeEdge, LatticeEdge, LatticeEdge, LatticeEdge]:
    """Bottom, right, top, left lattice edges of a cell."""
    c, r = cell
    return (c, r, "h"), (c + 1, r, "v"), (c, r + 1, "h"), (c, r, "v")


def full_deformation_matrix(gi: GarmentImage, layer: int, cell: Cell) -> np.ndarray:
    """2 x 4 matrix whose columns are the bottom, right, top, left deformation vectors."""
    if not gi.is_inside(layer, cell):
        raise ValueError(f"cell {cell} on layer {Layer(layer).name} is outside")
    c, r = cell
    return gi.deform[layer, :, :, r, c].T.astype(np.float64)


# -- tensor conversion ------------------------------------------------------------


def to_tensor(gi: GarmentImage) -> np.ndarray:
    G = gi.G
    t = np.zeros((CHANNELS, G, G), dtype=np.float32)
    for layer in (0, 1):
        base = layer * CHANNELS_PER_LAYER
        t[base] = gi.inside[layer]
        for k, off in ((0, 1), (1, 5)):
            onehot = np.eye(4, dtype=np.float32)[gi.types[layer, k].astype(int)]  # (G, G, 4)
            t[base + off: base + off + 4] = np.moveaxis(onehot, -1, 0)
        for k, edge in enumerate((BOTTOM, LEFT, RIGHT, TOP)):
            t[base + 9 + 2 * k: base + 11 + 2 * k] = gi.deform[layer, edge]
    return t


def from_tensor(t: np.ndarray, origin=(0.0, 0.0), cell_size: float = 1.0) -> GarmentImage:
    """Inverse of :func:`to_tensor`. Flags threshold at 0.5; edge types by per-edge argmax."""
    t = np.asarray(t)
    if t.ndim != 3 or t.shape[0] != CHANNELS or t.shape[1] != t.shape[2]:
        raise TensorError(f"expected shape ({CHANNELS}, G, G), got {t.shape}")
    if not np.all(np.isfinite(t)):
        raise TensorError("tensor contains non-finite values")
    t = t.astype(np.float32, copy=False)
    gi = GarmentImage.empty(t.shape[1], origin, cell_size)
    for layer in (0, 1):
        base = layer * CHANNELS_PER_LAYER
        gi.inside[layer] = t[base] >= 0.5
        gi.types[layer, 0] = np.argmax(t[base + 1: base + 5], axis=0)
        gi.types[layer, 1] = np.argmax(t[base + 5: base + 9], axis=0)
        for k, edge in enumerate((BOTTOM, LEFT, RIGHT, TOP)):
            gi.deform[layer, edge] = t[base + 9 + 2 * k: base + 11 + 2 * k]
    return gi


def onehot_violations(t: np.ndarray) -> list[tuple[int, int, int, int]]:
    """(layer, group 0=bottom/1=left, row, col) of edge groups that are not exactly one-hot."""
    out = []
    for layer in (0, 1):
        base = layer * CHANNELS_PER_LAYER
        for g, off in ((0, 1), (1, 5)):
            grp = t[base + off: base + off + 4]
            ok = np.all((grp == 0) | (grp == 1), axis=0) & (grp.sum(axis=0) == 1)
            for r, c in zip(*np.nonzero(~ok)):
                out.append((layer, g, int(r), int(c)))
    return out


# -- tensor file ------------------------------------------------------------------


def write_tensor(t: np.ndarray, path: str | Path | io.BufferedIOBase) -> None:
    t = np.ascontiguousarray(t, dtype="<f4")
    header = f"{HEADER_MAGIC} {t.shape[0]} {t.shape[1]} {t.shape[2]}\n".encode()
    data = header + t.tobytes(order="C")
    if isinstance(path, (str, Path)):
        Path(path).write_bytes(data)
    else:
        path.write(data)


def read_tensor(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise TensorError("missing header line")
    parts = raw[:nl].decode("utf-8", errors="replace").split()
    if len(parts) != 4 or parts[0] != HEADER_MAGIC:
        raise TensorError(f"bad header {raw[:nl]!r}")
    shape = tuple(int(p) for p in parts[1:])
    body = raw[nl + 1:]
    if len(body) != 4 * int(np.prod(shape)):
        raise TensorError(f"payload size {len(body)} does not match shape {shape}")
    return np.frombuffer(body, dtype="<f4").reshape(shape).astype(np.float32)
