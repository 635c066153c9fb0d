import warnings

import numpy as np
import pytest

from garmentimage.grid import EdgeType, GarmentImage, cell_edges, edge_cells
from garmentimage.pattern import SeamRef, Stitch, make_pattern, polygon_panel


def paint_block(gi: GarmentImage, layer: int, cells, identity: bool = True) -> None:
    """Mark cells inside with NON_STITCH on their outer boundary and unit deformation."""
    cells = set(cells)
    for c, r in cells:
        gi.inside[layer, r, c] = True
        if identity:
            gi.deform[layer, :, :, r, c] = [[1, 0], [0, 1], [1, 0], [0, 1]]
    for cell in cells:
        for le in cell_edges(cell):
            a, b = edge_cells(le)
            if (a in cells) != (b in cells):
                gi.set_edge_type(layer, le, EdgeType.NON_STITCH)


def rect_cells(c0, r0, w, h):
    return [(c, r) for r in range(r0, r0 + h) for c in range(c0, c0 + w)]


def f2b_pair_image(G=16, c0=5, r0=3, w=6, h=8) -> GarmentImage:
    """Front and back blocks at the same position; left and right sides FRONT_TO_BACK."""
    gi = GarmentImage.empty(G)
    cells = rect_cells(c0, r0, w, h)
    for layer in (0, 1):
        paint_block(gi, layer, cells)
        for r in range(r0, r0 + h):
            gi.set_edge_type(layer, (c0, r, "v"), EdgeType.FRONT_TO_BACK)
            gi.set_edge_type(layer, (c0 + w, r, "v"), EdgeType.FRONT_TO_BACK)
    return gi


def stacked_sbs_image(G=16, c0=5, w=6) -> GarmentImage:
    """Two front blocks (rows 3-4 and 5-6) joined by a SIDE_BY_SIDE chain along y = 5."""
    gi = GarmentImage.empty(G)
    paint_block(gi, 0, rect_cells(c0, 3, w, 2))
    paint_block(gi, 0, rect_cells(c0, 5, w, 2))
    for x in range(c0, c0 + w):
        gi.set_edge_type(0, (x, 5, "h"), EdgeType.SIDE_BY_SIDE)
    return gi


def random_valid_image(rng: np.random.Generator, G: int = 16) -> GarmentImage:
    """Random rectangles mirrored on both layers, optionally split by an SBS chain, random deformations."""
    gi = GarmentImage.empty(G)
    occupied = np.zeros((G, G), dtype=bool)
    for _ in range(rng.integers(1, 4)):
        w, h = int(rng.integers(2, 6)), int(rng.integers(2, 7))
        c0, r0 = int(rng.integers(0, G - 1 - w)), int(rng.integers(0, G - 1 - h))
        # keep a one-cell gap to other blocks
        if occupied[max(r0 - 1, 0):r0 + h + 1, max(c0 - 1, 0):c0 + w + 1].any():
            continue
        occupied[r0:r0 + h, c0:c0 + w] = True
        cells = rect_cells(c0, r0, w, h)
        f2b = bool(rng.integers(0, 2))
        split = int(rng.integers(r0 + 1, r0 + h)) if h >= 4 and rng.integers(0, 2) else None
        for layer in (0, 1):
            if split is None:
                paint_block(gi, layer, cells)
            else:
                paint_block(gi, layer, rect_cells(c0, r0, w, split - r0))
                paint_block(gi, layer, rect_cells(c0, split, w, r0 + h - split))
                for x in range(c0, c0 + w):
                    gi.set_edge_type(layer, (x, split, "h"), EdgeType.SIDE_BY_SIDE)
            if f2b:
                for r in range(r0, r0 + h):
                    gi.set_edge_type(layer, (c0, r, "v"), EdgeType.FRONT_TO_BACK)
                    gi.set_edge_type(layer, (c0 + w, r, "v"), EdgeType.FRONT_TO_BACK)
    mask = gi.inside[:, None, None, :, :]
    noise = rng.normal(0.0, 0.2, size=gi.deform.shape).astype(np.float32)
    gi.deform = np.where(mask, gi.deform + noise, 0.0).astype(np.float32)
    return gi


def rect_pair_pattern(width=40.0, height=60.0, placement=(-20.0, 20.0)):
    f = polygon_panel("front", [(0, 0), (width, 0), (width, height), (0, height)], "front", placement)
    b = polygon_panel("back", [(0, 0), (width, 0), (width, height), (0, height)], "back", placement)
    return make_pattern([f, b], [Stitch(SeamRef("front", 1, 1), SeamRef("back", 1, 1)),
                                 Stitch(SeamRef("front", 3, 3), SeamRef("back", 3, 3))])


def square_pattern(size=16.0, placement=(-16.0, 10.0)):
    sq = polygon_panel("sq", [(0, 0), (size, 0), (size, size), (0, size)], "front", placement)
    return make_pattern([sq])


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield
