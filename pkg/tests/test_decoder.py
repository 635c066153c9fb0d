import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import Polygon

from conftest import f2b_pair_image, paint_block, random_valid_image, rect_cells, square_pattern, stacked_sbs_image
from garmentimage.decoder import (FIDELITY_ANCHOR_WEIGHT, DecodeError, cluster_panels, decode, decode_panel,
                                  edge_targets, recover_shape)
from garmentimage.encoder import classify_and_split, encode
from garmentimage.generator import Template, gen_pattern, midpoint_params, sample_params
from garmentimage.grid import GarmentImage, Layer
from garmentimage.lsq import SolverError
from garmentimage.metrics import boundary_hausdorff, stitch_graph_isomorphic
from garmentimage.pattern import Side, loop_polygon, serialize_pattern
from garmentimage.validate import validate


def square_image(c0=6, r0=2, n=2):
    gi = GarmentImage.empty(16, (-64.0, -6.0), 8.0)
    paint_block(gi, 0, rect_cells(c0, r0, n, n))
    return gi


# -- clustering -------------------------------------------------------------------------


def test_empty_image_has_no_clusters():
    assert cluster_panels(GarmentImage.empty(16)) == []
    assert decode(GarmentImage.empty(16)).panels == ()


def test_two_by_two_block_is_one_cluster():
    cl = cluster_panels(square_image())
    assert len(cl) == 1 and len(cl[0].cells) == 4 and cl[0].layer == Layer.FRONT


def test_side_by_side_chain_splits_clusters():
    cl = cluster_panels(stacked_sbs_image())
    assert [len(c.cells) for c in cl] == [12, 12]


def test_clusters_ordered_by_layer_then_seed():
    gi = f2b_pair_image()
    paint_block(gi, 0, rect_cells(0, 0, 2, 2))
    cl = cluster_panels(gi)
    assert [c.layer for c in cl] == [Layer.FRONT, Layer.FRONT, Layer.BACK]
    assert cl[0].cells[0] == (0, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_clusters_partition_inside_cells(seed):
    gi = random_valid_image(np.random.default_rng(seed))
    cl = cluster_panels(gi)
    for layer in (0, 1):
        cells = [c for k in cl if k.layer == layer for c in k.cells]
        assert len(cells) == len(set(cells))
        assert sorted(cells) == sorted(gi.inside_cells(layer))


# -- shape recovery ----------------------------------------------------------------------


def test_identity_square_is_reproduced():
    gi = square_image()
    cl = cluster_panels(gi)[0]
    shape = recover_shape(cl, gi, 1.0)
    assert np.max(np.abs(shape.positions - cl.mesh.vertices)) <= 1e-6
    panel = decode_panel(cl, gi, 1.0, "sq")
    assert panel.placement == (-16.0, 10.0)
    pts = loop_polygon(panel, 0)
    assert pts.min(axis=0) == pytest.approx((0, 0)) and pts.max(axis=0) == pytest.approx((16, 16))


def test_edge_targets_average_shared_edges():
    gi = square_image()
    gi.deform[0, 1, :, 2, 6] = (0.0, 3.0)  # right edge of (6,2); the neighbour still stores (0,1)
    cl = cluster_panels(gi)[0]
    f = edge_targets(cl, gi)
    shared = [k for k, e in enumerate(cl.mesh.edge_lattice) if e == (7, 2, "v")][0]
    assert np.allclose(f[shared], (0.0, 2.0))


def test_zero_deformation_collapses_with_warning():
    gi = square_image()
    gi.deform[:] = 0.0
    cl = cluster_panels(gi)[0]
    with pytest.warns(UserWarning, match="degenerate"):
        panel = decode_panel(cl, gi, 1.0, "z")
    shape = recover_shape(cl, gi, 1.0)
    assert shape.degenerate
    # with unit anchoring the block shrinks to exactly half size about its centroid
    centroid = cl.mesh.vertices.mean(axis=0)
    assert np.allclose(shape.positions, centroid + 0.5 * (cl.mesh.vertices - centroid), atol=1e-9)
    assert shape.area == pytest.approx(1.0)
    assert recover_shape(cl, gi, FIDELITY_ANCHOR_WEIGHT).area < 0.25
    assert len(panel.edges) == 8


def test_zero_anchor_weight_is_rejected():
    gi = square_image()
    with pytest.raises(SolverError, match="rank-deficient"):
        decode(gi, 0.0)


def test_smoothing_changes_only_boundary_shape():
    gi = square_image(n=4)
    rough = decode(gi)
    smooth = decode(gi, smooth=True)
    assert rough.panels[0].area() > smooth.panels[0].area() > 0


# -- full decode ---------------------------------------------------------------------


def test_square_round_trip_has_no_stitches():
    p = decode(encode(square_pattern()))
    assert len(p.panels) == 1 and p.stitches == ()
    assert p.panels[0].side == Side.FRONT


def test_front_back_pair_gives_stitched_panels():
    p = decode(f2b_pair_image())
    assert [q.name for q in p.panels] == ["front_0", "back_0"]
    assert len(p.stitches) == 2
    for s in p.stitches:
        assert {s.a.panel, s.b.panel} == {"front_0", "back_0"}
        assert len(s.a.indices) == len(s.b.indices) == 8


def test_side_by_side_chain_becomes_one_stitch():
    p = decode(stacked_sbs_image())
    assert len(p.panels) == 2 and len(p.stitches) == 1
    s = p.stitches[0]
    assert len(s.a.indices) == len(s.b.indices) == 6


def test_unpartnered_front_to_back_is_an_error():
    gi = f2b_pair_image()
    gi.inside[1] = False
    gi.types[1] = 0
    with pytest.raises(DecodeError, match="no partner"):
        decode(gi)


def test_hole_ring_gives_hole_loop():
    gi = GarmentImage.empty(16, (-64.0, -6.0), 8.0)
    paint_block(gi, 0, [c for c in rect_cells(4, 2, 5, 5) if c != (6, 4)])
    assert validate(gi) == []
    p = decode(gi)
    assert len(p.panels) == 1 and len(p.panels[0].loops) == 2
    assert p.panels[0].area() == pytest.approx(24 * 64.0)


def test_decoded_outer_loops_are_simple(quiet):
    for t in Template:
        p = decode(encode(gen_pattern(midpoint_params(t))))
        for q in p.panels:
            assert Polygon(loop_polygon(q, 0)).is_valid


def test_decode_is_deterministic(quiet):
    gi = encode(gen_pattern(sample_params(Template.TOP_SKIRT, 5)))
    assert serialize_pattern(decode(gi)) == serialize_pattern(decode(gi))


@pytest.mark.parametrize("seed", range(3))
def test_dress_boundary_within_one_cell(seed, quiet):
    p = gen_pattern(sample_params(Template.ONE_PANEL_DRESS, seed))
    gi = encode(p)
    gt = classify_and_split(p)
    d = decode(gi, 1.0)
    assert len(d.panels) == len(gt.panels) == 2
    for side in (Side.FRONT, Side.BACK):
        a = next(q for q in d.panels if q.side == side)
        b = next(q for q in gt.panels if q.side == side)
        assert boundary_hausdorff(a, b) <= gi.cell_size


@pytest.mark.parametrize("template", list(Template))
def test_round_trip_topology(template, quiet):
    for seed in range(3):
        p = gen_pattern(sample_params(template, seed))
        assert stitch_graph_isomorphic(decode(encode(p), FIDELITY_ANCHOR_WEIGHT), classify_and_split(p))


def test_random_valid_images_decode():
    rng = np.random.default_rng(8)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(30):
            gi = random_valid_image(rng)
            p = decode(gi)
            assert len(p.panels) == len(cluster_panels(gi))
