import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastsum.octree import (Octree, build_tree, dump_outline, far_field_ratio,
                            validate_tree)
from fastsum.types import SourceSet

from _scenes import make_sources


def test_two_point_hand_tree():
    s = SourceSet([[0, 0, 0], [1, 1, 1]], [1.0, 1.0])
    tree = build_tree(s, branching_per_dim=2)
    root = tree.root
    assert tree.num_nodes == 3
    assert root.count == 2
    assert len(root.children) == 2
    np.testing.assert_array_equal(root.bbox_min, [0, 0, 0])
    np.testing.assert_array_equal(root.bbox_max, [1, 1, 1])
    assert root.diameter == pytest.approx(math.sqrt(3.0))
    np.testing.assert_allclose(root.center_of_mass, [0.5, 0.5, 0.5])
    assert root.aggregate_weight == 2.0
    for c in root.children:
        nd = tree.node(c)
        assert nd.is_leaf and nd.count == 1
        assert nd.diameter == pytest.approx(math.sqrt(3.0) / 2.0)
    assert validate_tree(tree, s) == []


def test_single_point_tree_copies_point_verbatim():
    s = SourceSet([[0.3, -0.7, 0.1]], [[2.0, 3.0, 4.0]])
    tree = build_tree(s)
    root = tree.root
    assert root.is_leaf and root.count == 1
    np.testing.assert_array_equal(root.center_of_mass, s.positions[0])
    np.testing.assert_array_equal(root.aggregate_mass, s.masses[0])
    # zero-diameter clamp keeps the far field ratio finite
    r = far_field_ratio(root, [1.3, -0.7, 0.1])
    assert np.isfinite(r) and r > 1e10


def test_depth_cap_produces_multi_point_leaf():
    s = SourceSet([[0, 0, 0], [0, 0, 0], [1, 1, 1]], [1.0, 2.0, 4.0])
    tree = build_tree(s, branching_per_dim=2, max_depth=1)
    assert validate_tree(tree, s) == []
    capped = [nd for nd in tree.nodes() if nd.is_leaf and nd.count == 2]
    assert len(capped) == 1
    nd = capped[0]
    assert nd.depth == 1
    assert nd.aggregate_mass[0] == 3.0  # the two coincident points


def test_far_field_ratio_hand_value():
    s = SourceSet([[0, 0, 0], [1, 1, 1]], [1.0, 1.0])
    tree = build_tree(s)
    # root com is the cube center; put the query one diameter away
    q = np.array([0.5, 0.5, 0.5 + math.sqrt(3.0)])
    assert far_field_ratio(tree.root, q) == pytest.approx(1.0)
    assert far_field_ratio(tree.root, [0.5, 0.5, 0.5]) == 0.0


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("m", [1, 17, 200])
def test_random_trees_validate_clean(d, m):
    s = make_sources(m, seed=d * 100 + m, channels=1)
    tree = build_tree(s, branching_per_dim=d)
    assert validate_tree(tree, s) == []
    assert tree.num_points == m
    # every point sits inside its node's cell (cells are not shrunk)
    for nd in tree.nodes():
        b, e = nd.point_range
        pts = tree.points[b:e]
        assert np.all(pts >= nd.bbox_min - 1e-12)
        assert np.all(pts <= nd.bbox_max + 1e-12)


def test_child_diameter_is_parent_over_d():
    s = make_sources(300, seed=5)
    for d in (2, 4):
        tree = build_tree(s, branching_per_dim=d)
        for nd in tree.nodes():
            for c in nd.children:
                assert tree.node(c).diameter == pytest.approx(nd.diameter / d)


def test_vector_channel_aggregates():
    s = make_sources(64, seed=9, channels=3)
    tree = build_tree(s, branching_per_dim=2)
    assert validate_tree(tree, s) == []
    np.testing.assert_allclose(tree.root.aggregate_mass, s.masses.sum(axis=0),
                               atol=1e-12)


def _tampered(tree, **mods):
    arrays = {}
    for k in Octree.__slots__:
        v = getattr(tree, k)
        arrays[k] = v.copy() if isinstance(v, np.ndarray) else v
    for k, fn in mods.items():
        fn(arrays[k])
    return Octree(**arrays)


def test_validate_catches_tampering():
    s = make_sources(50, seed=3)
    tree = build_tree(s)

    def bump_mass(a):
        a[1, 0] += 0.5

    bad = _tampered(tree, aggregate_mass=bump_mass)
    assert any("aggregate_mass" in r for r in validate_tree(bad, s))

    def shift_com(a):
        a[0] += 10.0

    bad = _tampered(tree, center_of_mass=shift_com)
    assert any("center_of_mass" in r for r in validate_tree(bad, s))

    def swap_perm(a):
        a[0], a[1] = a[1], a[0]

    bad = _tampered(tree, permuted_indices=swap_perm)
    # reordered points break per-node aggregate checks somewhere
    assert validate_tree(bad, s) != []


def test_build_tree_argument_validation():
    s = make_sources(4, seed=0)
    with pytest.raises(ValueError):
        build_tree(s, branching_per_dim=1)
    with pytest.raises(ValueError):
        build_tree(s, max_depth=0)


def test_tree_is_immutable():
    tree = build_tree(make_sources(4, seed=0))
    with pytest.raises(AttributeError):
        tree.diameter = None
    assert not tree.points.flags.writeable


def test_dump_outline_mentions_every_node():
    tree = build_tree(make_sources(10, seed=1))
    text = dump_outline(tree)
    assert len(text.splitlines()) == tree.num_nodes
    assert "node 0" in text


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 30), st.integers(0, 1000), st.sampled_from([2, 3, 4]))
def test_fuzz_structural_invariants(m, seed, d):
    s = make_sources(m, seed=seed)
    tree = build_tree(s, branching_per_dim=d)
    assert validate_tree(tree, s) == []
    assert sorted(tree.permuted_indices.tolist()) == list(range(m))
