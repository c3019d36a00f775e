import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from motionfeas.fixtures import smplx_sized_mesh
from motionfeas.geometry import (GeometryError, SupportPolygon, build_bvh, convex_hull_2d,
                                 intersecting_pairs, normalize_spen, point_polygon_distance,
                                 self_penetration_rate, triangles_intersect)
from motionfeas.motion import MeshSequence
from oracles import (brute_force_pairs, carath_hull_vertices, qhull_vertices, shapely_distance,
                     tri_tri_intersect)

TRI = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])


def _two(t1, t2):
    return np.concatenate([t1, t2]), np.array([[0, 1, 2], [3, 4, 5]])


def _cube():
    v = np.array([[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)], dtype=float)
    quads = [(0, 2, 3, 1), (4, 5, 7, 6), (0, 1, 5, 4), (1, 3, 7, 5), (3, 2, 6, 7), (2, 0, 4, 6)]
    f = []
    for a, b, c, d in quads:
        f += [(a, b, c), (a, c, d)]
    return v, np.array(f)


# ------------------------------------------------------------------ BVH


def test_single_triangle_root_is_leaf():
    bvh = build_bvh([[0, 1, 2]], TRI)
    assert bvh.num_nodes == 1 and bvh.is_leaf[0]


def test_two_disjoint_triangles_two_leaves_union_box():
    v, f = _two(TRI, TRI + [5.0, 0, 0])
    bvh = build_bvh(f, v)
    assert int(bvh.is_leaf.sum()) == 2
    assert bvh.box_min[0].tolist() == [0, 0, 0] and bvh.box_max[0].tolist() == [6, 1, 0]


def test_empty_mesh_rejected():
    with pytest.raises(GeometryError):
        build_bvh(np.zeros((0, 3), dtype=int), TRI)


def test_smplx_sized_depth_bound():
    v, f = smplx_sized_mesh()
    assert len(f) == 20908 and len(v) == 10475
    bvh = build_bvh(f, v)
    assert bvh.max_depth <= 2 * math.ceil(math.log2(len(f)))
    leaves = np.concatenate(bvh.leaf_triangles())
    assert sorted(leaves.tolist()) == list(range(len(f)))


def test_boxes_contain_children():
    rng = np.random.default_rng(0)
    v = rng.uniform(size=(60, 3))
    f = rng.integers(0, 60, size=(80, 3))
    bvh = build_bvh(f, v)
    for n in np.flatnonzero(~bvh.is_leaf):
        for c in (bvh.left[n], bvh.right[n]):
            assert np.all(bvh.box_min[n] <= bvh.box_min[c]) and np.all(bvh.box_max[c] <= bvh.box_max[n])


# ------------------------------------------------------ intersection


def test_disjoint_pair_zero():
    v, f = _two(TRI, TRI + [0, 0, 1.0])
    assert intersecting_pairs(build_bvh(f, v), v) == 0


def test_piercing_pair_one():
    other = np.array([[0.2, 0.2, -0.5], [0.3, 0.2, 0.5], [0.25, 0.4, 0.5]])
    v, f = _two(TRI, other)
    assert tri_tri_intersect(v[f[0]], v[f[1]])
    assert intersecting_pairs(build_bvh(f, v), v) == 1


def test_watertight_cube_zero():
    v, f = _cube()
    assert intersecting_pairs(build_bvh(f, v), v) == 0
    assert len(brute_force_pairs(f, v)) == 0


def test_cube_without_exclusion_counts_adjacent_contacts():
    v, f = _cube()
    assert intersecting_pairs(build_bvh(f, v), v, exclusion=None) > 0


def test_coplanar_overlap_detected():
    other = TRI * 0.5 + [0.1, 0.1, 0.0]
    assert triangles_intersect(TRI[None], other[None])[0]
    assert not triangles_intersect(TRI[None], (TRI + [3.0, 0, 0])[None])[0]


def test_degenerate_triangle_never_intersects():
    flat = np.array([[0.0, 0, 0], [1, 1, 1], [2, 2, 2]])
    assert not triangles_intersect(TRI[None], flat[None])[0]


def _crossing_fixture(n_faces=100, n_hits=5):
    """Separated small triangles plus n_hits crossing pairs built from them."""
    tris = []
    for k in range(n_faces - 2 * n_hits):
        tris.append(TRI * 0.3 + [3.0 * k, 0, 0])
    for k in range(n_hits):
        base = [3.0 * k, 10.0, 0.0]
        tris.append(TRI + base)
        tris.append(np.array([[0.2, 0.2, -0.5], [0.3, 0.2, 0.5], [0.25, 0.4, 0.5]]) + base)
    v = np.concatenate(tris)
    f = np.arange(len(v)).reshape(-1, 3)
    return f, v


def test_spen_five_pairs_in_hundred_faces():
    f, v = _crossing_fixture()
    assert len(brute_force_pairs(f, v)) == 5
    mesh = MeshSequence(f, np.stack([v, v + [0, 0, 1.0], v * 2.0]))
    per_frame, mean = self_penetration_rate(mesh)
    assert per_frame.tolist() == [5.0, 5.0, 5.0] and mean == 5.0


def test_spen_zero_without_intersections():
    v, f = _cube()
    per_frame, mean = self_penetration_rate(MeshSequence(f, np.stack([v, v])))
    assert mean == 0.0


def test_refit_matches_fresh_build():
    rng = np.random.default_rng(5)
    v0 = rng.uniform(size=(40, 3))
    f = np.arange(120).reshape(-1, 3) % 40
    v1 = v0 + rng.normal(scale=0.3, size=v0.shape)
    assert intersecting_pairs(build_bvh(f, v0), v1) == intersecting_pairs(build_bvh(f, v1), v1)


@given(seed=st.integers(0, 2**32 - 1), F=st.integers(1, 40), V=st.integers(3, 30))
def test_bvh_pairs_equal_brute_force(seed, F, V):
    rng = np.random.default_rng(seed)
    v = rng.uniform(size=(V, 3))
    f = np.array([rng.choice(V, 3, replace=False) for _ in range(F)])
    pairs = intersecting_pairs(build_bvh(f, v), v, return_pairs=True)
    assert {tuple(p) for p in pairs.tolist()} == brute_force_pairs(f, v)


@given(seed=st.integers(0, 2**32 - 1))
def test_pair_test_symmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(size=(2, 50, 3, 3))
    assert np.array_equal(triangles_intersect(a, b), triangles_intersect(b, a))


def test_spen_normalization():
    assert normalize_spen(2) == 0.0 and normalize_spen(11) == 0.5 and normalize_spen(20) == 1.0
    assert normalize_spen(0) == 0.0 and normalize_spen(50) == 1.0


# ------------------------------------------------------------ polygons


def test_square_plus_centre_hull():
    hull = convex_hull_2d([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]])
    assert len(hull) == 4


def test_two_points_segment():
    hull = convex_hull_2d([[0, 0], [1, 2]])
    assert len(hull) == 2


def test_collinear_keeps_extremes():
    hull = convex_hull_2d([[0, 0], [1, 1], [2, 2], [3, 3]])
    assert hull.hull_vertices.tolist() == [[0, 0], [3, 3]]


def test_hull_is_counter_clockwise():
    hull = convex_hull_2d(np.random.default_rng(2).uniform(size=(30, 2))).hull_vertices
    x, y = hull[:, 0], hull[:, 1]
    assert 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) > 0


def test_unit_square_distances():
    sq = convex_hull_2d([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert point_polygon_distance([0.5, 0.5], sq) == 0.0
    assert point_polygon_distance([2.0, 0.5], sq) == 1.0
    assert point_polygon_distance([1.0, 0.5], sq) == 0.0  # boundary


def test_empty_polygon_raises():
    with pytest.raises(GeometryError):
        point_polygon_distance([0, 0], SupportPolygon(np.zeros((0, 2))))


def test_fifty_random_points_match_qhull():
    pts = np.random.default_rng(11).uniform(-1, 1, size=(50, 2))
    got = {tuple(p) for p in convex_hull_2d(pts).hull_vertices.tolist()}
    assert got == qhull_vertices(pts)


@given(st.lists(st.tuples(st.integers(-6, 6), st.integers(-6, 6)), min_size=1, max_size=12))
def test_hull_matches_caratheodory_on_grid(points):
    hull = convex_hull_2d(points)
    got = {tuple(p) for p in hull.hull_vertices.tolist()}
    # collinear input reduces to its two extremes on both sides
    assert got == carath_hull_vertices(points)


@given(pts=st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=3, max_size=20),
       q=st.tuples(st.floats(-10, 10), st.floats(-10, 10)))
def test_distance_matches_shapely(pts, q):
    hull = convex_hull_2d(pts)
    d = point_polygon_distance(q, hull)
    assert d >= 0
    assert d == pytest.approx(shapely_distance(q, hull.hull_vertices), abs=1e-9)


@given(pts=st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=3, max_size=20))
def test_hull_points_are_inside(pts):
    hull = convex_hull_2d(pts)
    for p in pts:
        assert point_polygon_distance(p, hull) <= 1e-9
