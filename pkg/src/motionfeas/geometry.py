"""Geometric kernels: triangle BVH self-intersection and 2D support polygons.

The BVH is stored as flat arrays so that refitting to a new vertex frame and
the dual-tree self-collision traversal are vectorized level by level.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

COPLANAR_EPS = 1e-9


class GeometryError(ValueError):
    pass


# ---------------------------------------------------------------- BVH


@dataclass(frozen=True)
class TriangleBVH:
    """Binary AABB tree over the triangles of one mesh.

    Node 0 is the root. ``left``/``right`` are -1 for leaves; a leaf owns
    ``order[start:start + count]``.
    """

    faces: np.ndarray
    box_min: np.ndarray  # (N, 3)
    box_max: np.ndarray  # (N, 3)
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    depth: np.ndarray
    order: np.ndarray    # triangle indices grouped by leaf

    @property
    def num_nodes(self) -> int:
        return len(self.left)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.left < 0

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    def leaf_triangles(self) -> list[np.ndarray]:
        return [self.order[s:s + c] for s, c, leaf in zip(self.start, self.count, self.is_leaf) if leaf]

    def refit(self, vertices: np.ndarray) -> TriangleBVH:
        """Same topology, boxes recomputed for another vertex frame."""
        tri = np.asarray(vertices, dtype=np.float64)[self.faces]
        lo, hi = _refit(self, tri.min(axis=1), tri.max(axis=1))
        return TriangleBVH(self.faces, lo, hi, self.left, self.right, self.start,
                           self.count, self.depth, self.order)


def build_bvh(faces, vertices, leaf_size: int = 1) -> TriangleBVH:
    """Top-down build, median split of triangle centroids on the longest axis.

    Deterministic for a given input order (stable sort on centroid keys).
    """
    faces = np.asarray(faces, dtype=np.int64)
    vertices = np.asarray(vertices, dtype=np.float64)
    if faces.ndim != 2 or faces.shape[1] != 3 or len(faces) == 0:
        raise GeometryError("cannot build a BVH over an empty mesh")
    if faces.min() < 0 or faces.max() >= len(vertices):
        raise GeometryError("face index out of range")
    tri = vertices[faces]
    tmin, tmax = tri.min(axis=1), tri.max(axis=1)
    centroid = tri.mean(axis=1)
    F = len(faces)
    order = np.arange(F)
    cap = 2 * F
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    start = np.zeros(cap, dtype=np.int64)
    count = np.zeros(cap, dtype=np.int64)
    depth = np.zeros(cap, dtype=np.int64)
    n_nodes = 1
    start[0], count[0] = 0, F
    stack = [0]
    while stack:
        node = stack.pop()
        s, c = start[node], count[node]
        if c <= leaf_size:
            continue
        idx = order[s:s + c]
        cen = centroid[idx]
        axis = int(np.argmax(cen.max(axis=0) - cen.min(axis=0)))
        idx = idx[np.argsort(cen[:, axis], kind="stable")]
        order[s:s + c] = idx
        half = c // 2
        l, r = n_nodes, n_nodes + 1
        n_nodes += 2
        left[node], right[node] = l, r
        start[l], count[l] = s, half
        start[r], count[r] = s + half, c - half
        depth[l] = depth[r] = depth[node] + 1
        stack += [r, l]
    sl = slice(0, n_nodes)
    bvh = TriangleBVH(faces, np.empty((n_nodes, 3)), np.empty((n_nodes, 3)), left[sl].copy(),
                      right[sl].copy(), start[sl].copy(), count[sl].copy(), depth[sl].copy(), order)
    lo, hi = _refit(bvh, tmin, tmax)
    return TriangleBVH(faces, lo, hi, bvh.left, bvh.right, bvh.start, bvh.count, bvh.depth, order)


def _refit(bvh: TriangleBVH, tmin: np.ndarray, tmax: np.ndarray):
    n = bvh.num_nodes
    lo = np.empty((n, 3))
    hi = np.empty((n, 3))
    leaves = np.flatnonzero(bvh.left < 0)
    if bvh.count[leaves].max() == 1:
        tri = bvh.order[bvh.start[leaves]]
        lo[leaves] = tmin[tri]
        hi[leaves] = tmax[tri]
    else:
        for node in leaves:
            idx = bvh.order[bvh.start[node]:bvh.start[node] + bvh.count[node]]
            lo[node] = tmin[idx].min(axis=0)
            hi[node] = tmax[idx].max(axis=0)
    internal = np.flatnonzero(bvh.left >= 0)
    for d in range(int(bvh.depth.max()), -1, -1):
        nodes = internal[bvh.depth[internal] == d]
        if len(nodes):
            l, r = bvh.left[nodes], bvh.right[nodes]
            lo[nodes] = np.minimum(lo[l], lo[r])
            hi[nodes] = np.maximum(hi[l], hi[r])
    return lo, hi


def _candidate_pairs(bvh: TriangleBVH, pad: float) -> tuple[np.ndarray, np.ndarray]:
    """Unordered triangle pairs whose leaf boxes overlap (each pair once)."""
    lo, hi = bvh.box_min - pad, bvh.box_max + pad
    leaf = bvh.left < 0
    size = bvh.count
    a = np.zeros(1, dtype=np.int64)
    b = np.zeros(1, dtype=np.int64)
    out_a, out_b = [], []
    while len(a):
        same = a == b
        # self pairs: recurse into (L,L), (R,R), (L,R); leaves contribute intra-leaf pairs
        sa = a[same]
        s_int = sa[~leaf[sa]]
        s_leaf = sa[leaf[sa]]
        for node in s_leaf[size[s_leaf] > 1]:
            tris = bvh.order[bvh.start[node]:bvh.start[node] + size[node]]
            i, j = np.triu_indices(len(tris), 1)
            out_a.append(tris[i])
            out_b.append(tris[j])
        L, R = bvh.left[s_int], bvh.right[s_int]
        next_a = [L, R, L]
        next_b = [L, R, R]
        # distinct pairs: keep overlapping boxes
        da, db = a[~same], b[~same]
        hit = np.all((lo[da] <= hi[db]) & (lo[db] <= hi[da]), axis=1)
        da, db = da[hit], db[hit]
        both = leaf[da] & leaf[db]
        la, lb = da[both], db[both]
        single = (size[la] == 1) & (size[lb] == 1)
        out_a.append(bvh.order[bvh.start[la[single]]])
        out_b.append(bvh.order[bvh.start[lb[single]]])
        for x, y in zip(la[~single], lb[~single]):
            ta = bvh.order[bvh.start[x]:bvh.start[x] + size[x]]
            tb = bvh.order[bvh.start[y]:bvh.start[y] + size[y]]
            out_a.append(np.repeat(ta, len(tb)))
            out_b.append(np.tile(tb, len(ta)))
        da, db = da[~both], db[~both]
        split_a = ~leaf[da] & (leaf[db] | (size[da] >= size[db]))
        xa, xb = da[split_a], db[split_a]
        next_a += [bvh.left[xa], bvh.right[xa]]
        next_b += [xb, xb]
        ya, yb = da[~split_a], db[~split_a]
        next_a += [ya, ya]
        next_b += [bvh.left[yb], bvh.right[yb]]
        a = np.concatenate(next_a)
        b = np.concatenate(next_b)
    if not out_a:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(out_a), np.concatenate(out_b)


def share_vertex(faces: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Default adjacency exclusion: the two triangles have a common vertex."""
    fi, fj = faces[i], faces[j]
    return np.any(fi[:, :, None] == fj[:, None, :], axis=(1, 2))


AdjacencyPredicate = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def intersecting_pairs(bvh: TriangleBVH, vertices, exclusion: Optional[AdjacencyPredicate] = share_vertex,
                       return_pairs: bool = False):
    """Count unordered pairs of distinct, geometrically intersecting triangles.

    ``exclusion(faces, i, j)`` returns a mask of pairs to ignore; pass None to
    test every pair. The BVH may have been built on another frame of the
    same mesh; it is refit to ``vertices`` first.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    fitted = bvh.refit(vertices)
    i, j = _candidate_pairs(fitted, COPLANAR_EPS)
    if exclusion is not None and len(i):
        keep = ~exclusion(bvh.faces, i, j)
        i, j = i[keep], j[keep]
    if len(i):
        tri = vertices[bvh.faces]
        hit = triangles_intersect(tri[i], tri[j])
        i, j = i[hit], j[hit]
    if return_pairs:
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        order = np.lexsort((hi, lo))
        return np.stack([lo[order], hi[order]], axis=1)
    return int(len(i))


# ------------------------------------------------- triangle intersection


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


def _segment_hits_triangle(p, q, dp, dq, tri, n, eps):
    """Closed segment p-q against closed triangle (vectorized).

    ``dp``, ``dq`` are signed distances of p, q to the triangle plane with
    unit normal ``n``.
    """
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    zp, zq = np.abs(dp) <= eps, np.abs(dq) <= eps
    crosses = ((dp < -eps) & (dq > eps)) | ((dp > eps) & (dq < -eps))
    denom = np.where(crosses, dp - dq, 1.0)
    t = np.where(crosses, dp / denom, 0.0)
    x = p + t[:, None] * (q - p)
    hit = crosses & _point_in_triangle(x, a, b, c, n, eps)
    hit |= zp & _point_in_triangle(p, a, b, c, n, eps)
    hit |= zq & _point_in_triangle(q, a, b, c, n, eps)
    return hit


def _point_in_triangle(x, a, b, c, n, eps):
    # signed distance of x to each edge line, inside-positive, within the plane
    inside = np.ones(len(x), dtype=bool)
    for u, v in ((a, b), (b, c), (c, a)):
        e = v - u
        el = np.linalg.norm(e, axis=1)
        inside &= _dot(np.cross(e, x - u), n) >= -eps * np.maximum(el, 1e-300)
    return inside


def _seg2d_intersect(p1, p2, q1, q2, eps):
    def orient(a, b, c):
        return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])

    def on_seg(a, b, c):
        return ((np.minimum(a[:, 0], b[:, 0]) - eps <= c[:, 0]) & (c[:, 0] <= np.maximum(a[:, 0], b[:, 0]) + eps)
                & (np.minimum(a[:, 1], b[:, 1]) - eps <= c[:, 1]) & (c[:, 1] <= np.maximum(a[:, 1], b[:, 1]) + eps))

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    area_eps = eps * eps
    s1, s2, s3, s4 = (np.where(np.abs(d) <= area_eps, 0, np.sign(d)) for d in (d1, d2, d3, d4))
    proper = (s1 * s2 < 0) & (s3 * s4 < 0)
    touch = ((s1 == 0) & on_seg(q1, q2, p1)) | ((s2 == 0) & on_seg(q1, q2, p2)) \
        | ((s3 == 0) & on_seg(p1, p2, q1)) | ((s4 == 0) & on_seg(p1, p2, q2))
    return proper | touch


def _point_in_tri2d(x, a, b, c, eps):
    def orient(u, v, w):
        return (v[:, 0] - u[:, 0]) * (w[:, 1] - u[:, 1]) - (v[:, 1] - u[:, 1]) * (w[:, 0] - u[:, 0])

    o1, o2, o3 = orient(a, b, x), orient(b, c, x), orient(c, a, x)
    tol = eps * eps
    return (((o1 >= -tol) & (o2 >= -tol) & (o3 >= -tol))
            | ((o1 <= tol) & (o2 <= tol) & (o3 <= tol)))


def _coplanar_intersect(t1, t2, n, eps):
    axis = np.argmax(np.abs(n), axis=1)
    keep = np.array([[1, 2], [0, 2], [0, 1]])[axis]
    rows = np.arange(len(t1))[:, None]
    p = t1[rows[:, :, None], np.arange(3)[None, :, None], keep[:, None, :]]
    q = t2[rows[:, :, None], np.arange(3)[None, :, None], keep[:, None, :]]
    hit = np.zeros(len(t1), dtype=bool)
    for i in range(3):
        for j in range(3):
            hit |= _seg2d_intersect(p[:, i], p[:, (i + 1) % 3], q[:, j], q[:, (j + 1) % 3], eps)
    hit |= _point_in_tri2d(p[:, 0], q[:, 0], q[:, 1], q[:, 2], eps)
    hit |= _point_in_tri2d(q[:, 0], p[:, 0], p[:, 1], p[:, 2], eps)
    return hit


def _unit_normal(tri):
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    length = np.linalg.norm(n, axis=1)
    return n / np.where(length > 0, length, 1.0)[:, None], length > 0


def triangles_intersect(t1, t2, eps: float = COPLANAR_EPS) -> np.ndarray:
    """Closed-set intersection test for batches of triangle pairs.

    ``t1``, ``t2`` have shape (N, 3, 3). Touching counts as intersecting;
    coplanar overlapping triangles are detected with a 2D test. Degenerate
    (zero-area) triangles never intersect anything.
    """
    t1 = np.asarray(t1, dtype=np.float64)
    t2 = np.asarray(t2, dtype=np.float64)
    n1, ok1 = _unit_normal(t1)
    n2, ok2 = _unit_normal(t2)
    d1 = _dot(t1 - t2[:, :1], n2[:, None])  # t1 vertices vs plane of t2
    d2 = _dot(t2 - t1[:, :1], n1[:, None])
    sep1 = np.all(d1 > eps, axis=1) | np.all(d1 < -eps, axis=1)
    sep2 = np.all(d2 > eps, axis=1) | np.all(d2 < -eps, axis=1)
    live = ok1 & ok2 & ~sep1 & ~sep2
    coplanar = live & np.all(np.abs(d1) <= eps, axis=1)
    result = np.zeros(len(t1), dtype=bool)
    if np.any(coplanar):
        m = coplanar
        result[m] = _coplanar_intersect(t1[m], t2[m], n1[m], eps)
    m = live & ~coplanar
    if np.any(m):
        a1, a2, b1, b2 = t1[m], t2[m], d1[m], d2[m]
        m1, m2 = n1[m], n2[m]
        hit = np.zeros(len(a1), dtype=bool)
        for i in range(3):
            k = (i + 1) % 3
            hit |= _segment_hits_triangle(a1[:, i], a1[:, k], b1[:, i], b1[:, k], a2, m2, eps)
            hit |= _segment_hits_triangle(a2[:, i], a2[:, k], b2[:, i], b2[:, k], a1, m1, eps)
        result[m] = hit
    return result


def self_penetration_rate(mesh, exclusion: Optional[AdjacencyPredicate] = share_vertex):
    """Per-frame percentage of intersecting triangle pairs, and its mean.

    spen_t = 100 * pairs_t / F. The tree topology is built once on the first
    frame and refit for the others.
    """
    faces = mesh.faces
    frames = mesh.vertex_frames
    bvh = build_bvh(faces, frames[0])
    F = len(faces)
    per_frame = np.array([100.0 * intersecting_pairs(bvh, v, exclusion) / F for v in frames])
    return per_frame, float(per_frame.mean())


def normalize_spen(spen: float, baseline: float = 2.0, severe: float = 20.0) -> float:
    """Map a self-penetration percentage to [0, 1]: baseline -> 0, severe -> 1."""
    return float(np.clip((spen - baseline) / (severe - baseline), 0.0, 1.0))


# ------------------------------------------------------- 2D polygons


@dataclass(frozen=True)
class SupportPolygon:
    """Convex polygon in the ground plane, counter-clockwise.

    Zero, one or two vertices represent an empty set, a point or a segment.
    """

    hull_vertices: np.ndarray  # (K, 2)

    @property
    def is_empty(self) -> bool:
        return len(self.hull_vertices) == 0

    def __len__(self) -> int:
        return len(self.hull_vertices)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points) -> SupportPolygon:
    """Andrew's monotone chain; collinear and duplicate points are dropped."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    uniq = sorted(set(map(tuple, pts.tolist())))
    if len(uniq) <= 2:
        return SupportPolygon(np.array(uniq, dtype=np.float64).reshape(-1, 2))
    lower: list = []
    for p in uniq:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(uniq):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        # all points collinear: keep the two extremes
        hull = [uniq[0], uniq[-1]]
    return SupportPolygon(np.array(hull, dtype=np.float64))


def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0.0 else min(1.0, max(0.0, float((p - a) @ ab) / denom))
    return float(np.hypot(*(p - (a + t * ab))))


def point_polygon_distance(p, poly: SupportPolygon) -> float:
    """Distance from ``p`` to the polygon; 0 inside or on the boundary.

    Raises GeometryError for an empty polygon, which callers handle.
    """
    p = np.asarray(p, dtype=np.float64)
    v = poly.hull_vertices
    if len(v) == 0:
        raise GeometryError("distance to an empty polygon is undefined")
    if len(v) == 1:
        return float(np.hypot(*(p - v[0])))
    if len(v) == 2:
        return _point_segment_distance(p, v[0], v[1])
    nxt = np.roll(v, -1, axis=0)
    if all(_cross(a, b, p) >= 0 for a, b in zip(v, nxt)):
        return 0.0
    return min(_point_segment_distance(p, a, b) for a, b in zip(v, nxt))
