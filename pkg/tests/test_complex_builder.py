import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from surfclass.complex_builder import (
    AmbiguousOrientationError,
    BuildParams,
    DegenerateAngleError,
    EmbeddedGraph,
    _segments_cross_many,
    build_complex,
    crossing_audit,
    edge_angle,
    export_complex,
    orientation_sign,
    project,
    segments_cross,
    try_add_edge,
)
from surfclass.geometry_io import PointCloud, sample_surface
from surfclass.tangent_space import TangentFrame

E1, E2, E3 = np.eye(3)


def _flat_graph(points, frames=None, eps=0.1):
    cloud = PointCloud(np.asarray(points, dtype=float))
    graph = EmbeddedGraph(cloud)
    for i in range(cloud.count):
        t1, t2 = frames[i] if frames else (E1, E2)
        graph.add_vertex(TangentFrame(i, t1, t2, eps))
    return cloud, graph


# -- projection and angles ----------------------------------------------------

def test_project_examples():
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    t1, t2, nu = q.T
    base = rng.standard_normal(3)
    cloud = PointCloud([base, base + 3 * t1, base + 0.7 * t1 - 1.2 * t2 + 5 * nu])
    f = TangentFrame(0, t1, t2, 0.1)
    assert project(f, cloud, 0) == (0.0, 0.0)
    assert project(f, cloud, 1) == pytest.approx((3.0, 0.0), abs=1e-12)
    assert project(f, cloud, 2) == pytest.approx((0.7, -1.2), abs=1e-12)


@pytest.mark.parametrize(
    "xy,want", [((1, 0), 0.0), ((0, -1), 3 * math.pi / 2), ((-1, -1), 5 * math.pi / 4), ((0, 1), math.pi / 2)]
)
def test_edge_angle_examples(xy, want):
    cloud = PointCloud([[0.0, 0, 0], [xy[0], xy[1], 0.4]])
    assert edge_angle(TangentFrame(0, E1, E2, 0.1), cloud, 1) == pytest.approx(want, abs=1e-15)


def test_edge_angle_range():
    rng = np.random.default_rng(1)
    cloud = PointCloud(np.r_[[[0.0, 0, 0]], rng.standard_normal((200, 3))])
    f = TangentFrame(0, E1, E2, 0.1)
    angles = [edge_angle(f, cloud, i) for i in range(1, 201)]
    assert all(0 <= a < 2 * math.pi for a in angles)


def test_edge_angle_on_normal_line():
    cloud = PointCloud([[0.0, 0, 0], [0, 0, 2.0]])
    with pytest.raises(DegenerateAngleError):
        edge_angle(TangentFrame(0, E1, E2, 0.1), cloud, 1)


# -- segment crossing -----------------------------------------------------------

@pytest.mark.parametrize(
    "segs,want",
    [
        (((0, 0), (1, 1), (0, 1), (1, 0)), True),
        (((0, 0), (1, 0), (0, 1), (1, 1)), False),
        (((0, 0), (1, 0), (1, 0), (2, 1)), False),
        (((0, 0), (2, 0), (1, 0), (3, 0)), True),
        (((0, 0), (1, 0), (1, 0), (2, 0)), False),
        (((0, 0), (2, 0), (1, 0), (1, 1)), False),
        (((0, 0), (0, 2), (0, 1), (0, 3)), True),
    ],
)
def test_segments_cross_examples(segs, want):
    assert segments_cross(*segs) is want
    assert bool(_segments_cross_many(*segs)) is want


def _cross_oracle(p1, p2, q1, q2):
    """Exact rational intersection of the open segments."""
    p1, p2, q1, q2 = ([Fraction(c) for c in pt] for pt in (p1, p2, q1, q2))
    r = (p2[0] - p1[0], p2[1] - p1[1])
    s = (q2[0] - q1[0], q2[1] - q1[1])
    qp = (q1[0] - p1[0], q1[1] - p1[1])
    denom = r[0] * s[1] - r[1] * s[0]
    if denom != 0:
        t = (qp[0] * s[1] - qp[1] * s[0]) / denom
        u = (qp[0] * r[1] - qp[1] * r[0]) / denom
        return 0 < t < 1 and 0 < u < 1
    if qp[0] * r[1] - qp[1] * r[0] != 0:
        return False  # parallel, distinct lines
    rr = r[0] * r[0] + r[1] * r[1]
    ta = (qp[0] * r[0] + qp[1] * r[1]) / rr
    tb = ta + (s[0] * r[0] + s[1] * r[1]) / rr
    return min(1, max(ta, tb)) > max(0, min(ta, tb))


_coord = st.integers(-3, 3)
_pt = st.tuples(_coord, _coord)


@settings(max_examples=600, deadline=None)
@given(_pt, _pt, _pt, _pt)
def test_segments_cross_matches_rational_oracle(p1, p2, q1, q2):
    assume(p1 != p2 and q1 != q2)
    want = _cross_oracle(p1, p2, q1, q2)
    assert segments_cross(p1, p2, q1, q2) is want
    assert segments_cross(q1, q2, p1, p2) is want
    assert segments_cross(p2, p1, q2, q1) is want


def test_vectorised_crossing_matches_scalar():
    rng = np.random.default_rng(2)
    pts = np.r_[rng.integers(-2, 3, (3000, 4, 2)).astype(float), rng.standard_normal((3000, 4, 2))]
    keep = np.any(pts[:, 0] != pts[:, 1], axis=1) & np.any(pts[:, 2] != pts[:, 3], axis=1)
    pts = pts[keep]
    got = _segments_cross_many(pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3])
    want = [segments_cross(*row) for row in pts.tolist()]
    assert got.tolist() == want


# -- orientation ---------------------------------------------------------------

def test_orientation_identity_and_swap():
    f = TangentFrame(0, E1, E2, 0.1)
    assert orientation_sign(f, f) == 1
    assert orientation_sign(f, f.swapped()) == -1


@pytest.mark.parametrize("phi", [0.3, -1.2, 1.5, 2.5, -3.0])
def test_orientation_in_plane_rotation(phi):
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    t1, t2 = q[:, 0], q[:, 1]
    c, s = math.cos(phi), math.sin(phi)
    fu = TangentFrame(0, t1, t2, 0.1)
    fv = TangentFrame(1, c * t1 + s * t2, -s * t1 + c * t2, 0.1)
    m = np.array([[fu.t1 @ fv.t1, fu.t1 @ fv.t2], [fu.t2 @ fv.t1, fu.t2 @ fv.t2]])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    assert det == pytest.approx(1.0, abs=1e-12)
    assert orientation_sign(fu, fv) == 1


def test_orientation_ambiguous():
    with pytest.raises(AmbiguousOrientationError):
        orientation_sign(TangentFrame(0, E1, E2, 0.1), TangentFrame(1, E1, E3, 0.1))


# -- edge insertion ----------------------------------------------------------------

def test_first_edge_is_added():
    cloud, g = _flat_graph([[0, 0, 0], [1, 0.2, 0]], [(E1, E2), (E1, -E2)])
    res = try_add_edge(g, cloud, 0, 1)
    assert res.added and res.reason is None
    assert g.adjacency[(0, 1)].angle == pytest.approx(math.atan2(0.2, 1))
    assert g.adjacency[(1, 0)].angle == pytest.approx(math.pi - math.atan2(0.2, 1))
    assert g.adjacency[(0, 1)].same_orientation is False
    assert g.adjacency[(1, 0)].same_orientation is False
    assert try_add_edge(g, cloud, 1, 0) == (False, "duplicate")


def test_crossing_edge_is_rejected():
    cloud, g = _flat_graph([[0, 0, 0], [1, 1, 0], [0, 1, 0], [1, 0, 0]])
    assert try_add_edge(g, cloud, 0, 1).added
    before = dict(g.adjacency)
    assert try_add_edge(g, cloud, 2, 3) == (False, "crossing")
    assert g.adjacency == before and g.edge_count == 1


def test_crossing_with_tilted_frames():
    # the stored edge carries frames tilted out of the common plane
    tilt = np.array([0.0, 1.0, 1.0]) / math.sqrt(2)
    pts = [[0, 0, 0], [1, 1, 0], [0, 1, 0], [1, 0, 0]]
    cloud, g = _flat_graph(pts, [(E1, E2), (E1, E2), (E1, tilt), (E1, tilt)])
    assert try_add_edge(g, cloud, 2, 3).added
    assert try_add_edge(g, cloud, 0, 1).reason == "crossing"


def test_small_angle_is_rejected():
    a = math.pi / 12
    cloud, g = _flat_graph([[0, 0, 0], [1, 0, 0], [math.cos(a), math.sin(a), 0]])
    assert try_add_edge(g, cloud, 0, 1).added
    assert try_add_edge(g, cloud, 0, 2) == (False, "small-angle")


def test_angle_just_above_floor_is_added():
    a = math.pi / 6 + 1e-6
    cloud, g = _flat_graph([[0, 0, 0], [1, 0, 0], [math.cos(a), math.sin(a), 0]])
    assert try_add_edge(g, cloud, 0, 1).added
    assert try_add_edge(g, cloud, 0, 2).added


def test_ambiguous_orientation_is_rejected():
    cloud, g = _flat_graph([[0, 0, 0], [1, 0, 0]], [(E1, E2), (E1, E3)])
    assert try_add_edge(g, cloud, 0, 1) == (False, "ambiguous-orientation")


def test_degenerate_angle_is_rejected():
    cloud, g = _flat_graph([[0, 0, 0], [0, 0, 1]], [(E1, E2), (E1, E3)])
    assert try_add_edge(g, cloud, 0, 1) == (False, "degenerate-angle")


def test_loop_is_an_error():
    cloud, g = _flat_graph([[0, 0, 0], [1, 0, 0]])
    with pytest.raises(ValueError):
        try_add_edge(g, cloud, 1, 1)


def test_params_validation():
    with pytest.raises(ValueError):
        BuildParams(k=2)
    with pytest.raises(ValueError):
        BuildParams(min_angle=math.pi)
    with pytest.raises(ValueError):
        BuildParams(crossing_factor=0.5)


# -- whole builds ----------------------------------------------------------------

def test_single_ball_gives_single_vertex():
    rng = np.random.default_rng(4)
    pts = np.c_[rng.uniform(-1, 1, (30, 2)), np.zeros(30)]
    g = build_complex(PointCloud(pts), BuildParams(k=29))
    assert g.vertex_count == 1 and g.edge_count == 0
    assert np.all(g.summary == 0)


def test_too_few_points():
    with pytest.raises(IndexError):
        build_complex(PointCloud(np.eye(3)), BuildParams())


@pytest.fixture(scope="module")
def sphere_graph():
    cloud = sample_surface("sphere", 5000, 0.01, 0)
    return cloud, build_complex(cloud, BuildParams(seed=0))


def test_summary_is_total(sphere_graph):
    cloud, g = sphere_graph
    assert np.all(g.summary >= 0)
    assert np.all(g.summary < g.vertex_count)
    assert all(g.summary[p] == i for i, p in enumerate(g.vertices))
    assert len(set(g.vertices)) == g.vertex_count
    assert g.vertex_count < cloud.count / 5


def test_summary_proximity(sphere_graph):
    cloud, g = sphere_graph
    owner = g.summary
    dist = np.linalg.norm(cloud.points - g.positions[owner], axis=1)
    # the k-th neighbour sits on the boundary; allow for sqrt rounding
    assert np.all(dist <= g.epsilons[owner] * (1 + 1e-12))


def test_angle_floor(sphere_graph):
    _, g = sphere_graph
    for u in range(g.vertex_count):
        angles = sorted(g.angles_at(u))
        if len(angles) < 2:
            continue
        gaps = np.diff(angles + [angles[0] + 2 * math.pi])
        assert gaps.min() >= math.pi / 6 - 1e-9


def test_crossing_audit_is_clean(sphere_graph):
    _, g = sphere_graph
    assert crossing_audit(g) == []


def test_crossing_audit_finds_a_planted_crossing():
    cloud, g = _flat_graph([[0, 0, 0], [1, 1, 0], [0, 1, 0], [1, 0, 0]])
    g._insert_edge(0, 1, math.pi / 4, 5 * math.pi / 4, True)
    g._insert_edge(2, 3, 7 * math.pi / 4, 3 * math.pi / 4, True)
    assert crossing_audit(g, factor=10.0) == [(0, 1), (1, 0)]


def test_adjacency_is_symmetric_and_simple(sphere_graph):
    _, g = sphere_graph
    for (u, v), rec in g.adjacency.items():
        assert u != v
        assert g.adjacency[(v, u)].same_orientation == rec.same_orientation
        assert 0 <= rec.angle < 2 * math.pi
    assert len(g.adjacency) == 2 * g.edge_count
    assert len({frozenset(e) for e in g.edges()}) == g.edge_count


def test_frames_are_orthonormal(sphere_graph):
    _, g = sphere_graph
    gram = np.einsum("vkn,vln->vkl", g.bases, g.bases)
    assert np.allclose(gram, np.eye(2), atol=1e-10)


def test_build_is_deterministic(sphere_graph):
    cloud, g = sphere_graph
    h = build_complex(cloud, BuildParams(seed=0))
    assert h.vertices == g.vertices
    assert h.edges() == g.edges()
    assert h.adjacency == g.adjacency
    assert np.array_equal(h.summary, g.summary)


def test_export(sphere_graph, tmp_path):
    cloud, g = sphere_graph
    data = json.loads(json.dumps(export_complex(g)))
    assert len(data["vertices"]) == len(data["frames"]) == g.vertex_count
    assert len(data["edges"]) == g.edge_count
    v0 = data["vertices"][0]
    assert v0["coordinates"] == cloud.points[v0["index"]].tolist()
    e0 = data["edges"][0]
    assert set(e0) == {"u", "v", "angle_u", "angle_v", "same_orientation"}
    assert e0["same_orientation"] == g.adjacency[(e0["u"], e0["v"])].same_orientation
