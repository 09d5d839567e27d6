"""Grow an embedded graph over a point cloud.

Vertices are cloud points; each vertex carries a tangent frame and
"summarises" the not-yet-summarised cloud points within its radius. From a
vertex we walk along +t1, -t1, +t2, -t2 to the nearest point outside the
radius: an unsummarised point becomes a new vertex (explored depth-first), a
summarised one proposes an edge to its summariser. Edges are only accepted
if their projections cross no nearby edge, they keep a minimum angle to the
edges already at both ends, and the two frames have a well-defined relative
orientation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry_io import PointCloud
from .tangent_space import DegenerateFrameError, TangentFrame, frame_from_gram

__all__ = [
    "BuildParams",
    "EdgeRecord",
    "EmbeddedGraph",
    "AddResult",
    "DegenerateAngleError",
    "AmbiguousOrientationError",
    "project",
    "edge_angle",
    "segments_cross",
    "orientation_sign",
    "try_add_edge",
    "build_complex",
    "crossing_audit",
    "export_complex",
]

TWO_PI = 2.0 * math.pi
DET_TOL = 1e-6
REJECT_REASONS = ("crossing", "small-angle", "ambiguous-orientation", "degenerate-angle", "duplicate")


class DegenerateAngleError(ValueError):
    pass


class AmbiguousOrientationError(ValueError):
    pass


@dataclass(frozen=True)
class BuildParams:
    k: int = 20
    min_angle: float = math.pi / 6
    crossing_factor: float = 10.0
    seed: int = 0
    det_tol: float = DET_TOL
    # half-angle of the cone searched around each exploration direction;
    # pi/2 means the whole open half-plane
    direction_halfangle: float = math.pi / 2

    def __post_init__(self):
        if self.k < 3:
            raise ValueError("k must be >= 3")
        if not 0 < self.min_angle < math.pi:
            raise ValueError("min_angle must lie in (0, pi)")
        if self.crossing_factor < 1:
            raise ValueError("crossing_factor must be >= 1")
        if not 0 < self.direction_halfangle <= math.pi / 2:
            raise ValueError("direction_halfangle must lie in (0, pi/2]")


@dataclass(frozen=True)
class EdgeRecord:
    angle: float
    same_orientation: bool


class AddResult(NamedTuple):
    added: bool
    reason: str | None = None

    def __bool__(self):
        return self.added


class _Grow:
    """Capacity-doubling row store."""

    def __init__(self, width, dtype=float):
        self.data = np.zeros((16,) + tuple(width), dtype=dtype)
        self.n = 0

    def append(self, row):
        if self.n == len(self.data):
            self.data = np.concatenate([self.data, np.zeros_like(self.data)])
        self.data[self.n] = row
        self.n += 1

    @property
    def view(self):
        return self.data[: self.n]


class EmbeddedGraph:
    """Vertices, per-point summarisers, frames and an angle/orientation adjacency.

    Vertex ``i`` is cloud point ``vertices[i]``; ``summary[p]`` is the vertex
    index summarising cloud point ``p`` (-1 while unsummarised).
    """

    def __init__(self, cloud: PointCloud):
        self.cloud = cloud
        self.vertices: list[int] = []
        self.frames: list[TangentFrame] = []
        self.summary = np.full(cloud.count, -1, dtype=np.int64)
        self.adjacency: dict[tuple[int, int], EdgeRecord] = {}
        self._nbrs: list[list[int]] = []
        self._pos = _Grow((cloud.dim,))
        self._basis = _Grow((2, cloud.dim))
        self._eps = _Grow(())
        self._edges = _Grow((2,), dtype=np.int64)
        self.params: BuildParams | None = None
        self.stats: BuildStats | None = None

    # -- construction --------------------------------------------------------
    def add_vertex(self, frame: TangentFrame) -> int:
        idx = len(self.vertices)
        self.vertices.append(frame.base_index)
        self.frames.append(frame)
        self._nbrs.append([])
        self._pos.append(self.cloud.points[frame.base_index])
        self._basis.append(frame.basis)
        self._eps.append(frame.epsilon)
        return idx

    def _insert_edge(self, u, v, angle_u, angle_v, same):
        self.adjacency[(u, v)] = EdgeRecord(angle_u, same)
        self.adjacency[(v, u)] = EdgeRecord(angle_v, same)
        self._nbrs[u].append(v)
        self._nbrs[v].append(u)
        self._edges.append((u, v))

    # -- queries ----------------------------------------------------------------
    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return self._edges.n

    @property
    def positions(self) -> np.ndarray:
        return self._pos.view

    @property
    def epsilons(self) -> np.ndarray:
        return self._eps.view

    @property
    def bases(self) -> np.ndarray:
        return self._basis.view

    def edges(self) -> list[tuple[int, int]]:
        """Edges in insertion order, as (u, v) with u the proposing vertex."""
        return [tuple(map(int, e)) for e in self._edges.view]

    def neighbors(self, u: int) -> list[int]:
        return list(self._nbrs[u])

    def has_edge(self, u, v) -> bool:
        return (u, v) in self.adjacency

    def angles_at(self, u: int) -> list[float]:
        return [self.adjacency[(u, w)].angle for w in self._nbrs[u]]

    def components(self) -> list[list[int]]:
        seen = [False] * self.vertex_count
        comps = []
        for s in range(self.vertex_count):
            if seen[s]:
                continue
            seen[s] = True
            stack, comp = [s], []
            while stack:
                x = stack.pop()
                comp.append(x)
                for y in self._nbrs[x]:
                    if not seen[y]:
                        seen[y] = True
                        stack.append(y)
            comps.append(sorted(comp))
        return comps


# ---------------------------------------------------------------------------
# Local geometry
# ---------------------------------------------------------------------------

def project(frame: TangentFrame, cloud: PointCloud, target: int) -> tuple[float, float]:
    d = cloud.points[target] - cloud.points[frame.base_index]
    return float(frame.t1 @ d), float(frame.t2 @ d)


def _angle_of(x: float, y: float) -> float:
    if x == 0.0 and y == 0.0:
        raise DegenerateAngleError("zero projection: target lies on the normal space")
    a = math.atan2(y, x)
    if a < 0:
        a += TWO_PI
    # atan2 can round -tiny up to exactly 2*pi
    return 0.0 if a >= TWO_PI else a


def edge_angle(frame: TangentFrame, cloud: PointCloud, target: int) -> float:
    """Angle in [0, 2pi) of the projected displacement base -> target."""
    return _angle_of(*project(frame, cloud, target))


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_cross(p1, p2, q1, q2) -> bool:
    """True iff the open segments p1p2 and q1q2 intersect.

    Touching at an endpoint does not count; collinear overlap of positive
    length does.
    """
    (ax, ay), (bx, by), (cx, cy), (dx, dy) = p1, p2, q1, q2
    o1 = _orient(ax, ay, bx, by, cx, cy)
    o2 = _orient(ax, ay, bx, by, dx, dy)
    o3 = _orient(cx, cy, dx, dy, ax, ay)
    o4 = _orient(cx, cy, dx, dy, bx, by)
    if o1 == 0 and o2 == 0:
        # collinear: compare extents along the dominant axis
        if abs(bx - ax) >= abs(by - ay):
            lo1, hi1, lo2, hi2 = min(ax, bx), max(ax, bx), min(cx, dx), max(cx, dx)
        else:
            lo1, hi1, lo2, hi2 = min(ay, by), max(ay, by), min(cy, dy), max(cy, dy)
        return min(hi1, hi2) > max(lo1, lo2)
    return (o1 > 0 > o2 or o1 < 0 < o2) and (o3 > 0 > o4 or o3 < 0 < o4)


def _segments_cross_many(p1, p2, q1, q2) -> np.ndarray:
    """Row-wise segments_cross; all arguments broadcast to (m, 2)."""
    p1, p2, q1, q2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (p1, p2, q1, q2)))
    ax, ay, bx, by = p1[..., 0], p1[..., 1], p2[..., 0], p2[..., 1]
    cx, cy, dx, dy = q1[..., 0], q1[..., 1], q2[..., 0], q2[..., 1]
    o1 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    o2 = (bx - ax) * (dy - ay) - (by - ay) * (dx - ax)
    o3 = (dx - cx) * (ay - cy) - (dy - cy) * (ax - cx)
    o4 = (dx - cx) * (by - cy) - (dy - cy) * (bx - cx)
    hit = (np.sign(o1) * np.sign(o2) < 0) & (np.sign(o3) * np.sign(o4) < 0)
    collinear = (o1 == 0) & (o2 == 0)
    if collinear.any():
        use_x = np.abs(bx - ax) >= np.abs(by - ay)
        lo1 = np.where(use_x, np.minimum(ax, bx), np.minimum(ay, by))
        hi1 = np.where(use_x, np.maximum(ax, bx), np.maximum(ay, by))
        lo2 = np.where(use_x, np.minimum(cx, dx), np.minimum(cy, dy))
        hi2 = np.where(use_x, np.maximum(cx, dx), np.maximum(cy, dy))
        hit |= collinear & (np.minimum(hi1, hi2) > np.maximum(lo1, lo2))
    return hit


def _orientation_det(basis_u: np.ndarray, basis_v: np.ndarray) -> float:
    m = basis_u @ basis_v.T
    return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def orientation_sign(frame_u: TangentFrame, frame_v: TangentFrame, det_tol: float = DET_TOL) -> int:
    """Sign of det M with M[a, b] = t_a(u) . t_b(v)."""
    det = _orientation_det(frame_u.basis, frame_v.basis)
    if abs(det) <= det_tol:
        raise AmbiguousOrientationError(f"|det| = {abs(det):.3g} <= {det_tol}")
    return 1 if det > 0 else -1


def _circular_gap(a, b):
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


# ---------------------------------------------------------------------------
# Edge insertion
# ---------------------------------------------------------------------------

def _nearby_edges(graph: EmbeddedGraph, u: int, v: int, factor: float) -> np.ndarray:
    """Indices of stored edges within scan range of the candidate (u, v).

    A pair of edges is in range when some endpoint of one lies within
    ``factor`` times the largest of the four endpoint radii of some endpoint
    of the other; the relation is symmetric.
    """
    if graph.edge_count == 0:
        return np.zeros(0, dtype=np.int64)
    pos, eps = graph.positions, graph.epsilons
    ends = graph._edges.view
    du = np.linalg.norm(pos - pos[u], axis=1)
    dv = np.linalg.norm(pos - pos[v], axis=1)
    a, b = ends[:, 0], ends[:, 1]
    near = np.minimum(np.minimum(du[a], du[b]), np.minimum(dv[a], dv[b]))
    reach = factor * np.maximum(np.maximum(eps[a], eps[b]), max(eps[u], eps[v]))
    shares = (a == u) | (a == v) | (b == u) | (b == v)
    return np.flatnonzero((near <= reach) & ~shares)


def _chart_coords(origins, bases, pts):
    """Frame coordinates of ``pts`` and whether each lies in the frame's chart.

    A point is in the chart when its displacement is at least as tangential
    as it is normal; points further round the surface (the far side of a
    tube, say) would alias onto the plane and are excluded.
    """
    d = pts - origins
    if bases.ndim == 2:
        c = d @ bases.T
    else:
        c = np.einsum("mkn,mn->mk", bases, d)
    tang = np.einsum("...k,...k->...", c, c)
    full = np.einsum("...n,...n->...", d, d)
    return c, 2.0 * tang >= full


def _crossing_rows(graph: EmbeddedGraph, u: int, v: int, others: np.ndarray) -> np.ndarray:
    """For each edge in ``others``: does (u, v) cross it in any of the four endpoint frames?"""
    pos, bases = graph.positions, graph.bases
    ends = graph._edges.view[others]
    a, b = ends[:, 0], ends[:, 1]
    m = len(others)
    hit = np.zeros(m, dtype=bool)
    pu_all = np.broadcast_to(pos[u], (m, pos.shape[1]))
    pv_all = np.broadcast_to(pos[v], (m, pos.shape[1]))
    for f in (u, v):
        origin, basis = pos[f], bases[f]
        pu, ok_u = _chart_coords(origin, basis, pos[u])
        pv, ok_v = _chart_coords(origin, basis, pos[v])
        if not (ok_u and ok_v):
            continue
        qa, ok_a = _chart_coords(origin, basis, pos[a])
        qb, ok_b = _chart_coords(origin, basis, pos[b])
        hit |= ok_a & ok_b & _segments_cross_many(pu, pv, qa, qb)
    for f in (a, b):
        origins, fb = pos[f], bases[f]
        pu, ok_u = _chart_coords(origins, fb, pu_all)
        pv, ok_v = _chart_coords(origins, fb, pv_all)
        qa, ok_a = _chart_coords(origins, fb, pos[a])
        qb, ok_b = _chart_coords(origins, fb, pos[b])
        hit |= ok_u & ok_v & ok_a & ok_b & _segments_cross_many(pu, pv, qa, qb)
    return hit


def _crosses(graph: EmbeddedGraph, u, v, factor) -> bool:
    others = _nearby_edges(graph, u, v, factor)
    return bool(len(others)) and bool(_crossing_rows(graph, u, v, others).any())


def try_add_edge(graph: EmbeddedGraph, cloud: PointCloud, u: int, v: int, params: BuildParams = BuildParams()) -> AddResult:
    """Add the edge (u, v) if it passes every validity test.

    Rejections leave the graph untouched and report the failing test.
    """
    if u == v:
        raise ValueError("loops are not allowed")
    if graph.has_edge(u, v):
        return AddResult(False, "duplicate")
    fu, fv = graph.frames[u], graph.frames[v]
    try:
        angle_u = edge_angle(fu, cloud, fv.base_index)
        angle_v = edge_angle(fv, cloud, fu.base_index)
    except DegenerateAngleError:
        return AddResult(False, "degenerate-angle")
    if _crosses(graph, u, v, params.crossing_factor):
        return AddResult(False, "crossing")
    for w, ang in ((u, angle_u), (v, angle_v)):
        if any(_circular_gap(ang, a) < params.min_angle for a in graph.angles_at(w)):
            return AddResult(False, "small-angle")
    det = _orientation_det(fu.basis, fv.basis)
    if abs(det) <= params.det_tol:
        return AddResult(False, "ambiguous-orientation")
    graph._insert_edge(u, v, angle_u, angle_v, det > 0)
    return AddResult(True)


# ---------------------------------------------------------------------------
# Growth
# ---------------------------------------------------------------------------

@dataclass
class BuildStats:
    restarts: int = 0
    blocked: int = 0
    attempts: int = 0
    bridges: int = 0
    rejected: dict = field(default_factory=lambda: {r: 0 for r in REJECT_REASONS})


class _Builder:
    def __init__(self, cloud: PointCloud, params: BuildParams):
        if cloud.count < params.k + 1:
            raise IndexError(f"k exceeds N-1 (k={params.k}, N={cloud.count})")
        self.cloud = cloud
        self.params = params
        self.graph = EmbeddedGraph(cloud)
        self.graph.params = params
        self.blocked = np.zeros(cloud.count, dtype=bool)
        self.rng = np.random.default_rng(params.seed)
        self.stats = self.graph.stats = BuildStats()
        self.cos_cone = math.cos(params.direction_halfangle)

    def _new_vertex(self, p: int):
        """Make cloud point p a vertex; returns (vertex, targets) or None if degenerate."""
        pts = self.cloud.points
        diff = pts - pts[p]
        sq = np.einsum("ij,ij->i", diff, diff)
        k = self.params.k
        eps = math.sqrt(np.partition(sq, k)[k])
        try:
            if not eps > 0:
                raise DegenerateFrameError(p)
            w2 = np.exp(-sq / (2.0 * eps))
            gram = (diff * w2[:, None]).T @ diff / w2.sum()
            frame = frame_from_gram((gram + gram.T) / 2, p, eps)
        except DegenerateFrameError:
            self.blocked[p] = True
            self.stats.blocked += 1
            return None
        vtx = self.graph.add_vertex(frame)
        summary = self.graph.summary
        summary[(sq <= eps * eps) & (summary < 0)] = vtx
        summary[p] = vtx
        return vtx, self._direction_targets(frame, diff, sq, eps)

    def _direction_targets(self, frame, diff, sq, eps):
        coords = diff @ frame.basis.T
        outside = sq > eps * eps
        norms = np.sqrt(np.einsum("ij,ij->i", coords, coords))
        targets = []
        for axis, sign in ((0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)):
            along = sign * coords[:, axis]
            mask = outside & (along > 0)
            if self.cos_cone > 0:
                mask &= along >= self.cos_cone * norms
            cand = np.flatnonzero(mask)
            if len(cand) == 0:
                targets.append(-1)
            else:
                # argmin returns the lowest index among ties
                targets.append(int(cand[np.argmin(sq[cand])]))
        return targets

    def _seed(self):
        while True:
            free = np.flatnonzero((self.graph.summary < 0) & ~self.blocked)
            if len(free) == 0:
                if np.any(self.graph.summary < 0):
                    bad = int(np.flatnonzero(self.graph.summary < 0)[0])
                    raise DegenerateFrameError(bad, "no valid starting vertex among the unsummarised points")
                return None
            made = self._new_vertex(int(self.rng.choice(free)))
            if made is not None:
                return made

    def _attempt(self, u, v):
        self.stats.attempts += 1
        res = try_add_edge(self.graph, self.cloud, u, v, self.params)
        if not res.added:
            self.stats.rejected[res.reason] += 1
        return res

    def run(self) -> EmbeddedGraph:
        summary = self.graph.summary
        first = True
        while True:
            made = self._seed()
            if made is None:
                break
            if not first:
                self.stats.restarts += 1
            first = False
            stack = [(made[0], made[1], 0)]
            while stack:
                u, targets, i = stack.pop()
                if i == len(targets):
                    continue
                stack.append((u, targets, i + 1))
                p = targets[i]
                if p < 0:
                    continue
                if summary[p] >= 0:
                    if summary[p] != u:
                        self._attempt(u, int(summary[p]))
                    continue
                if self.blocked[p]:
                    continue
                child = self._new_vertex(p)
                if child is None:
                    continue
                self._attempt(u, child[0])
                stack.append((child[0], child[1], 0))
        self._bridge()
        return self.graph

    def _bridge(self, tries: int = 12):
        """Join minor components to the rest with ordinary validated edges.

        Restarted growth can leave a vertex whose every proposed edge was
        rejected; each vertex of a minor component tries its ``tries`` nearest
        vertices outside the component, closest first.
        """
        graph = self.graph
        progress = True
        while progress:
            comps = graph.components()
            if len(comps) < 2:
                return
            progress = False
            comps.sort(key=len)
            label = np.empty(graph.vertex_count, dtype=np.int64)
            for c, members in enumerate(comps):
                label[members] = c
            for c, members in enumerate(comps[:-1]):
                if len(set(label[members])) != 1:
                    continue  # merged earlier in this sweep
                pos = graph.positions
                for u in members:
                    dist = np.linalg.norm(pos - pos[u], axis=1)
                    dist[label == label[u]] = np.inf
                    order = np.argsort(dist, kind="stable")[:tries]
                    w = self._link_any(u, order[np.isfinite(dist[order])])
                    if w is not None:
                        label[label == label[u]] = label[w]
                        progress = True
                        break

    def _link_any(self, u, partners):
        for w in partners:
            if self._attempt(int(u), int(w)).added:
                self.stats.bridges += 1
                return int(w)
        return None


def build_complex(cloud: PointCloud, params: BuildParams = BuildParams()) -> EmbeddedGraph:
    """Select vertices and edges over the whole cloud; deterministic per seed."""
    return _Builder(cloud, params).run()


# ---------------------------------------------------------------------------
# Audits and export
# ---------------------------------------------------------------------------

def crossing_audit(graph: EmbeddedGraph, factor: float | None = None) -> list[tuple[int, int]]:
    """Replay the crossing test for every stored edge against all edges in range.

    Returns the (edge, other_edge) index pairs that cross in some endpoint
    frame; empty for a well-formed complex.
    """
    if factor is None:
        factor = (graph.params or BuildParams()).crossing_factor
    findings = []
    for e, (u, v) in enumerate(graph._edges.view):
        others = _nearby_edges(graph, int(u), int(v), factor)
        if len(others):
            findings.extend((e, int(o)) for o in others[_crossing_rows(graph, int(u), int(v), others)])
    return findings


def export_complex(graph: EmbeddedGraph) -> dict:
    """Plot-ready JSON-compatible description of the complex."""
    pts = graph.cloud.points
    edges = []
    for u, v in graph.edges():
        edges.append(
            {
                "u": u,
                "v": v,
                "angle_u": graph.adjacency[(u, v)].angle,
                "angle_v": graph.adjacency[(v, u)].angle,
                "same_orientation": graph.adjacency[(u, v)].same_orientation,
            }
        )
    return {
        "vertices": [{"index": int(p), "coordinates": pts[p].tolist()} for p in graph.vertices],
        "frames": [
            {"t1": f.t1.tolist(), "t2": f.t2.tolist(), "epsilon": f.epsilon} for f in graph.frames
        ],
        "edges": edges,
    }


def write_complex(graph: EmbeddedGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(export_complex(graph), fh)
