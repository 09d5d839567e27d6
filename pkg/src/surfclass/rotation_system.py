"""Rotation systems: per-vertex cyclic orders of typed edge-ends.

An edge-end is ``(edge_id, twisted)``; a twisted (type-1) edge reverses the
local orientation between its endpoints. Contracting a spanning tree, with
local sign switches that keep every tree edge untwisted, leaves a single
cyclic word of signed edge ids (negative = twisted).
"""

from __future__ import annotations

from collections import Counter
from typing import NamedTuple, Sequence

__all__ = [
    "ConnectivityError",
    "RotationError",
    "EdgeEnd",
    "RotationSystem",
    "OneVertexRotation",
    "edge_id",
    "rotations_from_graph",
    "local_sign_switch",
    "contract_to_one_vertex",
    "parse_rotation_text",
    "format_rotation_text",
]


class RotationError(ValueError):
    pass


class ConnectivityError(RotationError):
    def __init__(self, sizes):
        self.component_sizes = sorted(sizes, reverse=True)
        super().__init__(f"graph is disconnected: component sizes {self.component_sizes}")


class EdgeEnd(NamedTuple):
    edge: int
    twisted: bool = False

    def signed(self) -> int:
        return -self.edge if self.twisted else self.edge


class RotationSystem:
    """Cyclic lists of edge-ends, one per vertex.

    Every edge id occurs exactly twice (a loop twice at one vertex) and both
    ends agree on the twisted flag. The underlying multigraph is connected.
    """

    def __init__(self, rotations: Sequence[Sequence], *, check_connected: bool = True):
        self.rotations: tuple[tuple[EdgeEnd, ...], ...] = tuple(
            tuple(EdgeEnd(int(e), bool(t)) for e, t in rot) for rot in rotations
        )
        seen = Counter()
        flags = {}
        self.endpoints: dict[int, list[int]] = {}
        for v, rot in enumerate(self.rotations):
            for end in rot:
                seen[end.edge] += 1
                if flags.setdefault(end.edge, end.twisted) != end.twisted:
                    raise RotationError(f"edge {end.edge} has inconsistent twist flags")
                self.endpoints.setdefault(end.edge, []).append(v)
        bad = sorted(e for e, c in seen.items() if c != 2)
        if bad:
            raise RotationError(f"edges {bad} do not occur exactly twice")
        self.twisted: dict[int, bool] = flags
        if check_connected:
            sizes = self.component_sizes()
            if len(sizes) > 1:
                raise ConnectivityError(sizes)

    @property
    def vertex_count(self) -> int:
        return len(self.rotations)

    @property
    def edge_count(self) -> int:
        return len(self.twisted)

    def component_sizes(self) -> list[int]:
        parent = list(range(self.vertex_count))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.endpoints.values():
            parent[find(a)] = find(b)
        return list(Counter(find(v) for v in range(self.vertex_count)).values())

    def is_loop(self, edge: int) -> bool:
        a, b = self.endpoints[edge]
        return a == b

    def __eq__(self, other):
        return isinstance(other, RotationSystem) and self.rotations == other.rotations

    def __hash__(self):
        return hash(self.rotations)

    def __repr__(self):
        return f"RotationSystem({format_rotation_text(self)!r})"


class OneVertexRotation(tuple):
    """A cyclic word of 2m signed edge ids; each |id| appears twice with one sign."""

    def __new__(cls, word: Sequence[int] = ()):
        self = super().__new__(cls, (int(x) for x in word))
        counts = Counter(abs(x) for x in self)
        if any(x == 0 for x in self):
            raise RotationError("edge ids must be non-zero")
        bad = sorted(e for e, c in counts.items() if c != 2)
        if bad:
            raise RotationError(f"edges {bad} do not occur exactly twice")
        signs = {}
        for x in self:
            if signs.setdefault(abs(x), x > 0) != (x > 0):
                raise RotationError(f"edge {abs(x)} occurs with both signs")
        return self

    @property
    def edge_count(self) -> int:
        return len(self) // 2

    def as_rotation_system(self) -> RotationSystem:
        return RotationSystem([[(abs(x), x < 0) for x in self]])


def edge_id(u: int, v: int, vertex_count: int) -> int:
    """Vertex-independent edge number: min(u, v) * V + max(u, v)."""
    if u == v:
        raise RotationError(f"loop at vertex {u}")
    lo, hi = (u, v) if u < v else (v, u)
    return lo * vertex_count + hi


def rotations_from_graph(graph, vertices=None) -> RotationSystem:
    """Sort each vertex's edges by angle; twisted iff the frames disagree.

    ``vertices`` restricts the system to one connected component, renumbered
    in ascending order; by default the whole graph must be connected.
    """
    if vertices is None:
        comps = graph.components()
        if len(comps) > 1:
            raise ConnectivityError([len(c) for c in comps])
        vertices = range(graph.vertex_count)
    vertices = sorted(vertices)
    local = {v: i for i, v in enumerate(vertices)}
    nv = len(vertices)
    rotations = []
    for u in vertices:
        nbrs = sorted(graph.neighbors(u), key=lambda w: (graph.adjacency[(u, w)].angle, w))
        if any(w not in local for w in nbrs):
            raise RotationError(f"vertex subset is not closed under adjacency at vertex {u}")
        rotations.append(
            [
                (edge_id(local[u], local[w], nv), not graph.adjacency[(u, w)].same_orientation)
                for w in nbrs
            ]
        )
    return RotationSystem(rotations)


def local_sign_switch(rs: RotationSystem, v: int) -> RotationSystem:
    """Reverse the rotation at v and flip the type of every link at v."""
    if not 0 <= v < rs.vertex_count:
        raise IndexError(f"vertex {v} not in rotation system")
    flip = {e for e, ends in rs.endpoints.items() if v in ends and not rs.is_loop(e)}
    rotations = []
    for w, rot in enumerate(rs.rotations):
        rot = [(e, t ^ (e in flip)) for e, t in rot]
        rotations.append(rot[::-1] if w == v else rot)
    return RotationSystem(rotations, check_connected=False)


def contract_to_one_vertex(rs: RotationSystem, root: int = 0) -> OneVertexRotation:
    """Contract a depth-first spanning tree into a single vertex.

    Entering a vertex along a twisted tree edge first switches that vertex,
    so every tree edge is untwisted when contracted; the vertex's rotation,
    started just after the entry edge, is spliced in place of that edge.
    """
    sizes = rs.component_sizes()
    if len(sizes) > 1:
        raise ConnectivityError(sizes)
    if rs.vertex_count == 0:
        return OneVertexRotation()
    twisted = dict(rs.twisted)
    rot = [list(r) for r in rs.rotations]
    ends = rs.endpoints
    visited = [False] * rs.vertex_count
    word: list[int] = []

    def other_end(e, w):
        a, b = ends[e]
        return b if a == w else a

    visited[root] = True
    stack = [(root, [end.edge for end in rot[root]], 0)]
    while stack:
        w, order, i = stack.pop()
        if i == len(order):
            continue
        stack.append((w, order, i + 1))
        e = order[i]
        x = other_end(e, w)
        if visited[x]:
            word.append(-e if twisted[e] else e)
            continue
        visited[x] = True
        seq = [end.edge for end in rot[x]]
        if twisted[e]:
            seq.reverse()
            for f in seq:
                if ends[f][0] != ends[f][1]:
                    twisted[f] = not twisted[f]
        j = seq.index(e)
        seq = seq[j + 1:] + seq[:j]
        stack.append((x, seq, 0))
    return OneVertexRotation(word)


def format_rotation_text(rs) -> str:
    """One line per vertex, ``v: ±id ±id ...``."""
    if isinstance(rs, OneVertexRotation):
        return "0: " + " ".join(str(x) for x in rs) if rs else "0:"
    lines = []
    for v, rot in enumerate(rs.rotations):
        body = " ".join(str(end.signed()) for end in rot)
        lines.append(f"{v}: {body}".rstrip())
    return "\n".join(lines)


def parse_rotation_text(text: str) -> RotationSystem:
    rotations = {}
    for lineno, line in enumerate(text.splitlines()):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, body = line.partition(":")
        if not sep:
            raise RotationError(f"line {lineno}: expected 'v: ids...'")
        try:
            v = int(head)
            ids = [int(tok) for tok in body.split()]
        except ValueError:
            raise RotationError(f"line {lineno}: non-integer token") from None
        if any(x == 0 for x in ids):
            raise RotationError(f"line {lineno}: edge ids must be non-zero")
        rotations[v] = [(abs(x), x < 0) for x in ids]
    if sorted(rotations) != list(range(len(rotations))):
        raise RotationError("vertices must be numbered 0..V-1")
    return RotationSystem([rotations[v] for v in range(len(rotations))])
