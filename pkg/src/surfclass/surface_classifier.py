"""Face counting, Euler characteristic and the classification of surfaces."""

from __future__ import annotations

from dataclasses import dataclass, asdict

from .rotation_system import OneVertexRotation, RotationError, RotationSystem

__all__ = [
    "ClassificationError",
    "FaceTrace",
    "SurfaceClass",
    "trace_faces",
    "euler_characteristic",
    "is_orientable",
    "classify",
    "classify_rotation",
    "brute_force_faces",
    "brute_force_classify",
]


class ClassificationError(ValueError):
    pass


@dataclass(frozen=True)
class FaceTrace:
    face_count: int
    walks: tuple  # each walk: tuple of (edge_id, side) band-line tokens

    @property
    def walk_lengths(self) -> list[int]:
        return [len(w) for w in self.walks]


@dataclass(frozen=True)
class SurfaceClass:
    orientable: bool
    euler_characteristic: int
    handles: int
    crosscaps: int
    name: str

    def to_dict(self) -> dict:
        return asdict(self)


def trace_faces(ovr) -> FaceTrace:
    """Count boundary components of the ribbon graph of a one-vertex rotation.

    Each edge-end at position i owns two points on the disc boundary, a_i and
    b_i in counter-clockwise order. Disc arcs join b_i to a_{i+1}. The band
    of an edge at positions i < j joins a_i-b_j and b_i-a_j when untwisted,
    a_i-a_j and b_i-b_j when twisted. Faces are the cycles of this 2-regular
    graph.
    """
    ovr = OneVertexRotation(ovr)
    n = len(ovr)
    if n == 0:
        return FaceTrace(1, ((),))
    first: dict[int, int] = {}
    band = [0] * (2 * n)  # point -> partner across its band
    token = [None] * (2 * n)  # point -> (edge, side) of the band line through it
    for j, x in enumerate(ovr):
        e = abs(x)
        if e not in first:
            first[e] = j
            continue
        i = first[e]
        ai, bi, aj, bj = 2 * i, 2 * i + 1, 2 * j, 2 * j + 1
        pairs = ((ai, aj), (bi, bj)) if x < 0 else ((ai, bj), (bi, aj))
        for side, (p, q) in enumerate(pairs):
            band[p], band[q] = q, p
            token[p] = token[q] = (e, side)
    arc = [0] * (2 * n)
    for i in range(n):
        b, a_next = 2 * i + 1, 2 * ((i + 1) % n)
        arc[b], arc[a_next] = a_next, b

    seen = [False] * (2 * n)
    walks = []
    for start in range(2 * n):
        if seen[start]:
            continue
        walk = []
        p = start
        while not seen[p]:
            q = band[p]
            seen[p] = seen[q] = True
            walk.append(token[p])
            p = arc[q]
        walks.append(tuple(walk))
    return FaceTrace(len(walks), tuple(walks))


def euler_characteristic(ft: FaceTrace, edge_count: int) -> int:
    return 1 - edge_count + ft.face_count


def is_orientable(ovr) -> bool:
    """Valid only for words produced by contraction, where tree twists are gone."""
    return all(x > 0 for x in ovr)


_NONORIENTABLE_NAMES = {1: "projective plane", 2: "Klein bottle", 3: "Dyck's surface"}


def classify(chi: int, orientable: bool) -> SurfaceClass:
    """Name the closed surface with the given Euler characteristic and orientability."""
    chi = int(chi)
    if chi > 2:
        raise ClassificationError(f"Euler characteristic {chi} > 2 is impossible for a surface")
    if orientable:
        if chi % 2:
            raise ClassificationError(f"orientable surface with odd Euler characteristic {chi}")
        h = (2 - chi) // 2
        name = {0: "sphere", 1: "torus"}.get(h, f"genus-{h} torus")
        return SurfaceClass(True, chi, h, 0, name)
    c = 2 - chi
    if c < 1:
        raise ClassificationError("a non-orientable surface has Euler characteristic <= 1")
    name = _NONORIENTABLE_NAMES.get(c, f"{c}-crosscap surface")
    return SurfaceClass(False, chi, 0, c, name)


def classify_rotation(ovr) -> tuple[SurfaceClass, FaceTrace]:
    ovr = OneVertexRotation(ovr)
    ft = trace_faces(ovr)
    chi = euler_characteristic(ft, ovr.edge_count)
    return classify(chi, is_orientable(ovr)), ft


# ---------------------------------------------------------------------------
# Reference route: trace faces on the multi-vertex system, no contraction
# ---------------------------------------------------------------------------

def brute_force_faces(rs: RotationSystem) -> int:
    """Face count by walking darts with a running orientation flag.

    A state is (dart, direction). Crossing a twisted edge flips the
    direction; at the far end the walk continues with the next dart in the
    current direction. Every face is traced once in each direction.
    """
    if rs.edge_count == 0:
        return rs.vertex_count  # only a lone vertex is connected; it bounds one face
    position = {}
    mate = {}
    for v, rot in enumerate(rs.rotations):
        for i, end in enumerate(rot):
            position.setdefault(end.edge, []).append((v, i))
    for a, b in position.values():
        mate[a], mate[b] = b, a
    degree = [len(r) for r in rs.rotations]

    seen = set()
    orbits = 0
    for v, rot in enumerate(rs.rotations):
        for i in range(len(rot)):
            for direction in (1, -1):
                state = ((v, i), direction)
                if state in seen:
                    continue
                orbits += 1
                while state not in seen:
                    seen.add(state)
                    (x, j), d = state
                    y, k = mate[(x, j)]
                    if rs.rotations[x][j].twisted:
                        d = -d
                    state = ((y, (k + d) % degree[y]), d)
    if orbits % 2:
        raise RotationError("face walk produced an odd number of directed boundaries")
    return orbits // 2


def _orientable_by_colouring(rs: RotationSystem) -> bool:
    side = [None] * rs.vertex_count
    for s in range(rs.vertex_count):
        if side[s] is not None:
            continue
        side[s] = 0
        stack = [s]
        while stack:
            x = stack.pop()
            for end in rs.rotations[x]:
                a, b = rs.endpoints[end.edge]
                y = b if a == x else a
                want = side[x] ^ int(end.twisted)
                if side[y] is None:
                    side[y] = want
                    stack.append(y)
                elif side[y] != want:
                    return False
    return True


def brute_force_classify(rs: RotationSystem) -> SurfaceClass:
    """Classify without contracting: chi = V - E + F over the whole system."""
    chi = rs.vertex_count - rs.edge_count + brute_force_faces(rs)
    return classify(chi, _orientable_by_colouring(rs))
