"""Shared hypothesis strategies."""

from hypothesis import strategies as st

from surfclass.rotation_system import RotationSystem


@st.composite
def rotation_systems(draw, max_vertices=6, max_extra=5, even_twists=False):
    nv = draw(st.integers(1, max_vertices))
    edges = [(draw(st.integers(0, v - 1)), v) for v in range(1, nv)]
    for _ in range(draw(st.integers(0, max_extra))):
        a = draw(st.integers(0, nv - 1))
        b = draw(st.integers(0, nv - 1))
        edges.append((min(a, b), max(a, b)))
    if even_twists:
        # twist = parity difference of a vertex 2-colouring; every cycle is even
        colour = [draw(st.booleans()) for _ in range(nv)]
        twists = [colour[a] != colour[b] for a, b in edges]
    else:
        twists = [draw(st.booleans()) for _ in edges]
    ends = [[] for _ in range(nv)]
    for eid, (a, b) in enumerate(edges, start=1):
        ends[a].append((eid, twists[eid - 1]))
        ends[b].append((eid, twists[eid - 1]))
    ends = [draw(st.permutations(e)) for e in ends]
    return RotationSystem(ends)
