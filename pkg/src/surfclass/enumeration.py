"""Exhaustive enumeration of small connected rotation systems."""

from __future__ import annotations

import itertools
from typing import Iterator

from .rotation_system import RotationSystem

__all__ = ["edge_multisets", "cyclic_orders", "all_rotation_systems"]


def _connected(n_vertices, edges) -> bool:
    parent = list(range(n_vertices))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(v) for v in range(n_vertices)}) == 1


def edge_multisets(n_vertices: int, n_edges: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """Connected multigraphs (loops and parallel edges allowed) as sorted edge tuples."""
    pairs = [(a, b) for a in range(n_vertices) for b in range(a, n_vertices)]
    for edges in itertools.combinations_with_replacement(pairs, n_edges):
        if _connected(n_vertices, edges):
            yield edges


def cyclic_orders(items) -> list[tuple]:
    """Distinct cyclic arrangements of a multiset, each started at its least item."""
    items = sorted(items)
    if len(items) <= 1:
        return [tuple(items)]
    head, rest = items[0], items[1:]
    return sorted({(head,) + p for p in itertools.permutations(rest)})


def all_rotation_systems(max_vertices: int = 3, max_edges: int = 4) -> Iterator[RotationSystem]:
    """Every connected rotation system up to the given size.

    Edge ids are 1..E. All cyclic orders at every vertex and all twist
    assignments are produced; isomorphic copies are not removed.
    """
    for nv in range(1, max_vertices + 1):
        for ne in range(nv - 1, max_edges + 1):
            for edges in edge_multisets(nv, ne):
                ends = [[] for _ in range(nv)]
                for eid, (a, b) in enumerate(edges, start=1):
                    ends[a].append(eid)
                    ends[b].append(eid)
                per_vertex = [cyclic_orders(e) for e in ends]
                for orders in itertools.product(*per_vertex):
                    for twists in itertools.product((False, True), repeat=ne):
                        yield RotationSystem(
                            [[(e, twists[e - 1]) for e in rot] for rot in orders]
                        )
