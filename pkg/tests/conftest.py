"""Shared instance generators for the test suite.

Every generator is deterministic given its RNG so test runs are
reproducible; seeds are fixed in the tests themselves.
"""

from __future__ import annotations

import itertools
import random

from sparsefo.canon import canonical_code
from sparsefo.structures import Graph, RelationalStructure, RootedForest, graph_to_structure


def gnp_graph(rng: random.Random, n: int, p: float) -> Graph:
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph(range(n), edges)


def bounded_degree_graph(rng: random.Random, n: int, deg: int) -> Graph:
    edges: set[tuple[int, int]] = set()
    degree = {v: 0 for v in range(n)}
    for _ in range(4 * n * deg):
        u, v = rng.randrange(n), rng.randrange(n)
        e = (min(u, v), max(u, v))
        if u == v or degree[u] >= deg or degree[v] >= deg or e in edges:
            continue
        edges.add(e)
        degree[u] += 1
        degree[v] += 1
    return Graph(range(n), edges)


def random_forest(
    rng: random.Random, n: int, depth: int, color_names: tuple[str, ...] = ("C1", "C2")
) -> RootedForest:
    parent: dict[int, int] = {}
    level: dict[int, int] = {}
    for v in range(n):
        shallow = [u for u in range(v) if level[u] < depth - 1]
        if v == 0 or not shallow or rng.random() < 0.25:
            parent[v] = v
            level[v] = 0
        else:
            p = rng.choice(shallow)
            parent[v] = p
            level[v] = level[p] + 1
    colors = {c: {v for v in range(n) if rng.random() < 0.4} for c in color_names}
    return RootedForest(parent, colors)


def colored_structure(rng: random.Random, n: int, p: float, ncolors: int) -> RelationalStructure:
    A = graph_to_structure(gnp_graph(rng, n, p))
    rels = dict(A.relations)
    for i in range(1, ncolors + 1):
        rels[f"C{i}"] = (1, {(v,) for v in range(n) if rng.random() < 0.5})
    return RelationalStructure(A.universe, rels, {})


def all_graphs_upto(n_max: int):
    """All graphs with 1..n_max vertices, one per isomorphism class."""
    seen = set()
    out = []
    for n in range(1, n_max + 1):
        pairs = list(itertools.combinations(range(n), 2))
        for bits in itertools.product((0, 1), repeat=len(pairs)):
            G = Graph(range(n), [e for e, b in zip(pairs, bits) if b])
            code = canonical_code(G)
            if code not in seen:
                seen.add(code)
                out.append(G)
    return out


def path_graph(n: int) -> Graph:
    return Graph(range(n), [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph(range(n), [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph(range(n), itertools.combinations(range(n), 2))


def star_graph(leaves: int) -> Graph:
    return Graph(range(leaves + 1), [(0, i) for i in range(1, leaves + 1)])
