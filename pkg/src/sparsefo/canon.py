"""Canonical forms for small graphs: iterative color refinement with
exhaustive individualization tie-breaking.  Intended for desk-scale state
canonicalization (game memoization, treedepth memoization)."""

from __future__ import annotations

from .structures import Graph


def _refine(adj: dict[int, tuple[int, ...]], colors: dict[int, int]) -> dict[int, int]:
    while True:
        sig = {
            v: (colors[v], tuple(sorted(colors[w] for w in adj[v]))) for v in adj
        }
        ordered = {s: i for i, s in enumerate(sorted(set(sig.values())))}
        new = {v: ordered[sig[v]] for v in adj}
        if new == colors:
            return colors
        colors = new


def _canon_search(adj: dict[int, tuple[int, ...]], colors: dict[int, int]):
    colors = _refine(adj, colors)
    cells: dict[int, list[int]] = {}
    for v, c in colors.items():
        cells.setdefault(c, []).append(v)
    split = None
    for c in sorted(cells):
        if len(cells[c]) > 1:
            split = cells[c]
            break
    if split is None:
        label = {v: colors[v] for v in adj}
        edges = set()
        for v in adj:
            for w in adj[v]:
                a, b = label[v], label[w]
                if a < b:
                    edges.add((a, b))
        return tuple(sorted(edges))
    fresh = len(adj)
    best = None
    for v in sorted(split):
        c2 = dict(colors)
        c2[v] = fresh
        cand = _canon_search(adj, c2)
        if best is None or cand < best:
            best = cand
    return best


def canonical_component(G: Graph, verts: tuple[int, ...]):
    adj = {v: tuple(w for w in G.neighbors(v) if w in set(verts)) for v in verts}
    return (len(verts), _canon_search(adj, {v: 0 for v in verts}))


def canonical_code(G: Graph):
    """Isomorphism-invariant code: sorted multiset of component codes."""
    return tuple(sorted(canonical_component(G, comp) for comp in G.components()))
