"""Shallow topological minor detection and related extractions: rooted
subdivision search, subdivision root sets, the spanning-tree reachability
argument, level-monochromatic subtree extraction, canonical subdivisions,
min-degree peeling and greedy tree embedding.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Mapping

from .errors import Budget, BudgetExceededError, InputError, PreconditionError
from .structures import (
    Embedding,
    Graph,
    RootedForest,
    build_tdk,
    distances_from,
    eccentricity,
    verify_embedding,
)


def _tree_order(T: RootedForest) -> list[int]:
    """Nodes in BFS order from the root(s), parents before children."""
    order = []
    queue = deque(T.roots())
    while queue:
        v = queue.popleft()
        order.append(v)
        queue.extend(T.children(v))
    return order


def find_subdivision(
    G: Graph,
    T: RootedForest,
    r: int,
    root_at: int | None = None,
    budget: Budget | None = None,
) -> Embedding | None:
    """Search for an <=r-subdivision of the tree T in G by backtracking
    over principal-vertex placements and connecting arms.

    Returns a verified Embedding, or None when the exhaustive search ends
    empty.  Budget exhaustion raises (a distinct outcome from None).
    """
    if len(T.roots()) != 1:
        raise InputError("find_subdivision expects a single tree")
    budget = budget or Budget()
    order = _tree_order(T)
    principal: dict[int, int] = {}
    paths: dict[tuple[int, int], tuple[int, ...]] = {}
    used: set[int] = set()

    def arm_choices(anchor: int) -> Iterable[tuple[int, tuple[int, ...]]]:
        """All simple paths from anchor of length 1..r+1 whose interior and
        endpoint avoid used vertices; yields (endpoint, path)."""
        stack: list[tuple[int, ...]] = [(anchor,)]
        while stack:
            path = stack.pop()
            last = path[-1]
            for w in G.neighbors(last):
                budget.spend()
                if w in used or w in path:
                    continue
                new = path + (w,)
                yield w, new
                if len(new) <= r + 1:
                    stack.append(new)

    def place(idx: int) -> bool:
        budget.spend()
        if idx == len(order):
            return True
        v = order[idx]
        if idx == 0:
            candidates = [root_at] if root_at is not None else list(G.vertices)
            for host in candidates:
                if host not in G:
                    raise InputError(f"unknown vertex {host}")
                principal[v] = host
                used.add(host)
                if place(idx + 1):
                    return True
                used.discard(host)
                del principal[v]
            return False
        p = T.parent[v]
        anchor = principal[p]
        for endpoint, path in arm_choices(anchor):
            principal[v] = endpoint
            interior = path[1:-1]
            used.add(endpoint)
            used.update(interior)
            paths[(v, p)] = tuple(reversed(path))
            if place(idx + 1):
                return True
            del paths[(v, p)]
            used.discard(endpoint)
            used.difference_update(interior)
            del principal[v]
        return False

    if place(0):
        emb = Embedding(dict(principal), dict(paths))
        assert verify_embedding(G, T, emb, r), "internal: invalid embedding produced"
        return emb
    return None


def subdivision_roots(
    G: Graph, d: int, k: int, r: int, budget: Budget | None = None
) -> frozenset[int]:
    """S^d_{k,r}(G): vertices that root an <=r-subdivision of T^d_k."""
    T = build_tdk(d, k)
    budget = budget or Budget()
    return frozenset(
        v for v in G.vertices if find_subdivision(G, T, r, root_at=v, budget=budget)
    )


def _bfs_tree(G: Graph, root: int) -> dict[int, int]:
    """Parent map of a BFS spanning tree (root maps to itself)."""
    parent = {root: root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in G.neighbors(u):
            if w not in parent:
                parent[w] = u
                queue.append(w)
    return parent


def many_reachable_center(
    G: Graph, S: Iterable[int], t: int, r: int
) -> tuple[int, tuple[tuple[int, ...], ...]] | None:
    """A vertex u with t internally disjoint paths of length <= r to t
    distinct members of S, found via a BFS spanning tree of vertex-depth
    <= r+1 and subtree counting.  Guaranteed to exist when |S| >= t^r + 1.
    """
    if r < 1:
        raise InputError("r must be positive")
    sset = set(S)
    if not sset <= set(G.vertices):
        raise InputError("S contains unknown vertices")
    centers = [v for v in G.vertices if eccentricity(G, v) <= r]
    if not centers:
        raise PreconditionError("graph radius exceeds r")
    root = centers[0]
    parent = _bfs_tree(G, root)
    tree = RootedForest(parent)
    # nodes bottom-up so we find the deepest witness first
    order = sorted(tree.nodes, key=lambda v: -tree.level(v))
    for u in order:
        hits: list[tuple[int, ...]] = []
        for c in tree.children(u):
            target = next(
                (s for s in sorted(tree.subtree(c)) if s in sset and s != u), None
            )
            if target is None:
                continue
            # tree path from u down to target
            chain = [target]
            while chain[-1] != u:
                chain.append(tree.parent[chain[-1]])
            hits.append(tuple(reversed(chain)))
        if len(hits) >= t:
            paths = tuple(hits[:t])
            seen: set[int] = set()
            for p in paths:
                assert len(p) - 1 <= r
                assert not (set(p[1:]) & seen)
                seen |= set(p[1:])
            return (u, paths)
    return None


def monochromatic_level_subtree(
    T: RootedForest, coloring: Mapping[int, int], k: int
) -> tuple[RootedForest, tuple[int, ...]]:
    """From a tree whose non-leaves branch at least k*l^(d-1) ways (l the
    number of colors), extract a subtree isomorphic to T^d_k in which all
    nodes of each level share one color.  Bottom-up vector grouping.

    Returns the subtree (as a forest on the original node ids) and the
    tuple of level colors below the root.
    """
    roots = T.roots()
    if len(roots) != 1:
        raise InputError("expected a single tree")

    def extract(v: int) -> tuple[set[int], tuple[int, ...]]:
        kids = T.children(v)
        if not kids:
            return {v}, ()
        groups: dict[tuple[int, ...], list[tuple[int, set[int]]]] = {}
        for c in kids:
            nodes_c, vec_c = extract(c)
            key = (coloring[c],) + vec_c
            groups.setdefault(key, []).append((c, nodes_c))
        for key in sorted(groups):
            members = groups[key]
            if len(members) >= k:
                chosen = sorted(members)[:k]
                nodes = {v}
                for _, ns in chosen:
                    nodes |= ns
                return nodes, key
        raise PreconditionError(
            f"no color vector repeated {k} times among children of {v}"
        )

    nodes, vec = extract(roots[0])
    sub = RootedForest({v: (T.parent[v] if T.parent[v] in nodes else v) for v in nodes})
    return sub, vec


def verify_level_monochromatic(
    sub: RootedForest, coloring: Mapping[int, int], k: int, d: int
) -> bool:
    """Check branching exactly k, depth d, and per-level color constancy
    (levels below the root)."""
    if sub.depth() != d:
        return False
    by_level: dict[int, set[int]] = {}
    for v in sub.nodes:
        lvl = sub.level(v)
        by_level.setdefault(lvl, set()).add(coloring[v])
        kids = sub.children(v)
        if lvl < d - 1 and len(kids) != k:
            return False
        if lvl == d - 1 and kids:
            return False
    return all(len(cols) == 1 for lvl, cols in by_level.items() if lvl >= 1)


def canonical_subdivision_extract(
    T: RootedForest, lengths: Mapping[tuple[int, int], int], k: int, r: int
) -> tuple[tuple[int, ...], RootedForest]:
    """Given the principal tree T (branching >= k(r+1)^(d-1)) of an
    <=r-subdivision with per-edge path lengths in 1..r+1, extract a subtree
    isomorphic to T^d_k whose edge lengths depend only on the level.

    Returns the level length profile (r_1, ..., r_{d-1}) and the subtree.
    """
    coloring = {}
    for v in T.nodes:
        p = T.parent[v]
        if p == v:
            coloring[v] = 1
        else:
            ln = lengths.get((v, p), 1)
            if not 1 <= ln <= r + 1:
                raise InputError(f"edge ({v},{p}) has length {ln} outside 1..{r + 1}")
            coloring[v] = ln
    sub, vec = monochromatic_level_subtree(T, coloring, k)
    return vec, sub


def peel_min_degree(G: Graph, k: int) -> Graph | None:
    """Iteratively delete vertices of degree < k/2; the nonempty core has
    minimum degree >= k/2.  Returns None when everything peels away."""
    H = G
    while True:
        drop = [v for v in H.vertices if 2 * H.degree(v) < k]
        if not drop:
            break
        H = H.without(drop)
    return H if H.vertices else None


def embed_tree_min_degree(G: Graph, T: RootedForest) -> Embedding:
    """Greedy leaf-by-leaf embedding of the tree T into a graph of minimum
    degree >= |T|; ties broken by smallest vertex id."""
    if len(T.roots()) != 1:
        raise InputError("expected a single tree")
    if not G.vertices:
        raise PreconditionError("empty host graph")
    mindeg = min(G.degree(v) for v in G.vertices)
    if mindeg < len(T) - 1:
        raise PreconditionError(
            f"minimum degree {mindeg} < |T|-1 = {len(T) - 1}"
        )
    principal: dict[int, int] = {}
    used: set[int] = set()
    paths = {}
    for v in _tree_order(T):
        if T.parent[v] == v:
            host = min(G.vertices)
        else:
            anchor = principal[T.parent[v]]
            host = min(w for w in G.neighbors(anchor) if w not in used)
            paths[(v, T.parent[v])] = (host, anchor)
        principal[v] = host
        used.add(host)
    emb = Embedding(principal, paths)
    assert verify_embedding(G, T, emb, 0)
    return emb


def depth_profile(
    G: Graph, r: int, k: int, budget: Budget | None = None, cap: int = 8
) -> int:
    """Largest d <= cap such that T^d_k occurs as an <=r-subdivision in G."""
    budget = budget or Budget()
    achieved = 0
    for d in range(1, cap + 1):
        try:
            emb = find_subdivision(G, build_tdk(d, k), r, budget=budget)
        except BudgetExceededError:
            raise BudgetExceededError(
                f"budget exhausted; at least {achieved} established"
            ) from None
        if emb is None:
            return achieved
        achieved = d
    return achieved
