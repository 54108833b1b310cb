"""Graphs, rooted forests, relational structures and basic constructions.

All values are immutable after construction and all derived containers are
kept in deterministic (sorted) order so outputs are reproducible.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable, Mapping

from .errors import InputError

INFINITY = math.inf


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


class Graph:
    """A finite simple undirected graph with integer vertex ids."""

    __slots__ = ("vertices", "edges", "_adj", "_hash")

    def __init__(self, vertices: Iterable[int], edges: Iterable[tuple[int, int]]):
        vs = tuple(sorted(set(vertices)))
        vset = set(vs)
        es = set()
        for u, v in edges:
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            if u not in vset or v not in vset:
                raise InputError(f"edge ({u},{v}) uses unknown vertex")
            es.add(_norm_edge(u, v))
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "edges", frozenset(es))
        adj: dict[int, tuple[int, ...]] = {v: () for v in vs}
        tmp: dict[int, list[int]] = {v: [] for v in vs}
        for u, v in es:
            tmp[u].append(v)
            tmp[v].append(u)
        for v in vs:
            adj[v] = tuple(sorted(tmp[v]))
        object.__setattr__(self, "_adj", adj)
        object.__setattr__(self, "_hash", hash((vs, self.edges)))

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.vertices == other.vertices and self.edges == other.edges

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Graph({len(self.vertices)} vertices, {len(self.edges)} edges)"

    def __contains__(self, v: int) -> bool:
        return v in self._adj

    def __len__(self) -> int:
        return len(self.vertices)

    def neighbors(self, v: int) -> tuple[int, ...]:
        try:
            return self._adj[v]
        except KeyError:
            raise InputError(f"unknown vertex {v}") from None

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def has_edge(self, u: int, v: int) -> bool:
        return _norm_edge(u, v) in self.edges

    def induced(self, keep: Iterable[int]) -> "Graph":
        ks = set(keep)
        unknown = ks - set(self.vertices)
        if unknown:
            raise InputError(f"unknown vertices {sorted(unknown)}")
        return Graph(ks, ((u, v) for u, v in self.edges if u in ks and v in ks))

    def without(self, drop: Iterable[int]) -> "Graph":
        ds = set(drop)
        return self.induced(v for v in self.vertices if v not in ds)

    def components(self) -> list[tuple[int, ...]]:
        seen: set[int] = set()
        out = []
        for v in self.vertices:
            if v in seen:
                continue
            comp = []
            stack = [v]
            seen.add(v)
            while stack:
                u = stack.pop()
                comp.append(u)
                for w in self._adj[u]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            out.append(tuple(sorted(comp)))
        return out


def distances_from(G: Graph, v: int) -> dict[int, int]:
    """BFS distances from v to every reachable vertex."""
    if v not in G:
        raise InputError(f"unknown vertex {v}")
    dist = {v: 0}
    queue = deque([v])
    while queue:
        u = queue.popleft()
        for w in G.neighbors(u):
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def ball(G: Graph, v: int, r: int) -> frozenset[int]:
    """All vertices at distance at most r from v."""
    if r < 0:
        raise InputError("radius must be nonnegative")
    dist = distances_from(G, v)
    return frozenset(u for u, d in dist.items() if d <= r)


def eccentricity(G: Graph, v: int):
    dist = distances_from(G, v)
    if len(dist) < len(G.vertices):
        return INFINITY
    return max(dist.values(), default=0)


def radius(G: Graph):
    """Minimum eccentricity; INFINITY when G is disconnected or empty."""
    if not G.vertices:
        return INFINITY
    return min(eccentricity(G, v) for v in G.vertices)


def isolate(G: Graph, S: Iterable[int]) -> Graph:
    """G*S: remove all edges with an endpoint in S, keep every vertex."""
    ss = set(S)
    unknown = ss - set(G.vertices)
    if unknown:
        raise InputError(f"unknown vertices {sorted(unknown)}")
    return Graph(G.vertices, ((u, v) for u, v in G.edges if u not in ss and v not in ss))


class RootedForest:
    """A rooted forest given by a total parent map (roots map to themselves).

    ``colors`` maps unary-predicate names to node sets, ``flags`` maps
    flag names to booleans.
    """

    __slots__ = ("nodes", "parent", "colors", "flags", "_children", "_hash")

    def __init__(
        self,
        parent: Mapping[int, int],
        colors: Mapping[str, Iterable[int]] | None = None,
        flags: Mapping[str, bool] | None = None,
    ):
        nodes = tuple(sorted(parent))
        nset = set(nodes)
        par = {}
        for v in nodes:
            p = parent[v]
            if p not in nset:
                raise InputError(f"parent of {v} is unknown node {p}")
            par[v] = p
        # acyclicity except root fixpoints
        for v in nodes:
            seen = set()
            u = v
            while par[u] != u:
                if u in seen:
                    raise InputError(f"parent map has a cycle through {v}")
                seen.add(u)
                u = par[u]
        cols = {}
        for name, members in (colors or {}).items():
            ms = frozenset(members)
            unknown = ms - nset
            if unknown:
                raise InputError(f"color {name} uses unknown nodes {sorted(unknown)}")
            cols[name] = ms
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "parent", par)
        object.__setattr__(self, "colors", cols)
        object.__setattr__(self, "flags", dict(flags or {}))
        kids: dict[int, list[int]] = {v: [] for v in nodes}
        for v in nodes:
            if par[v] != v:
                kids[par[v]].append(v)
        object.__setattr__(
            self, "_children", {v: tuple(sorted(ks)) for v, ks in kids.items()}
        )
        object.__setattr__(
            self,
            "_hash",
            hash(
                (
                    nodes,
                    tuple(sorted(par.items())),
                    tuple(sorted((k, v) for k, v in cols.items())),
                    tuple(sorted(self.flags.items())),
                )
            ),
        )

    def __setattr__(self, name, value):
        raise AttributeError("RootedForest is immutable")

    def __eq__(self, other):
        if not isinstance(other, RootedForest):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.parent == other.parent
            and self.colors == other.colors
            and self.flags == other.flags
        )

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, v):
        return v in self.parent

    def roots(self) -> tuple[int, ...]:
        return tuple(v for v in self.nodes if self.parent[v] == v)

    def children(self, v: int) -> tuple[int, ...]:
        try:
            return self._children[v]
        except KeyError:
            raise InputError(f"unknown node {v}") from None

    def level(self, v: int) -> int:
        """Number of parent steps from v to its root."""
        lvl = 0
        while self.parent[v] != v:
            v = self.parent[v]
            lvl += 1
        return lvl

    def depth(self) -> int:
        """Maximum number of vertices on a root-to-leaf path."""
        if not self.nodes:
            return 0
        return 1 + max(self.level(v) for v in self.nodes)

    def ancestor(self, v: int, i: int) -> int:
        """parent^i(v), saturating at the root."""
        for _ in range(i):
            v = self.parent[v]
        return v

    def subtree(self, v: int) -> tuple[int, ...]:
        out = []
        stack = [v]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(self.children(u))
        return tuple(sorted(out))

    def color_of(self, v: int) -> tuple[str, ...]:
        return tuple(sorted(name for name, ms in self.colors.items() if v in ms))

    def tree_edges(self) -> list[tuple[int, int]]:
        return [(v, self.parent[v]) for v in self.nodes if self.parent[v] != v]

    def to_graph(self) -> Graph:
        return Graph(self.nodes, self.tree_edges())

    def with_colors(
        self,
        colors: Mapping[str, Iterable[int]],
        flags: Mapping[str, bool] | None = None,
    ) -> "RootedForest":
        """A copy with extra colors/flags added (existing ones kept)."""
        cols: dict[str, Iterable[int]] = dict(self.colors)
        cols.update(colors)
        fl = dict(self.flags)
        fl.update(flags or {})
        return RootedForest(self.parent, cols, fl)

    def to_structure(self) -> "RelationalStructure":
        rels = {name: (1, frozenset((v,) for v in ms)) for name, ms in self.colors.items()}
        for name, val in self.flags.items():
            rels[name] = (0, frozenset([()]) if val else frozenset())
        return RelationalStructure(self.nodes, rels, {"parent": dict(self.parent)})


class RelationalStructure:
    """A finite relational structure with relations and unary functions.

    Relations have explicit arities; arity 0 is a flag (true iff the empty
    tuple is present), arity 1 a unary predicate.
    """

    __slots__ = ("universe", "relations", "functions", "_hash")

    def __init__(
        self,
        universe: Iterable[int],
        relations: Mapping[str, tuple[int, Iterable[tuple[int, ...]]]] | None = None,
        functions: Mapping[str, Mapping[int, int]] | None = None,
    ):
        uni = tuple(sorted(set(universe)))
        uset = set(uni)
        rels: dict[str, tuple[int, frozenset]] = {}
        for name, (arity, tuples) in (relations or {}).items():
            ts = frozenset(tuple(t) for t in tuples)
            for t in ts:
                if len(t) != arity:
                    raise InputError(f"relation {name}: tuple {t} has wrong arity")
                if any(x not in uset for x in t):
                    raise InputError(f"relation {name}: tuple {t} outside universe")
            rels[name] = (arity, ts)
        funs: dict[str, dict[int, int]] = {}
        for name, fmap in (functions or {}).items():
            fm = dict(fmap)
            if set(fm) != uset:
                raise InputError(f"function {name} is not total on the universe")
            if any(y not in uset for y in fm.values()):
                raise InputError(f"function {name} maps outside the universe")
            funs[name] = fm
        object.__setattr__(self, "universe", uni)
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "functions", funs)
        object.__setattr__(
            self,
            "_hash",
            hash(
                (
                    uni,
                    tuple(sorted(rels.items())),
                    tuple((n, tuple(sorted(f.items()))) for n, f in sorted(funs.items())),
                )
            ),
        )

    def __setattr__(self, name, value):
        raise AttributeError("RelationalStructure is immutable")

    def __eq__(self, other):
        if not isinstance(other, RelationalStructure):
            return NotImplemented
        return (
            self.universe == other.universe
            and self.relations == other.relations
            and self.functions == other.functions
        )

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.universe)

    def arity(self, name: str) -> int:
        try:
            return self.relations[name][0]
        except KeyError:
            raise InputError(f"unknown relation {name}") from None

    def holds(self, name: str, args: tuple[int, ...]) -> bool:
        arity, tuples = self.relations[name]
        if len(args) != arity:
            raise InputError(f"relation {name}: expected {arity} arguments")
        return args in tuples

    def apply(self, fname: str, x: int) -> int:
        try:
            return self.functions[fname][x]
        except KeyError:
            raise InputError(f"unknown function {fname} or element {x}") from None


def gaifman_graph(A: RelationalStructure) -> Graph:
    """Vertices = universe; edges join elements co-occurring in a tuple or
    in a pair (x, f(x)) with x != f(x)."""
    edges = set()
    for _, (arity, tuples) in A.relations.items():
        if arity < 2:
            continue
        for t in tuples:
            for i in range(len(t)):
                for j in range(i + 1, len(t)):
                    if t[i] != t[j]:
                        edges.add(_norm_edge(t[i], t[j]))
    for fmap in A.functions.values():
        for x, y in fmap.items():
            if x != y:
                edges.add(_norm_edge(x, y))
    return Graph(A.universe, edges)


def graph_to_structure(G: Graph) -> RelationalStructure:
    """View a graph as a structure with a symmetric binary relation E."""
    tuples = set()
    for u, v in G.edges:
        tuples.add((u, v))
        tuples.add((v, u))
    return RelationalStructure(G.vertices, {"E": (2, tuples)})


def structure_to_graph(A: RelationalStructure) -> Graph:
    """Inverse of graph_to_structure for structures with a single binary E."""
    if set(A.relations) != {"E"} or A.relations["E"][0] != 2 or A.functions:
        raise InputError("structure is not a plain graph structure")
    return Graph(A.universe, A.relations["E"][1])


def build_tdk(d: int, k: int) -> RootedForest:
    """The rooted tree of depth d in which every non-leaf has exactly k
    children (depth counted in vertices)."""
    if d < 1 or k < 1:
        raise InputError("require d >= 1 and k >= 1")
    parent = {0: 0}
    frontier = [0]
    nxt = 1
    for _ in range(d - 1):
        new_frontier = []
        for v in frontier:
            for _ in range(k):
                parent[nxt] = v
                new_frontier.append(nxt)
                nxt += 1
        frontier = new_frontier
    return RootedForest(parent)


def build_fdk(d: int, k: int) -> RootedForest:
    """k disjoint copies of build_tdk(d, k)."""
    tree = build_tdk(d, k)
    n = len(tree)
    parent = {}
    for copy in range(k):
        off = copy * n
        for v in tree.nodes:
            parent[v + off] = tree.parent[v] + off
    return RootedForest(parent)


class Embedding:
    """A witness that a subdivision of a tree T occurs in a host graph.

    ``principal`` maps T's nodes injectively into the host; ``paths`` maps
    each tree edge (child, parent) to the host path joining the principal
    images, listed from the child's image to the parent's image.
    """

    __slots__ = ("principal", "paths")

    def __init__(
        self,
        principal: Mapping[int, int],
        paths: Mapping[tuple[int, int], tuple[int, ...]],
    ):
        object.__setattr__(self, "principal", dict(principal))
        object.__setattr__(self, "paths", {e: tuple(p) for e, p in paths.items()})

    def __setattr__(self, name, value):
        raise AttributeError("Embedding is immutable")

    def __repr__(self):
        return f"Embedding({len(self.principal)} principal, {len(self.paths)} paths)"


def verify_embedding(G: Graph, T: RootedForest, emb: Embedding, r: int) -> bool:
    """Independent checker: emb witnesses an <=r-subdivision of T in G."""
    prin = emb.principal
    if set(prin) != set(T.nodes):
        return False
    if len(set(prin.values())) != len(prin):
        return False
    if any(v not in G for v in prin.values()):
        return False
    edges = {(v, T.parent[v]) for v in T.nodes if T.parent[v] != v}
    if set(emb.paths) != edges:
        return False
    used_internal: set[int] = set()
    prin_img = set(prin.values())
    for (child, par), path in emb.paths.items():
        if len(path) < 2 or len(path) > r + 2:
            return False
        if path[0] != prin[child] or path[-1] != prin[par]:
            return False
        if len(set(path)) != len(path):
            return False
        for a, b in zip(path, path[1:]):
            if not G.has_edge(a, b):
                return False
        internal = set(path[1:-1])
        if internal & prin_img or internal & used_internal:
            return False
        used_internal |= internal
    return True


def subdivide(
    T: RootedForest, lengths: Mapping[tuple[int, int], int]
) -> tuple[Graph, Embedding]:
    """Replace each tree edge (child, parent) by a path of the given length
    (number of edges, >= 1).  Returns the subdivided graph and the witness
    embedding; subdivision vertices get fresh ids above T's."""
    for e, ln in lengths.items():
        if ln < 1:
            raise InputError(f"length of edge {e} must be >= 1")
    nxt = max(T.nodes, default=-1) + 1
    vertices = list(T.nodes)
    edges = []
    paths = {}
    for v in sorted(T.nodes):
        p = T.parent[v]
        if p == v:
            continue
        ln = lengths.get((v, p), 1)
        path = [v]
        for _ in range(ln - 1):
            vertices.append(nxt)
            path.append(nxt)
            nxt += 1
        path.append(p)
        for a, b in zip(path, path[1:]):
            edges.append((a, b))
        paths[(v, p)] = tuple(path)
    G = Graph(vertices, edges)
    emb = Embedding({v: v for v in T.nodes}, paths)
    return G, emb


def subdivide_uniform(T: RootedForest, length: int) -> tuple[Graph, Embedding]:
    return subdivide(T, {(v, T.parent[v]): length for v in T.nodes if T.parent[v] != v})


def subdivide_per_level(
    T: RootedForest, level_lengths: tuple[int, ...]
) -> tuple[Graph, Embedding]:
    """(r_1, ..., r_j)-subdivision: the edge from a level-i node to its
    parent gets path length level_lengths[i-1]."""
    lengths = {}
    for v in T.nodes:
        p = T.parent[v]
        if p == v:
            continue
        lvl = T.level(v)
        if lvl - 1 >= len(level_lengths):
            raise InputError("level_lengths too short for the tree's depth")
        lengths[(v, p)] = level_lengths[lvl - 1]
    return subdivide(T, lengths)


# ---------------------------------------------------------------------------
# Text formats


def serialize_graph(G: Graph) -> str:
    lines = [f"graph {len(G.vertices)}"]
    lines += [f"e {u} {v}" for u, v in sorted(G.edges)]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("graph "):
        raise InputError("graph file must start with 'graph <n>'")
    try:
        n = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise InputError("bad graph header") from None
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] != "e" or len(parts) != 3:
            raise InputError(f"bad graph line: {ln!r}")
        edges.append((int(parts[1]), int(parts[2])))
    return Graph(range(n), edges)


def serialize_forest(F: RootedForest) -> str:
    lines = [f"forest {len(F.nodes)}"]
    for v in F.nodes:
        if F.parent[v] != v:
            lines.append(f"p {v} {F.parent[v]}")
    for name in sorted(F.colors):
        for v in sorted(F.colors[name]):
            lines.append(f"c {name} {v}")
    for name in sorted(F.flags):
        lines.append(f"f {name} {1 if F.flags[name] else 0}")
    return "\n".join(lines) + "\n"


def parse_forest(text: str) -> RootedForest:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("forest "):
        raise InputError("forest file must start with 'forest <n>'")
    try:
        n = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise InputError("bad forest header") from None
    parent = {v: v for v in range(n)}
    colors: dict[str, set[int]] = {}
    flags: dict[str, bool] = {}
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "p" and len(parts) == 3:
            parent[int(parts[1])] = int(parts[2])
        elif parts[0] == "c" and len(parts) == 3:
            colors.setdefault(parts[1], set()).add(int(parts[2]))
        elif parts[0] == "f" and len(parts) == 3:
            flags[parts[1]] = parts[2] == "1"
        else:
            raise InputError(f"bad forest line: {ln!r}")
    return RootedForest(parent, colors, flags)


def serialize_structure(A: RelationalStructure) -> str:
    lines = [f"structure {len(A.universe)}"]
    for name in sorted(A.relations):
        arity, tuples = A.relations[name]
        lines.append(f"rel {name} {arity}")
        for t in sorted(tuples):
            lines.append(" ".join(str(x) for x in t) if t else "()")
    for name in sorted(A.functions):
        lines.append(f"fun {name}")
        for x in A.universe:
            lines.append(f"{x} {A.functions[name][x]}")
    return "\n".join(lines) + "\n"


def parse_structure(text: str) -> RelationalStructure:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("structure"):
        raise InputError("structure file must start with 'structure <n>'")
    try:
        n = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise InputError("bad structure header") from None
    relations: dict[str, tuple[int, set]] = {}
    functions: dict[str, dict[int, int]] = {}
    mode: tuple[str, str] | None = None
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "rel" and len(parts) == 3:
            relations[parts[1]] = (int(parts[2]), set())
            mode = ("rel", parts[1])
        elif parts[0] == "fun" and len(parts) == 2:
            functions[parts[1]] = {}
            mode = ("fun", parts[1])
        elif mode and mode[0] == "rel":
            if ln == "()":
                relations[mode[1]][1].add(())
            else:
                relations[mode[1]][1].add(tuple(int(x) for x in parts))
        elif mode and mode[0] == "fun":
            if len(parts) != 2:
                raise InputError(f"bad function line: {ln!r}")
            functions[mode[1]][int(parts[0])] = int(parts[1])
        else:
            raise InputError(f"unexpected line: {ln!r}")
    return RelationalStructure(range(n), relations, functions)
