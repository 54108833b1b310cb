"""Graph-to-forest encoders for the model-checking lower-bound reductions.

A *tree of depth d over [m]* is, for d = 1, a single node colored by an
element of [m]; for d >= 2, a root whose children carry pairwise
non-isomorphic trees of depth d-1 over [m] (the empty child set is
allowed, so there are exactly tower(d-1, m) such trees).  Graphs are
encoded into colored forests of this shape via per-vertex and per-edge
gadget trees, adjacency is recovered by a subtree-isomorphism formula,
and the colors can in turn be traded for pendant-leaf counts to reach
plain (uncolored, unrooted) forests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import BudgetExceededError, InputError
from .logic import (
    And,
    App,
    Atom,
    DistAtom,
    Eq,
    Exists,
    Forall,
    Formula,
    FreshNames,
    Not,
    Or,
    Var,
    all_var_names,
    fand,
    fnot,
    f_or,
)
from .structures import Graph, RootedForest

DEFAULT_CAP = 10**6


def tower(a: int, b: int) -> int:
    """tower(0, b) = b and tower(a, b) = 2^tower(a-1, b)."""
    if a < 0 or b < 0:
        raise InputError("tower arguments must be nonnegative")
    out = b
    for _ in range(a):
        out = 2**out
    return out


# ---------------------------------------------------------------------------
# Trees over [m]


def _code_key(code):
    if code[0] == "leaf":
        return (0, code[1])
    return (1, tuple(_code_key(c) for c in code[1]))


@dataclass(frozen=True)
class TreeOverM:
    """A tree of depth d over [m], held as a canonical code.

    Codes are ("leaf", i) for a depth-1 tree colored i, and
    ("node", sorted child codes) for deeper trees; sibling codes are
    pairwise distinct, which is exactly the non-isomorphism invariant.
    """

    depth: int
    m: int
    code: tuple

    def size(self) -> int:
        def count(code):
            if code[0] == "leaf":
                return 1
            return 1 + sum(count(c) for c in code[1])

        return count(self.code)

    def materialize(self, parent: dict, colors: dict, start: int) -> tuple[int, int]:
        """Write this tree into a parent map and color lists using node
        ids from ``start`` on; returns (root id, next free id)."""

        def build(code, nxt):
            v = nxt
            nxt += 1
            if code[0] == "leaf":
                colors.setdefault(f"C{code[1]}", []).append(v)
            else:
                for kid in code[1]:
                    w, nxt = build(kid, nxt)
                    parent[w] = v
            return v, nxt

        root, nxt = build(self.code, start)
        parent.setdefault(root, root)
        return root, nxt


def enumerate_trees_over_m(d: int, m: int, cap: int = DEFAULT_CAP) -> list[TreeOverM]:
    """All trees of depth d over [m] in canonical (lexicographic) order;
    there are exactly tower(d-1, m) of them."""
    if d < 1 or m < 1:
        raise InputError("tree depth and color count must be positive")
    if tower(d - 1, m) > cap:
        raise BudgetExceededError(
            f"tower({d - 1},{m}) = {tower(d - 1, m)} trees exceed cap {cap}"
        )
    if d == 1:
        return [TreeOverM(1, m, ("leaf", i)) for i in range(1, m + 1)]
    subs = enumerate_trees_over_m(d - 1, m, cap)
    out = []
    for picks in itertools.product((False, True), repeat=len(subs)):
        kids = tuple(t.code for t, p in zip(subs, picks) if p)
        out.append(TreeOverM(d, m, ("node", tuple(sorted(kids, key=_code_key)))))
    out.sort(key=lambda t: _code_key(t.code))
    return out


# ---------------------------------------------------------------------------
# Subtree isomorphism formula


def _child(u: Formula, v) -> Formula:
    """v is a proper child of u in the rooted-forest signature."""
    return fand(Eq(App("parent", 1, v), u), fnot(Eq(v, u)))


def _leaf(t, fresh_name: str) -> Formula:
    c = Var(fresh_name)
    return fnot(Exists((fresh_name,), _child(t, c)))


def xi_formula(d: int, m: int) -> Formula:
    """A formula xi(x, y) that holds in a forest of depth d over [m]
    exactly when the subtrees rooted at x and y are isomorphic.

    Naive doubling recursion: at each level the forward and backward
    simulation each embed one copy of the next level, so the size is
    O(4^d * m) rather than the optimal O(d * m)."""
    if d < 1 or m < 1:
        raise InputError("xi_formula needs d >= 1 and m >= 1")

    def same_colors(xv, yv):
        parts = []
        for i in range(1, m + 1):
            cx, cy = Atom(f"C{i}", (xv,)), Atom(f"C{i}", (yv,))
            parts.append(f_or(fand(cx, cy), fand(fnot(cx), fnot(cy))))
        return fand(*parts)

    def iso(k, xv, yv):
        leaves = fand(_leaf(xv, f"u{k}l"), _leaf(yv, f"w{k}l"), same_colors(xv, yv))
        if k == 1:
            return leaves
        xn, yn = f"u{k}", f"w{k}"
        forward = Forall(
            (xn,),
            f_or(
                fnot(_child(xv, Var(xn))),
                Exists((yn,), fand(_child(yv, Var(yn)), iso(k - 1, Var(xn), Var(yn)))),
            ),
        )
        backward = Forall(
            (yn,),
            f_or(
                fnot(_child(yv, Var(yn))),
                Exists((xn,), fand(_child(xv, Var(xn)), iso(k - 1, Var(xn), Var(yn)))),
            ),
        )
        internal = fand(
            fnot(_leaf(xv, f"u{k}l")),
            fnot(_leaf(yv, f"w{k}l")),
            same_colors(xv, yv),
            forward,
            backward,
        )
        return f_or(leaves, internal)

    return iso(d, Var("x"), Var("y"))


# ---------------------------------------------------------------------------
# Graph -> colored forest


def _check_graph_sentence(phi: Formula) -> None:
    if isinstance(phi, Atom):
        if phi.rel != "E" or len(phi.args) != 2 or not all(
            isinstance(a, Var) for a in phi.args
        ):
            raise InputError("graph sentences may only use E(x, y) atoms")
        return
    if isinstance(phi, Eq):
        if not (isinstance(phi.left, Var) and isinstance(phi.right, Var)):
            raise InputError("graph sentences may not use function terms")
        return
    if isinstance(phi, Not):
        _check_graph_sentence(phi.sub)
        return
    if isinstance(phi, (And, Or)):
        for a in phi.args:
            _check_graph_sentence(a)
        return
    if isinstance(phi, (Exists, Forall)):
        _check_graph_sentence(phi.body)
        return
    raise InputError(f"unsupported construct in graph sentence: {type(phi).__name__}")


def encode_graph(
    G: Graph, phi: Formula, d: int, cap: int = DEFAULT_CAP
) -> tuple[RootedForest, Formula, int]:
    """Encode an n-vertex graph as a colored forest of depth d + 2 over
    [m], where m is least with n <= tower(d, m), together with a sentence
    psi such that G satisfies phi exactly when the forest satisfies psi.

    Each vertex v becomes a gadget: a fresh root above a tree T_v of
    depth d + 1 over [m], the T_v pairwise non-isomorphic.  Each edge uv
    becomes a fresh root above copies of T_u and T_v.  psi relativizes
    quantifiers to the one-child gadget roots and replaces E(x, y) by a
    search for a two-child gadget whose subtrees match T_x and T_y up to
    isomorphism."""
    if d < 1:
        raise InputError("encode_graph needs d >= 1")
    if not G.vertices:
        raise InputError("encode_graph needs a nonempty graph")
    _check_graph_sentence(phi)
    n = len(G.vertices)
    m = 1
    while tower(d, m) < n:
        m += 1
    trees = enumerate_trees_over_m(d + 1, m, cap)
    assigned = {v: trees[i] for i, v in enumerate(sorted(G.vertices))}

    parent: dict[int, int] = {}
    colors: dict[str, list[int]] = {f"C{i}": [] for i in range(1, m + 1)}
    nxt = 0

    def add_gadget(members):
        nonlocal nxt
        r = nxt
        nxt += 1
        parent[r] = r
        for t in members:
            w, nxt = t.materialize(parent, colors, nxt)
            parent[w] = r
        return r

    for v in sorted(G.vertices):
        add_gadget([assigned[v]])
    for u, v in sorted(G.edges):
        add_gadget([assigned[u], assigned[v]])
    F = RootedForest(parent, colors)

    iso = xi_formula(d + 1, m)
    fresh = FreshNames(all_var_names(phi) | all_var_names(iso), prefix="g")

    def vroot(x):
        c, c2 = fresh.new(), fresh.new()
        one_child = Exists(
            (c,),
            fand(
                _child(x, Var(c)),
                Forall((c2,), f_or(fnot(_child(x, Var(c2))), Eq(Var(c2), Var(c)))),
            ),
        )
        return fand(Eq(App("parent", 1, x), x), one_child)

    def subst_xy(xv, yv):
        def walk(f):
            if isinstance(f, Atom):
                return Atom(f.rel, tuple(walk_t(t) for t in f.args))
            if isinstance(f, Eq):
                return Eq(walk_t(f.left), walk_t(f.right))
            if isinstance(f, Not):
                return Not(walk(f.sub))
            if isinstance(f, And):
                return And(tuple(walk(a) for a in f.args))
            if isinstance(f, Or):
                return Or(tuple(walk(a) for a in f.args))
            if isinstance(f, Exists):
                return Exists(f.vars, walk(f.body))
            return Forall(f.vars, walk(f.body))

        def walk_t(t):
            if isinstance(t, Var):
                if t.name == "x":
                    return xv
                if t.name == "y":
                    return yv
                return t
            return App(t.func, t.power, walk_t(t.arg))

        return walk(iso)

    def edge_formula(xv, yv):
        r, a, b, xc, yc = (fresh.new() for _ in range(5))
        return Exists(
            (r, a, b),
            fand(
                Eq(App("parent", 1, Var(r)), Var(r)),
                _child(Var(r), Var(a)),
                _child(Var(r), Var(b)),
                fnot(Eq(Var(a), Var(b))),
                Exists((xc,), fand(_child(xv, Var(xc)), subst_xy(Var(xc), Var(a)))),
                Exists((yc,), fand(_child(yv, Var(yc)), subst_xy(Var(yc), Var(b)))),
            ),
        )

    def rec(f):
        if isinstance(f, Atom):
            return edge_formula(f.args[0], f.args[1])
        if isinstance(f, Eq):
            return f
        if isinstance(f, Not):
            return fnot(rec(f.sub))
        if isinstance(f, And):
            return fand(*(rec(a) for a in f.args))
        if isinstance(f, Or):
            return f_or(*(rec(a) for a in f.args))
        if isinstance(f, Exists):
            guards = [vroot(Var(v)) for v in f.vars]
            return Exists(f.vars, fand(*guards, rec(f.body)))
        guards = [vroot(Var(v)) for v in f.vars]
        return Forall(f.vars, f_or(*(fnot(g) for g in guards), rec(f.body)))

    return F, rec(phi), m


# ---------------------------------------------------------------------------
# Colored rooted forest -> plain forest


def uncolor_forest(F: RootedForest, phi: Formula) -> tuple[Graph, Formula]:
    """Trade colors and rootedness for pendant-leaf counts.

    Every node gets a pendant group whose size identifies its class:
    color i maps to i + 2 pendants, roots to m + 3, all remaining nodes
    to m + 4.  phi is rewritten over the plain edge relation: original
    nodes are those of degree >= 3, classes are read off pendant counts,
    and the parent function is recovered from exact distance-to-root
    levels."""
    names = sorted(F.colors)
    m = len(names)
    color_index = {name: i + 1 for i, name in enumerate(names)}
    node_color: dict[int, int] = {}
    for name, members in F.colors.items():
        for v in members:
            if v in node_color:
                raise InputError(f"node {v} carries more than one color")
            node_color[v] = color_index[name]

    root_cls, plain_cls = m + 1, m + 2
    rootset = set(F.roots())

    def cls_of(v):
        if v in node_color:
            return node_color[v]
        return root_cls if v in rootset else plain_cls

    nxt = max(F.nodes, default=-1) + 1
    edges = [(v, F.parent[v]) for v in F.nodes if F.parent[v] != v]
    verts = list(F.nodes)
    for v in F.nodes:
        for _ in range(cls_of(v) + 2):
            edges.append((v, nxt))
            verts.append(nxt)
            nxt += 1
    Fplain = Graph(verts, edges)

    depth = F.depth()
    fresh = FreshNames(all_var_names(phi), prefix="h")

    def let(value, name, body):
        """Bind a shared subformula's canonical variable to a term."""
        return Exists((name,), fand(Eq(Var(name), value), body))

    # one shared pendant (degree-1) test, entered via `let` so verdicts are
    # memoized per node rather than per use site
    pvar = "_p"
    a, b = fresh.new(), fresh.new()
    pend_test = fnot(
        Exists(
            (a, b),
            fand(
                fnot(Eq(Var(a), Var(b))),
                Atom("E", (Var(pvar), Var(a))),
                Atom("E", (Var(pvar), Var(b))),
            ),
        )
    )

    def pend(t):
        return let(t, pvar, pend_test)

    def at_least(t, k):
        """t has >= k pendant neighbors; nested so each witness is gated
        by adjacency and distinctness before the search descends."""

        def go(done):
            if len(done) == k:
                return fand()
            p = fresh.new()
            lits = [Atom("E", (t, Var(p)))]
            lits += [fnot(Eq(Var(p), Var(q))) for q in done]
            lits += [pend(Var(p)), go(done + [p])]
            return Exists((p,), fand(*lits))

        return go([])

    # shared class/level tests over a canonical variable, entered via `let`
    # so the oracle's per-subformula memo is effective
    cvar = "_c"
    cls_test = {
        i: fand(at_least(Var(cvar), i + 2), fnot(at_least(Var(cvar), i + 3)))
        for i in range(1, m + 3)
    }

    def is_cls(t, i):
        return let(t, cvar, cls_test[i])

    orig_test = at_least(Var(cvar), 3)

    def orig(t):
        return let(t, cvar, orig_test)

    lvar = "_l"
    step = fresh.new()
    reach = [is_cls(Var(lvar), root_cls)]
    for _ in range(depth):
        reach.append(
            f_or(
                reach[-1],
                Exists(
                    (step,),
                    fand(
                        Atom("E", (Var(lvar), Var(step))),
                        let(Var(step), cvar, at_least(Var(cvar), 3)),
                        let(Var(step), lvar, reach[-1]),
                    ),
                ),
            )
        )
    lvl = [reach[0]] + [
        fand(reach[k], fnot(reach[k - 1])) for k in range(1, len(reach))
    ]

    def at_level(t, k):
        return let(t, lvar, lvl[k])

    def parent_edge(child, par):
        opts = [
            fand(at_level(child, k), at_level(par, k - 1))
            for k in range(1, len(lvl))
        ]
        return fand(Atom("E", (child, par)), f_or(*opts))

    def pstep(child, par):
        return f_or(
            parent_edge(child, par), fand(is_cls(child, root_cls), Eq(child, par))
        )

    def ancestor_eq(term, target):
        """parent^j(base) = target, with the root-saturating convention."""
        if isinstance(term, Var):
            return Eq(term, target)
        if term.func != "parent" or not isinstance(term.arg, Var):
            raise InputError("only parent powers of variables are supported")
        inner = term.arg
        chain = [fresh.new() for _ in range(term.power)]
        hops = [Var(c) for c in chain]
        lits: list[Formula] = []
        seq = [inner] + hops
        for a, b in zip(seq, seq[1:]):
            lits.append(pstep(a, b))
        lits.append(Eq(hops[-1] if hops else inner, target))
        return Exists(tuple(chain), fand(*lits)) if chain else fand(*lits)

    def lower_term_pair(t1, t2):
        w = fresh.new()
        if isinstance(t1, Var) and isinstance(t2, Var):
            return Eq(t1, t2)
        return Exists((w,), fand(ancestor_eq(t1, Var(w)), ancestor_eq(t2, Var(w))))

    flags = dict(F.flags)

    def rec(f):
        if isinstance(f, Atom):
            if len(f.args) == 0:
                if f.rel not in flags:
                    raise InputError(f"unknown flag {f.rel}")
                return fand() if flags[f.rel] else f_or()
            if f.rel not in color_index:
                raise InputError(f"unknown color {f.rel}")
            (t,) = f.args
            i = color_index[f.rel]
            if isinstance(t, Var):
                return is_cls(t, i)
            w = fresh.new()
            return Exists((w,), fand(ancestor_eq(t, Var(w)), is_cls(Var(w), i)))
        if isinstance(f, Eq):
            return lower_term_pair(f.left, f.right)
        if isinstance(f, DistAtom):
            raise InputError("distance atoms are not supported by uncolor_forest")
        if isinstance(f, Not):
            return fnot(rec(f.sub))
        if isinstance(f, And):
            return fand(*(rec(a) for a in f.args))
        if isinstance(f, Or):
            return f_or(*(rec(a) for a in f.args))
        if isinstance(f, Exists):
            guards = [orig(Var(v)) for v in f.vars]
            return Exists(f.vars, fand(*guards, rec(f.body)))
        if isinstance(f, Forall):
            guards = [orig(Var(v)) for v in f.vars]
            return Forall(f.vars, f_or(*(fnot(g) for g in guards), rec(f.body)))
        raise InputError(f"unsupported construct: {type(f).__name__}")

    return Fplain, rec(phi)


# ---------------------------------------------------------------------------
# Full reduction pipeline


def _subdivide_graph(G: Graph, r: int) -> Graph:
    """Replace every edge by a path with r internal vertices."""
    nxt = max(G.vertices, default=-1) + 1
    verts = list(G.vertices)
    edges = []
    for u, v in sorted(G.edges):
        prev = u
        for _ in range(r):
            verts.append(nxt)
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
        edges.append((prev, v))
    return Graph(verts, edges)


def _rewrite_subdivided(phi: Formula, r: int, fresh: FreshNames) -> Formula:
    """Relativize to principal (degree != 2) vertices and interpret edges
    as paths of length <= r + 1 whose internal vertices have degree 2.

    The degree test and the path test are single shared subformulas over
    canonical variables, entered through equality bindings, so that the
    oracle's evaluation memo caches one verdict per node or node pair."""

    def let(value, name, body):
        return Exists((name,), fand(Eq(Var(name), value), body))

    dvar = "_d"
    a, b, c = fresh.new(), fresh.new(), fresh.new()
    deg2_test = Exists(
        (a, b),
        fand(
            fnot(Eq(Var(a), Var(b))),
            Atom("E", (Var(dvar), Var(a))),
            Atom("E", (Var(dvar), Var(b))),
            Forall(
                (c,),
                f_or(
                    fnot(Atom("E", (Var(dvar), Var(c)))),
                    Eq(Var(c), Var(a)),
                    Eq(Var(c), Var(b)),
                ),
            ),
        ),
    )

    def deg2(t):
        return let(t, dvar, deg2_test)

    def principal(t):
        return fnot(deg2(t))

    e1, e2 = "_e1", "_e2"
    opts = [Atom("E", (Var(e1), Var(e2)))]
    for ell in range(2, r + 2):
        ws = [fresh.new() for _ in range(ell - 1)]
        hops = [Var(e1)] + [Var(w) for w in ws] + [Var(e2)]
        lits: list[Formula] = [fnot(Eq(Var(e1), Var(e2)))]
        lits += [Atom("E", (s, t)) for s, t in zip(hops, hops[1:])]
        lits += [deg2(Var(w)) for w in ws]
        lits += [fnot(Eq(Var(s), Var(t))) for s, t in itertools.combinations(ws, 2)]
        opts.append(Exists(tuple(ws), fand(*lits)))
    path_test = f_or(*opts)

    def path_formula(xv, yv):
        return let(xv, e1, let(yv, e2, path_test))

    # the input formula is a DAG with heavily shared subformulas; rewriting
    # is memoized by object identity so the sharing (and with it the
    # evaluator's memo effectiveness) survives the translation
    memo: dict[int, Formula] = {}

    def rec(f):
        hit = memo.get(id(f))
        if hit is not None:
            return hit
        out = _rec(f)
        memo[id(f)] = out
        return out

    def _rec(f):
        if isinstance(f, Atom):
            return path_formula(f.args[0], f.args[1])
        if isinstance(f, Eq):
            return f
        if isinstance(f, Not):
            return fnot(rec(f.sub))
        if isinstance(f, And):
            return fand(*(rec(a) for a in f.args))
        if isinstance(f, Or):
            return f_or(*(rec(a) for a in f.args))
        if isinstance(f, Exists):
            guards = [principal(Var(v)) for v in f.vars]
            return Exists(f.vars, fand(*guards, rec(f.body)))
        guards = [principal(Var(v)) for v in f.vars]
        return Forall(f.vars, f_or(*(fnot(g) for g in guards), rec(f.body)))

    return rec(phi)


def assemble_reduction(
    G: Graph, phi: Formula, d: int, r: int | None = None, cap: int = DEFAULT_CAP
) -> tuple[Graph, Formula]:
    """End-to-end reduction: encode the graph into a colored forest,
    uncolor it, and optionally subdivide every edge r times, rewriting
    the sentence at each stage so that the verdict is preserved."""
    F, psi, _ = encode_graph(G, phi, d, cap)
    Fplain, psi1 = uncolor_forest(F, psi)
    if r is None:
        return Fplain, psi1
    if r < 1:
        raise InputError("subdivision count must be positive")
    F2 = _subdivide_graph(Fplain, r)
    fresh = FreshNames(all_var_names(psi1), prefix="s")
    return F2, _rewrite_subdivided(psi1, r, fresh)
