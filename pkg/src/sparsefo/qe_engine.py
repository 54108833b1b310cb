"""Quantifier elimination on sparse structures and the two model-checking
drivers built on it.

The pipeline lifts the bounded-depth-forest elimination step by step:
structures of small treedepth are encoded onto a DFS elimination forest
(``td_qe``), general structures are split by a low-treedepth coloring into
color-range substructures of small treedepth (``existential_qe_be``), and
batched formulas are handled by structural recursion (``full_qe``).  The
alternative driver skips elimination entirely and recurses through the
quantifiers using selectors: small vertex sets containing a representative
of every equivalence class up to the remaining quantifier rank.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import oracle
from .errors import Budget, InputError, PreconditionError
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
    Signature,
    Var,
    all_var_names,
    expand_dist,
    fand,
    f_or,
    fnot,
    free_vars,
    nnf,
    quantifier_rank,
    structure_signature,
)
from .structures import (
    Graph,
    RelationalStructure,
    RootedForest,
    gaifman_graph,
)
from .forest_qe import forest_qe


# ---------------------------------------------------------------------------
# Results and structure utilities


@dataclass
class QeResult:
    """A quantifier-free formula together with the recolored structure on
    which it defines the same tuple set as the input formula did on the
    input structure."""

    signature: Signature
    formula: Formula
    structure: RelationalStructure

    def __iter__(self):
        return iter((self.signature, self.formula, self.structure))


def superimpose(*structures: RelationalStructure) -> RelationalStructure:
    """Union of structures over the same universe.  Shared relation or
    function names must agree exactly."""
    if not structures:
        raise InputError("nothing to superimpose")
    uni = structures[0].universe
    rels: dict = {}
    funs: dict = {}
    for A in structures:
        if A.universe != uni:
            raise InputError("superimposed structures must share a universe")
        for name, val in A.relations.items():
            if name in rels and rels[name] != val:
                raise InputError(f"relation {name} clashes in superimposition")
            rels[name] = val
        for name, fmap in A.functions.items():
            if name in funs and funs[name] != fmap:
                raise InputError(f"function {name} clashes in superimposition")
            funs[name] = fmap
    return RelationalStructure(uni, rels, funs)


def rename_symbols(f: Formula, rel_map, fun_map) -> Formula:
    """Rename relation and function symbols throughout a formula."""

    def rterm(t):
        if isinstance(t, App):
            return App(fun_map.get(t.func, t.func), t.power, rterm(t.arg))
        return t

    def rec(g: Formula) -> Formula:
        if isinstance(g, Atom):
            return Atom(rel_map.get(g.rel, g.rel), tuple(rterm(t) for t in g.args))
        if isinstance(g, Eq):
            return Eq(rterm(g.left), rterm(g.right))
        if isinstance(g, DistAtom):
            return DistAtom(rterm(g.left), rterm(g.right), g.bound)
        if isinstance(g, Not):
            return Not(rec(g.sub))
        if isinstance(g, And):
            return And(tuple(rec(a) for a in g.args))
        if isinstance(g, Or):
            return Or(tuple(rec(a) for a in g.args))
        if isinstance(g, Exists):
            return Exists(g.vars, rec(g.body))
        if isinstance(g, Forall):
            return Forall(g.vars, rec(g.body))
        raise InputError(f"unsupported formula node {g!r}")

    return rec(f)


def _mangle_structure(A: RelationalStructure, prefix: str, universe=None):
    """Rename all symbols with a prefix and optionally extend the universe
    (relations unchanged, functions extended as the identity)."""
    uni = A.universe if universe is None else tuple(sorted(universe))
    rels = {prefix + n: v for n, v in A.relations.items()}
    funs = {}
    for n, fmap in A.functions.items():
        fm = dict(fmap)
        for x in uni:
            fm.setdefault(x, x)
        funs[prefix + n] = fm
    rel_map = {n: prefix + n for n in A.relations}
    fun_map = {n: prefix + n for n in A.functions}
    return RelationalStructure(uni, rels, funs), rel_map, fun_map


def unary_signature_only(sig: Signature) -> bool:
    return all(a <= 1 for _n, a in sig.relations)


def gaifman_contained(A: RelationalStructure, B: RelationalStructure) -> bool:
    """Is the Gaifman graph of A a subgraph of the Gaifman graph of B?"""
    GA, GB = gaifman_graph(A), gaifman_graph(B)
    return set(GA.vertices) <= set(GB.vertices) and set(GA.edges) <= set(GB.edges)


# ---------------------------------------------------------------------------
# DFS elimination forests and treedepth


def dfs_elimination_forest(G: Graph) -> RootedForest:
    """A depth-first search forest of G.  Every edge of G connects an
    ancestor-descendant pair, so the forest eliminates G."""
    parent: dict[int, int] = {}
    visited: set[int] = set()
    for root in sorted(G.vertices):
        if root in visited:
            continue
        parent[root] = root
        visited.add(root)
        stack = [root]
        while stack:
            v = stack[-1]
            nxt = None
            for w in G.neighbors(v):
                if w not in visited:
                    nxt = w
                    break
            if nxt is None:
                stack.pop()
            else:
                parent[nxt] = v
                visited.add(nxt)
                stack.append(nxt)
    return RootedForest(parent)


def is_elimination_forest(G: Graph, F: RootedForest) -> bool:
    """Does every edge of G connect an ancestor-descendant pair of F?"""
    if set(G.vertices) != set(F.nodes):
        return False
    anc: dict[int, set[int]] = {}
    for v in F.nodes:
        chain = set()
        u = v
        while True:
            chain.add(u)
            p = F.parent[u]
            if p == u:
                break
            u = p
        anc[v] = chain
    return all(u in anc[v] or v in anc[u] for u, v in G.edges)


def treedepth_at_most(G: Graph, k: int, budget: Budget | None = None) -> bool:
    """Exact treedepth decision by branch and bound: remove a vertex,
    recurse on components.  Desk scale only."""
    budget = budget or Budget()
    memo: dict[tuple[frozenset, int], bool] = {}

    def solve(verts: frozenset, k: int) -> bool:
        if not verts:
            return True
        if k <= 0:
            return False
        if len(verts) <= k:
            return True
        H = G.induced(verts)
        comps = H.components()
        if len(comps) > 1:
            return all(solve(frozenset(c), k) for c in comps)
        key = (verts, k)
        hit = memo.get(key)
        if hit is None:
            budget.spend()
            hit = any(solve(verts - {v}, k - 1) for v in sorted(verts))
            memo[key] = hit
        return hit

    return solve(frozenset(G.vertices), k)


def exact_treedepth(G: Graph, budget: Budget | None = None) -> int:
    budget = budget or Budget()
    for k in itertools.count():
        if treedepth_at_most(G, k, budget):
            return k


# ---------------------------------------------------------------------------
# Low-treedepth colorings


@dataclass(frozen=True)
class LtdColoring:
    """A coloring such that any union of at most p color classes induces a
    subgraph of treedepth at most the number of classes used."""

    palette: tuple[str, ...]
    chi: dict[int, str]
    p: int

    def class_of(self, color: str) -> frozenset:
        return frozenset(v for v, c in self.chi.items() if c == color)


def _centered_forest(G: Graph) -> RootedForest:
    """An elimination forest built by repeatedly removing, from every
    component, the vertex whose removal best balances the remainder."""
    parent: dict[int, int] = {}

    def best_center(verts: tuple[int, ...]) -> int:
        H = G.induced(verts)

        def score(v):
            comps = H.without([v]).components()
            worst = max((len(c) for c in comps), default=0)
            return (worst, v)

        return min(verts, key=score)

    def build(verts: tuple[int, ...], above: int | None):
        H = G.induced(verts)
        for comp in H.components():
            c = best_center(comp)
            parent[c] = c if above is None else above
            rest = tuple(v for v in comp if v != c)
            if rest:
                build(rest, c)

    build(tuple(G.vertices), None)
    return RootedForest(parent)


def low_treedepth_coloring(G: Graph, p: int) -> LtdColoring:
    """Color by level in a centered elimination forest.  Any set D of
    levels restricts the forest to an elimination forest of depth at most
    |D|, so every union of at most p classes has treedepth at most the
    number of classes — for every p at once."""
    F = _centered_forest(G)
    chi = {v: f"L{F.level(v)}" for v in G.vertices}
    palette = tuple(sorted(set(chi.values()), key=lambda s: int(s[1:])))
    coloring = LtdColoring(palette, chi, p)
    if not verify_ltd_coloring(G, coloring, p):
        raise PreconditionError(
            f"centered coloring with {len(palette)} colors failed verification"
        )
    return coloring


def verify_ltd_coloring(G: Graph, coloring: LtdColoring, p: int,
                        budget: Budget | None = None) -> bool:
    budget = budget or Budget()
    classes = {c: coloring.class_of(c) for c in coloring.palette}
    for size in range(1, p + 1):
        for D in itertools.combinations(coloring.palette, size):
            verts = frozenset().union(*(classes[c] for c in D))
            if not treedepth_at_most(G.induced(verts), size, budget):
                return False
    return True


# ---------------------------------------------------------------------------
# Treedepth quantifier elimination


def _h_tuples(arity: int, hbound: int):
    for h in itertools.product(range(hbound), repeat=arity):
        if 0 in h:
            yield h


def _pred_name(rel: str, h: tuple[int, ...]) -> str:
    return rel + "@" + ",".join(str(x) for x in h)


def encode_relations(A: RelationalStructure, F: RootedForest, hbound: int) -> RootedForest:
    """Encode the relations of A as unary predicates on an elimination
    forest F of its Gaifman graph: R@(h1,..,hk) holds at a node a when
    R(parent^h1(a), .., parent^hk(a)) holds in A."""
    if set(F.nodes) != set(A.universe):
        raise InputError("forest must cover the universe")
    if A.functions:
        raise InputError("functions must be converted to relations first")
    colors: dict[str, list[int]] = {}
    flags: dict[str, bool] = {}
    for rel, (arity, tuples) in A.relations.items():
        if arity == 0:
            flags[rel] = () in tuples
            continue
        for h in _h_tuples(arity, hbound):
            members = [
                a
                for a in A.universe
                if tuple(F.ancestor(a, hj) for hj in h) in tuples
            ]
            if members:
                colors[_pred_name(rel, h)] = members
    # cross-check the elimination property: every tuple must be witnessed
    for rel, (arity, tuples) in A.relations.items():
        if arity == 0:
            continue
        for t in tuples:
            deepest = max(t, key=F.level)
            h = tuple(F.level(deepest) - F.level(a) for a in t)
            if tuple(F.ancestor(deepest, hj) for hj in h) != t:
                raise PreconditionError(
                    f"tuple {t} of {rel} is not on a root-to-leaf path"
                )
            if max(h) >= hbound:
                raise PreconditionError(f"tuple {t} of {rel} exceeds depth bound")
    return RootedForest(F.parent, colors, flags)


def rewrite_atoms_forest(f: Formula, sig: Signature, hbound: int) -> Formula:
    """Replace every relational atom of arity >= 2 by the disjunction over
    anchor positions and ancestor-offset vectors of the corresponding
    forest predicates."""

    def rec(g: Formula) -> Formula:
        if isinstance(g, Atom):
            arity = sig.arity(g.rel)
            if arity is None:
                raise InputError(f"unknown relation {g.rel}")
            if arity == 0:
                return g
            if any(not isinstance(t, Var) for t in g.args):
                raise InputError("atoms must be flattened before the rewrite")
            if arity == 1:
                return Atom(_pred_name(g.rel, (0,)), g.args)
            parts = []
            for i in range(arity):
                xi = g.args[i]
                for h in _h_tuples(arity, hbound):
                    if h[i] != 0:
                        continue
                    eqs = [
                        Eq(App("parent", h[j], xi) if h[j] else xi, g.args[j])
                        for j in range(arity)
                        if j != i
                    ]
                    parts.append(fand(Atom(_pred_name(g.rel, h), (xi,)), *eqs))
            return f_or(*parts)
        if isinstance(g, Not):
            return fnot(rec(g.sub))
        if isinstance(g, And):
            return fand(*(rec(a) for a in g.args))
        if isinstance(g, Or):
            return f_or(*(rec(a) for a in g.args))
        if isinstance(g, Exists):
            return Exists(g.vars, rec(g.body))
        if isinstance(g, Eq):
            return g
        raise InputError(f"unsupported node in existential matrix: {g!r}")

    return rec(f)


def td_qe(phi: Formula, d: int, A: RelationalStructure) -> QeResult:
    """Quantifier elimination for an existential formula on a structure
    whose Gaifman graph has small treedepth: encode onto a DFS elimination
    forest (depth < 2^d) and eliminate there."""
    G = gaifman_graph(A)
    F = dfs_elimination_forest(G)
    depth = F.depth()
    if depth >= 2**d:
        raise PreconditionError(
            f"DFS forest depth {depth} is not below 2^{d}; treedepth bound violated"
        )
    encoded = encode_relations(A, F, depth)
    sig = structure_signature(A)
    if isinstance(phi, Exists):
        matrix, ys = phi.body, phi.vars
    else:
        matrix, ys = phi, ()
    matrix = rewrite_atoms_forest(nnf(matrix), sig, depth)
    phi2 = Exists(ys, matrix) if ys else matrix
    res = forest_qe(phi2, depth, encoded)
    return QeResult(res.signature, res.formula, res.forest.to_structure())


# ---------------------------------------------------------------------------
# Bounded-expansion existential quantifier elimination


def _flatten_terms(matrix: Formula, fresh: FreshNames):
    """Replace function terms by fresh chained variables: parent^i(x)
    becomes z_i with graph-relation constraints gr(z_{j-1}, z_j).  Returns
    (new matrix with constraints conjoined, new variables, and for each new
    variable the defining term, used to enumerate realized colorings)."""
    chains: dict[tuple[str, str], str] = {}
    defs: dict[str, App] = {}  # z -> defining term over the original vars
    constraints: list[Formula] = []

    def flat_term(t):
        if isinstance(t, Var):
            return t
        base = flat_term(t.arg)
        cur = base
        for _ in range(t.power):
            key = (t.func, cur.name)
            z = chains.get(key)
            if z is None:
                z = fresh.new()
                chains[key] = z
                constraints.append(Atom(_graph_rel(t.func), (cur, Var(z))))
                defs[z] = App(t.func, 1, defs.get(cur.name, Var(cur.name)))
            cur = Var(z)
        return cur

    def rec(g: Formula) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.rel, tuple(flat_term(t) for t in g.args))
        if isinstance(g, Eq):
            return Eq(flat_term(g.left), flat_term(g.right))
        if isinstance(g, Not):
            return fnot(rec(g.sub))
        if isinstance(g, And):
            return fand(*(rec(a) for a in g.args))
        if isinstance(g, Or):
            return f_or(*(rec(a) for a in g.args))
        raise InputError(f"matrix must be quantifier-free, got {g!r}")

    body = rec(matrix)
    return fand(body, *constraints), tuple(defs), defs


def _graph_rel(func: str) -> str:
    return f"gr_{func}"


def functions_to_relations(A: RelationalStructure) -> RelationalStructure:
    """The relational version of A: each unary function becomes its graph
    as a binary relation (self-loops omitted — they add no Gaifman edges
    and fixpoints are handled by the term flattening's chain semantics)."""
    rels = dict(A.relations)
    for name, fmap in A.functions.items():
        rels[_graph_rel(name)] = (2, frozenset((x, y) for x, y in fmap.items()))
    return RelationalStructure(A.universe, rels, {})


def _restrict(A: RelationalStructure, keep: frozenset) -> RelationalStructure:
    rels = {}
    for name, (arity, tuples) in A.relations.items():
        rels[name] = (arity, frozenset(t for t in tuples if set(t) <= keep))
    return RelationalStructure(sorted(keep), rels, {})


def existential_qe_be(
    phi: Formula,
    A: RelationalStructure,
    coloring: LtdColoring | None = None,
    stage: str = "s",
    budget: Budget | None = None,
) -> QeResult:
    """Quantifier elimination for an existential formula on a general
    sparse structure, by splitting into color-range substructures of small
    treedepth and eliminating on each.

    Branches range over colorings of the variables; only colorings realized
    by some tuple of the structure are enumerated (the others contribute an
    unsatisfiable disjunct) to keep the branch count polynomial."""
    budget = budget or Budget()
    if isinstance(phi, Exists):
        matrix, ys = nnf(phi.body), phi.vars
    else:
        matrix, ys = nnf(phi), ()
    xs = tuple(sorted(free_vars(phi)))

    Arel = functions_to_relations(A)
    fresh = FreshNames(all_var_names(matrix))
    matrix, zs, zdefs = _flatten_terms(matrix, fresh)
    allvars = xs + tuple(ys) + zs
    p = len(allvars)

    if coloring is None:
        coloring = low_treedepth_coloring(gaifman_graph(Arel), p)
    chi = coloring.chi

    # realized color vectors: one per tuple over the base variables, with
    # the chain variables' values forced by the (total) functions
    base_vars = xs + tuple(ys)
    realized: set[tuple[str, ...]] = set()
    if A.universe:
        for tup in itertools.product(A.universe, repeat=len(base_vars)):
            budget.spend()
            env = dict(zip(base_vars, tup))
            vec = [chi[env[v]] for v in base_vars]
            vec.extend(chi[oracle._eval_term(A, zdefs[z], env)] for z in zs)
            realized.add(tuple(vec))

    disjuncts: list[Formula] = []
    pieces: list[RelationalStructure] = []
    for bid, vec in enumerate(sorted(realized)):
        fmap = dict(zip(allvars, vec))
        D = sorted(set(vec))
        keep = frozenset(v for v in A.universe if chi[v] in D)
        Af_rels = dict(_restrict(Arel, keep).relations)
        for c in D:
            Af_rels[f"U_{c}"] = (1, frozenset((v,) for v in keep if chi[v] == c))
        Af = RelationalStructure(sorted(keep), Af_rels, {})
        guarded = fand(matrix, *(Atom(f"U_{fmap[v]}", (Var(v),)) for v in allvars))
        phi_f = Exists(tuple(ys) + zs, guarded) if (ys or zs) else guarded
        sub = td_qe(phi_f, len(D), Af)
        prefix = f"{stage}b{bid}_"
        piece, rel_map, fun_map = _mangle_structure(sub.structure, prefix, A.universe)
        disjuncts.append(rename_symbols(sub.formula, rel_map, fun_map))
        pieces.append(piece)

    if not pieces:
        formula: Formula = f_or()
        Ahat = RelationalStructure(A.universe, {}, {})
    else:
        formula = f_or(*disjuncts)
        Ahat = superimpose(*pieces)
    return _compress_unary(QeResult(structure_signature(Ahat), formula, Ahat), stage)


def _compress_unary(res: QeResult, stage: str) -> QeResult:
    """Re-encode a quantifier-free formula over a unary signature as a small
    disjunction over element-class colours.

    The truth of such a formula on a tuple depends only on the unary profile
    of each coordinate and on the equality pattern among the coordinates, so
    grouping elements by profile and tabulating one verdict per (class
    vector, equality pattern) is exact.  This keeps the formulas fed into
    subsequent elimination stages small."""
    A = res.structure
    xs = tuple(sorted(free_vars(res.formula)))
    unary = sorted(name for name, (ar, _) in A.relations.items() if ar == 1)
    cls: dict[object, int] = {}
    classes: dict[frozenset, int] = {}
    for v in A.universe:
        prof = frozenset(n for n in unary if A.holds(n, (v,)))
        cls[v] = classes.setdefault(prof, len(classes))
    memo: dict[tuple, bool] = {}
    rows: set[tuple] = set()
    for tup in itertools.product(A.universe, repeat=len(xs)):
        eqpat = tuple(tup.index(a) for a in tup)
        key = (tuple(cls[a] for a in tup), eqpat)
        if key not in memo:
            memo[key] = oracle.eval_formula(A, res.formula, dict(zip(xs, tup)))
        if memo[key]:
            rows.add(key)
    colors = {
        f"{stage}K{i}": (1, frozenset((v,) for v in A.universe if cls[v] == i))
        for i in range(len(classes))
    }
    Ahat = RelationalStructure(A.universe, colors, {})
    disjuncts = []
    for cvec, eqpat in sorted(rows):
        lits: list[Formula] = [
            Atom(f"{stage}K{c}", (Var(x),)) for c, x in zip(cvec, xs)
        ]
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                e: Formula = Eq(Var(xs[i]), Var(xs[j]))
                lits.append(e if eqpat[i] == eqpat[j] else fnot(e))
        disjuncts.append(fand(*lits))
    return QeResult(structure_signature(Ahat), f_or(*disjuncts), Ahat)


# ---------------------------------------------------------------------------
# Full quantifier elimination for batched formulas


def full_qe(phi: Formula, A: RelationalStructure, budget: Budget | None = None) -> QeResult:
    """Quantifier elimination by structural recursion: quantifier-free
    formulas pass through, boolean connectives superimpose the recursive
    results, and each existential block invokes the bounded-expansion
    elimination on the inner quantifier-free formula."""
    budget = budget or Budget()
    counter = itertools.count()

    def is_qf(g: Formula) -> bool:
        if isinstance(g, (Atom, Eq)):
            return True
        if isinstance(g, Not):
            return is_qf(g.sub)
        if isinstance(g, (And, Or)):
            return all(is_qf(a) for a in g.args)
        return False

    def rec(g: Formula, B: RelationalStructure) -> QeResult:
        if is_qf(g):
            return QeResult(structure_signature(B), g, B)
        if isinstance(g, Not):
            sub = rec(g.sub, B)
            return QeResult(sub.signature, fnot(sub.formula), sub.structure)
        if isinstance(g, (And, Or)):
            parts = []
            pieces = []
            for i, a in enumerate(g.args):
                sub = rec(a, B)
                prefix = f"q{next(counter)}_"
                piece, rel_map, fun_map = _mangle_structure(
                    sub.structure, prefix, B.universe
                )
                parts.append(rename_symbols(sub.formula, rel_map, fun_map))
                pieces.append(piece)
            comb = fand if isinstance(g, And) else f_or
            merged = superimpose(*pieces) if pieces else B
            return QeResult(structure_signature(merged), comb(*parts), merged)
        if isinstance(g, Forall):
            return rec(fnot(Exists(g.vars, fnot(g.body))), B)
        if isinstance(g, Exists):
            inner = rec(g.body, B)
            stage = f"q{next(counter)}"
            return existential_qe_be(
                Exists(g.vars, inner.formula),
                inner.structure,
                stage=stage,
                budget=budget,
            )
        raise InputError(f"unsupported formula node {g!r}")

    result = rec(nnf(expand_dist(nnf(phi))), A)
    if not unary_signature_only(result.signature):
        raise PreconditionError("output signature must be unary-only")
    return result


def model_check_qe(A: RelationalStructure, phi: Formula, budget: Budget | None = None) -> bool:
    """Decide a sentence by full quantifier elimination plus one
    quantifier-free evaluation."""
    if free_vars(phi):
        raise InputError("model checking expects a sentence")
    res = full_qe(phi, A, budget=budget)
    return oracle.eval_formula(res.structure, res.formula, budget=budget)


def query_structure(res: QeResult):
    """A per-tuple answerer over the eliminated form: each call evaluates
    the quantifier-free formula pointwise (no quantification over A)."""
    variables = tuple(sorted(free_vars(res.formula)))

    def answer(*tup: int) -> bool:
        if len(tup) != len(variables):
            raise InputError(f"expected {len(variables)} arguments {variables}")
        return oracle.eval_formula(res.structure, res.formula, dict(zip(variables, tup)))

    answer.variables = variables
    return answer


# ---------------------------------------------------------------------------
# Selector-based model checking


def selector(A: RelationalStructure, q: int, pinned: tuple[int, ...] = (),
             budget: Budget | None = None) -> tuple[int, ...]:
    """A rank-q selection: the minimum element of every class of the
    rank-q equivalence relative to the pinned constants.  Testing an
    existential over the selection is equivalent to testing it over the
    whole universe."""
    classes = oracle.q_type_partition(A, q, pinned, budget=budget)
    return tuple(sorted(cls[0] for cls in classes))


def model_check_selector(A: RelationalStructure, phi: Formula,
                         budget: Budget | None = None) -> bool:
    """Decide a sentence by recursing through quantifiers, ranging each
    one over a selection computed with the preceding choices pinned."""
    if free_vars(phi):
        raise InputError("model checking expects a sentence")
    budget = budget or Budget()
    phi = nnf(expand_dist(nnf(phi)))

    def rec(g: Formula, names: tuple[str, ...], vals: tuple[int, ...]) -> bool:
        val = dict(zip(names, vals))
        if isinstance(g, (Atom, Eq, DistAtom)):
            return oracle.eval_formula(A, g, val, budget=budget)
        if isinstance(g, Not):
            return not rec(g.sub, names, vals)
        if isinstance(g, And):
            return all(rec(a, names, vals) for a in g.args)
        if isinstance(g, Or):
            return any(rec(a, names, vals) for a in g.args)
        if isinstance(g, (Exists, Forall)):
            want = isinstance(g, Exists)
            body = g.body if want else fnot(g.body)
            rest = Exists(g.vars[1:], body) if len(g.vars) > 1 else body
            x = g.vars[0]
            R = selector(A, quantifier_rank(rest), vals, budget=budget)
            hit = any(rec(rest, names + (x,), vals + (v,)) for v in R)
            return hit if want else not hit
        raise InputError(f"unsupported formula node {g!r}")

    return rec(phi, (), ())
