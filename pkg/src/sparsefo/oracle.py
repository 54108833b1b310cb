"""Brute-force ground-truth semantics for first-order logic over finite
structures, plus q-equivalence type refinement and rooted-tree isomorphism.

Two evaluators are provided: ``eval_formula`` (single valuation, early
exit) and ``satisfying_tuples`` (bottom-up relational evaluation with hash
joins, used when whole tuple sets are needed).  They are cross-checked in
the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from . import logic
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
    Not,
    Or,
    Term,
    Var,
    free_vars,
    nnf,
    quantifier_rank,
)
from .structures import Graph, RelationalStructure, RootedForest


@dataclass(frozen=True)
class TuplePredicate:
    variables: tuple[str, ...]
    tuples: frozenset[tuple[int, ...]]

    def __contains__(self, item: tuple[int, ...]) -> bool:
        return tuple(item) in self.tuples


def _eval_term(A: RelationalStructure, t: Term, val: dict[str, int]) -> int:
    if isinstance(t, Var):
        try:
            return val[t.name]
        except KeyError:
            raise InputError(f"unbound variable {t.name}") from None
    x = _eval_term(A, t.arg, val)
    fmap = A.functions.get(t.func)
    if fmap is None:
        raise InputError(f"unknown function {t.func}")
    for _ in range(t.power):
        x = fmap[x]
    return x


class _DistCache:
    """Lazy all-pairs distances in the (symmetrized) E-graph of a structure."""

    def __init__(self, A: RelationalStructure):
        self.A = A
        self.dist: dict[int, dict[int, int]] = {}
        rel = A.relations.get("E")
        if rel is None or rel[0] != 2:
            self.graph = None
        else:
            self.graph = Graph(A.universe, ((u, v) for u, v in rel[1] if u != v))

    def check(self, u: int, v: int, bound: int) -> bool:
        if self.graph is None:
            raise InputError("dist<= atom needs a binary relation E")
        if u not in self.dist:
            from .structures import distances_from

            self.dist[u] = distances_from(self.graph, u)
        d = self.dist[u].get(v)
        return d is not None and d <= bound


class _Evaluator:
    def __init__(self, A: RelationalStructure, budget: Budget | None):
        self.A = A
        self.budget = budget
        self.dists = _DistCache(A)
        self.memo: dict[tuple[int, tuple[int | None, ...]], bool] = {}
        self.fvt: dict[int, tuple[str, ...]] = {}
        self.fv: dict[int, frozenset[str]] = {}
        self.qr: dict[int, int] = {}
        self.pin: dict[int, tuple[str, Term] | None] = {}
        self.order: dict[int, list[Formula]] = {}

    def _fv(self, f: Formula) -> frozenset[str]:
        # memoized per object so shared subformulas are walked once
        key = id(f)
        hit = self.fv.get(key)
        if hit is not None:
            return hit
        if isinstance(f, (Atom, Eq, DistAtom)):
            out = free_vars(f)
        elif isinstance(f, Not):
            out = self._fv(f.sub)
        elif isinstance(f, (And, Or)):
            out = frozenset().union(*(self._fv(a) for a in f.args))
        elif isinstance(f, (Exists, Forall)):
            out = self._fv(f.body) - frozenset(f.vars)
        else:
            out = free_vars(f)
        self.fv[key] = out
        return out

    def _qr(self, f: Formula) -> int:
        key = id(f)
        hit = self.qr.get(key)
        if hit is not None:
            return hit
        if isinstance(f, (Atom, Eq, DistAtom)):
            out = 0
        elif isinstance(f, Not):
            out = self._qr(f.sub)
        elif isinstance(f, (And, Or)):
            out = max((self._qr(a) for a in f.args), default=0)
        elif isinstance(f, (Exists, Forall)):
            out = len(f.vars) + self._qr(f.body)
        else:
            out = quantifier_rank(f)
        self.qr[key] = out
        return out

    def _ordered(self, f: And | Or) -> list[Formula]:
        key = id(f)
        hit = self.order.get(key)
        if hit is None:
            hit = sorted(f.args, key=self._qr)
            self.order[key] = hit
        return hit

    def _pinned_binding(self, f: Formula) -> tuple[str, Term] | None:
        """For Exists x (... and x = t and ...) with x not occurring in t,
        the witness is forced, so the universe scan can be skipped."""
        key = id(f)
        if key in self.pin:
            return self.pin[key]
        result = None
        if isinstance(f, Exists) and len(f.vars) == 1 and isinstance(f.body, And):
            x = f.vars[0]
            for a in f.body.args:
                if not isinstance(a, Eq):
                    continue
                for side, other in ((a.left, a.right), (a.right, a.left)):
                    if (
                        isinstance(side, Var)
                        and side.name == x
                        and logic.term_var(other) != x
                    ):
                        result = (x, other)
                        break
                if result is not None:
                    break
        self.pin[key] = result
        return result

    def eval(self, f: Formula, val: dict[str, int]) -> bool:
        if self.budget is not None:
            self.budget.spend()
        if isinstance(f, Atom):
            args = tuple(_eval_term(self.A, t, val) for t in f.args)
            return self.A.holds(f.rel, args)
        if isinstance(f, Eq):
            return _eval_term(self.A, f.left, val) == _eval_term(self.A, f.right, val)
        if isinstance(f, DistAtom):
            return self.dists.check(
                _eval_term(self.A, f.left, val), _eval_term(self.A, f.right, val), f.bound
            )
        if isinstance(f, Not):
            return not self.eval(f.sub, val)
        if isinstance(f, (And, Or)):
            want = isinstance(f, Or)
            # cheap (low quantifier rank) children first for early exit
            for a in self._ordered(f):
                if self.eval(a, val) == want:
                    return want
            return not want
        if isinstance(f, (Exists, Forall)):
            fid = id(f)
            fvt = self.fvt.get(fid)
            if fvt is None:
                fvt = tuple(sorted(self._fv(f)))
                self.fvt[fid] = fvt
            key = (fid, tuple(val.get(k) for k in fvt))
            hit = self.memo.get(key)
            if hit is not None:
                return hit
            want = isinstance(f, Exists)
            pinned = self._pinned_binding(f)
            if pinned is not None:
                name, term = pinned
                sub = dict(val)
                sub[name] = _eval_term(self.A, term, val)
                result = self.eval(f.body, sub)
                self.memo[key] = result
                return result
            result = not want
            sub = dict(val)
            for assignment in product(self.A.universe, repeat=len(f.vars)):
                for name, x in zip(f.vars, assignment):
                    sub[name] = x
                if self.eval(f.body, sub) == want:
                    result = want
                    break
            self.memo[key] = result
            return result
        raise InputError(f"unknown formula node {f!r}")


def eval_formula(
    A: RelationalStructure,
    f: Formula,
    val: dict[str, int] | None = None,
    budget: Budget | None = None,
) -> bool:
    """Tarskian truth of f in A under the given valuation."""
    return _Evaluator(A, budget).eval(f, dict(val or {}))


def evaluator(A: RelationalStructure, budget: Budget | None = None) -> _Evaluator:
    """A reusable evaluator for many queries against one structure; its
    memo tables persist across eval calls."""
    return _Evaluator(A, budget)


# ---------------------------------------------------------------------------
# Relational (tuple-set) evaluation


def _join(
    vars1: tuple[str, ...],
    rows1: set[tuple[int, ...]],
    vars2: tuple[str, ...],
    rows2: set[tuple[int, ...]],
) -> tuple[tuple[str, ...], set[tuple[int, ...]]]:
    shared = [v for v in vars1 if v in vars2]
    extra = [v for v in vars2 if v not in vars1]
    out_vars = vars1 + tuple(extra)
    i1 = [vars1.index(v) for v in shared]
    i2 = [vars2.index(v) for v in shared]
    iextra = [vars2.index(v) for v in extra]
    index: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for r in rows2:
        index.setdefault(tuple(r[i] for i in i2), []).append(tuple(r[i] for i in iextra))
    out = set()
    for r in rows1:
        for ext in index.get(tuple(r[i] for i in i1), ()):
            out.add(r + ext)
    return out_vars, out


def _extend(
    vars_: tuple[str, ...],
    rows: set[tuple[int, ...]],
    target: tuple[str, ...],
    universe: tuple[int, ...],
) -> set[tuple[int, ...]]:
    missing = [v for v in target if v not in vars_]
    idx = []
    for v in target:
        idx.append(vars_.index(v) if v in vars_ else None)
    out = set()
    for r in rows:
        for ext in product(universe, repeat=len(missing)):
            it = iter(ext)
            out.add(tuple(r[i] if i is not None else next(it) for i in idx))
    return out


class _RelEvaluator:
    def __init__(self, A: RelationalStructure, budget: Budget):
        self.A = A
        self.budget = budget
        self.dists = _DistCache(A)

    def _atom_table(self, f: Formula, negated: bool) -> tuple[tuple[str, ...], set]:
        vars_ = tuple(sorted(free_vars(f)))
        rows = set()
        self.budget.spend(len(self.A.universe) ** len(vars_))
        ev = _Evaluator(self.A, None)
        ev.dists = self.dists
        for assignment in product(self.A.universe, repeat=len(vars_)):
            val = dict(zip(vars_, assignment))
            if ev.eval(f, val) != negated:
                rows.add(assignment)
        return vars_, rows

    def sat(self, f: Formula) -> tuple[tuple[str, ...], set[tuple[int, ...]]]:
        """Satisfying assignments of f over its free variables (f in NNF)."""
        if isinstance(f, (Atom, Eq, DistAtom)):
            return self._atom_table(f, False)
        if isinstance(f, Not):
            if not isinstance(f.sub, (Atom, Eq, DistAtom)):
                raise InputError("relational evaluation requires NNF input")
            return self._atom_table(f.sub, True)
        if isinstance(f, And):
            if not f.args:
                return (), {()}
            parts = sorted((self.sat(a) for a in f.args), key=lambda p: len(p[1]))
            vars_, rows = parts[0]
            for v2, r2 in parts[1:]:
                self.budget.spend(len(rows) + len(r2))
                vars_, rows = _join(vars_, rows, v2, r2)
            return vars_, rows
        if isinstance(f, Or):
            target = tuple(sorted(free_vars(f)))
            out: set[tuple[int, ...]] = set()
            for a in f.args:
                v, r = self.sat(a)
                self.budget.spend(
                    len(r) * len(self.A.universe) ** (len(target) - len(v)) + 1
                )
                out |= _extend(v, r, target, self.A.universe)
            return target, out
        if isinstance(f, Exists):
            v, r = self.sat(f.body)
            keep = tuple(x for x in v if x not in f.vars)
            idx = [v.index(x) for x in keep]
            self.budget.spend(len(r) + 1)
            return keep, {tuple(row[i] for i in idx) for row in r}
        if isinstance(f, Forall):
            v, r = self.sat(f.body)
            bound = [x for x in v if x in f.vars]
            # the body table may omit bound variables the body ignores
            need = len(self.A.universe) ** len(bound)
            keep = tuple(x for x in v if x not in f.vars)
            idx = [v.index(x) for x in keep]
            counts: dict[tuple[int, ...], int] = {}
            self.budget.spend(len(r) + 1)
            for row in r:
                key = tuple(row[i] for i in idx)
                counts[key] = counts.get(key, 0) + 1
            return keep, {key for key, c in counts.items() if c == need}
        raise InputError(f"unknown formula node {f!r}")


def satisfying_tuples(
    A: RelationalStructure,
    f: Formula,
    variables: tuple[str, ...] | None = None,
    budget: Budget | None = None,
) -> TuplePredicate:
    """The set {a-bar : A |= f(a-bar)} over the given free-variable order."""
    if variables is None:
        variables = tuple(sorted(free_vars(f)))
    if not set(free_vars(f)) <= set(variables):
        raise InputError("variables must cover the free variables of f")
    budget = budget or Budget()
    budget.spend(len(A.universe) ** len(variables))
    v, rows = _RelEvaluator(A, budget).sat(nnf(f))
    rows = _extend(v, rows, tuple(variables), A.universe)
    return TuplePredicate(tuple(variables), frozenset(rows))


# ---------------------------------------------------------------------------
# q-equivalence type refinement


def _function_power_bound(A: RelationalStructure) -> int:
    """Smallest P such that every f-orbit stabilizes within P steps; atomic
    types only need function powers below P."""
    best = 1
    for fmap in A.functions.values():
        for x in A.universe:
            seen = set()
            y = x
            steps = 0
            while y not in seen:
                seen.add(y)
                y = fmap[y]
                steps += 1
            best = max(best, steps)
    return best


def _atomic_type(A: RelationalStructure, tup: tuple[int, ...], pbound: int):
    """Canonical atomic type of a tuple: equality pattern and relation facts
    over the function closure of the tuple."""
    keys: list[tuple[int, str, int]] = []
    values: list[int] = []
    for i, a in enumerate(tup):
        keys.append((i, "", 0))
        values.append(a)
        for fname, fmap in sorted(A.functions.items()):
            y = a
            for p in range(1, pbound + 1):
                y = fmap[y]
                keys.append((i, fname, p))
                values.append(y)
    eq_pattern = []
    first_at: dict[int, int] = {}
    for j, v in enumerate(values):
        eq_pattern.append(first_at.setdefault(v, j))
    facts = []
    for name in sorted(A.relations):
        arity, tuples = A.relations[name]
        if arity == 0:
            facts.append((name, (() in tuples,)))
            continue
        hits = []
        for combo in product(range(len(values)), repeat=arity):
            if tuple(values[j] for j in combo) in tuples:
                hits.append(combo)
        facts.append((name, tuple(hits)))
    return (tuple(keys), tuple(eq_pattern), tuple(facts))


def q_type_partition(
    A: RelationalStructure,
    q: int,
    pinned: tuple[int, ...] = (),
    budget: Budget | None = None,
) -> list[tuple[int, ...]]:
    """Partition of the universe into =_q classes (with pinned constants),
    by Ehrenfeucht-style refinement.  Child types are collected as sets,
    not multisets, matching plain first-order equivalence."""
    budget = budget or Budget()
    budget.spend(len(A.universe) ** (q + len(pinned) + 1))
    pbound = _function_power_bound(A)
    memo: dict[tuple[int, tuple[int, ...]], object] = {}

    def tp(j: int, tup: tuple[int, ...]):
        key = (j, tup)
        hit = memo.get(key)
        if hit is not None:
            return hit
        budget.spend()
        if j == 0:
            result = _atomic_type(A, tup, pbound)
        else:
            children = frozenset(tp(j - 1, tup + (w,)) for w in A.universe)
            result = (_atomic_type(A, tup, pbound), children)
        memo[key] = result
        return result

    groups: dict[object, list[int]] = {}
    for u in A.universe:
        groups.setdefault(tp(q, pinned + (u,)), []).append(u)
    return sorted(tuple(sorted(g)) for g in groups.values())


# ---------------------------------------------------------------------------
# Rooted colored tree isomorphism


def subtree_code(F: RootedForest, v: int):
    """Canonical code of the colored subtree rooted at v."""
    return (F.color_of(v), tuple(sorted(subtree_code(F, c) for c in F.children(v))))


def subtree_iso(F: RootedForest, a: int, b: int) -> bool:
    if a not in F or b not in F:
        raise InputError("nodes not in forest")
    return subtree_code(F, a) == subtree_code(F, b)
