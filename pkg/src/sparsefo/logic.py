"""First-order formulas: AST, parser/printer, normal forms, rank measures,
the dist<=r macro, and interpretations with parameters.

Formulas are immutable.  Conjunction/disjunction are n-ary, flattened and
canonically sorted by printed form, so syntactic deduplication is plain
equality.  Fresh variable names are generated by a deterministic counter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import InputError, PreconditionError


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class App:
    """Iterated unary function application f^i(arg)."""

    func: str
    power: int
    arg: "Term"

    def __post_init__(self):
        if self.power < 0:
            raise InputError("function power must be nonnegative")

    def __str__(self):
        return f"({self.func}^ {self.power} {self.arg})"


Term = Var | App


def app(func: str, power: int, arg: Term) -> Term:
    """Build f^power(arg), collapsing nested same-function applications."""
    if power == 0:
        return arg
    if isinstance(arg, App) and arg.func == func:
        return App(func, power + arg.power, arg.arg)
    return App(func, power, arg)


def term_var(t: Term) -> str:
    while isinstance(t, App):
        t = t.arg
    return t.name


def map_term_var(t: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    return app(t.func, t.power, map_term_var(t.arg, mapping))


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class DistAtom:
    """dist(left, right) <= bound in the E-graph; a macro atom.

    Rank measures treat it as atomic; expand_dist rewrites it into plain
    first-order form (the single expansion used everywhere).
    """

    left: Term
    right: Term
    bound: int


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Exists:
    vars: tuple[str, ...]
    body: "Formula"

    def __post_init__(self):
        if not self.vars:
            raise InputError("empty quantifier block")


@dataclass(frozen=True)
class Forall:
    vars: tuple[str, ...]
    body: "Formula"

    def __post_init__(self):
        if not self.vars:
            raise InputError("empty quantifier block")


Formula = Atom | Eq | DistAtom | Not | And | Or | Exists | Forall

TRUE = And(())
FALSE = Or(())


def fand(*parts: Formula) -> Formula:
    """Canonical n-ary conjunction: flattened, deduplicated, sorted."""
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.args)
        else:
            flat.append(p)
    if any(f == FALSE for f in flat):
        return FALSE
    uniq = sorted({print_formula(f): f for f in flat if f != TRUE}.items())
    out = tuple(f for _, f in uniq)
    if len(out) == 1:
        return out[0]
    return And(out)


def f_or(*parts: Formula) -> Formula:
    """Canonical n-ary disjunction: flattened, deduplicated, sorted."""
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.args)
        else:
            flat.append(p)
    if any(f == TRUE for f in flat):
        return TRUE
    uniq = sorted({print_formula(f): f for f in flat if f != FALSE}.items())
    out = tuple(f for _, f in uniq)
    if len(out) == 1:
        return out[0]
    return Or(out)


def fnot(f: Formula) -> Formula:
    if f == TRUE:
        return FALSE
    if f == FALSE:
        return TRUE
    if isinstance(f, Not):
        return f.sub
    return Not(f)


def implies(a: Formula, b: Formula) -> Formula:
    return f_or(fnot(a), b)


def dist_le(left: Term, right: Term, bound: int) -> Formula:
    if bound == 0:
        return Eq(left, right)
    return DistAtom(left, right, bound)


# ---------------------------------------------------------------------------
# Printing / parsing


def print_formula(f: Formula) -> str:
    if isinstance(f, Atom):
        if not f.args:
            return f.rel
        return "(" + " ".join([f.rel] + [str(a) for a in f.args]) + ")"
    if isinstance(f, Eq):
        return f"(= {f.left} {f.right})"
    if isinstance(f, DistAtom):
        return f"(dist<= {f.bound} {f.left} {f.right})"
    if isinstance(f, Not):
        return f"(not {print_formula(f.sub)})"
    if isinstance(f, And):
        if not f.args:
            return "true"
        return "(and " + " ".join(print_formula(a) for a in f.args) + ")"
    if isinstance(f, Or):
        if not f.args:
            return "false"
        return "(or " + " ".join(print_formula(a) for a in f.args) + ")"
    if isinstance(f, Exists):
        return f"(exists ({' '.join(f.vars)}) {print_formula(f.body)})"
    if isinstance(f, Forall):
        return f"(forall ({' '.join(f.vars)}) {print_formula(f.body)})"
    raise InputError(f"unknown formula node {f!r}")


@dataclass(frozen=True)
class Signature:
    """Relation names with arities (0 = flag, 1 = unary predicate) and
    unary function names."""

    relations: tuple[tuple[str, int], ...]
    functions: tuple[str, ...] = ()

    def arity(self, name: str) -> int | None:
        for n, a in self.relations:
            if n == name:
                return a
        return None

    def has_function(self, name: str) -> bool:
        return name in self.functions

    def with_relations(self, extra: Iterable[tuple[str, int]]) -> "Signature":
        merged = dict(self.relations)
        for n, a in extra:
            merged[n] = a
        return Signature(tuple(sorted(merged.items())), self.functions)


GRAPH_SIGNATURE = Signature((("E", 2),))


def graph_signature(colors: Iterable[str] = ()) -> Signature:
    rels = [("E", 2)] + [(c, 1) for c in colors]
    return Signature(tuple(sorted(rels)))


def forest_signature(colors: Iterable[str] = (), flags: Iterable[str] = ()) -> Signature:
    rels = [(c, 1) for c in colors] + [(fl, 0) for fl in flags]
    return Signature(tuple(sorted(rels)), ("parent",))


def structure_signature(A) -> Signature:
    rels = tuple(sorted((n, ar) for n, (ar, _) in A.relations.items()))
    return Signature(rels, tuple(sorted(A.functions)))


def _tokenize(text: str) -> Iterator[tuple[str, int]]:
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            yield ch, i
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j], i
            i = j


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.tokens = list(_tokenize(text))
        self.pos = 0
        self.sig = sig

    def error(self, msg: str):
        at = self.tokens[self.pos][1] if self.pos < len(self.tokens) else len(self.tokens)
        raise InputError(f"parse error at position {at}: {msg}")

    def peek(self) -> str | None:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def next(self) -> str:
        if self.pos >= len(self.tokens):
            self.error("unexpected end of input")
        tok = self.tokens[self.pos][0]
        self.pos += 1
        return tok

    def expect(self, tok: str):
        got = self.next()
        if got != tok:
            self.error(f"expected {tok!r}, got {got!r}")

    def parse(self) -> Formula:
        f = self.formula()
        if self.pos != len(self.tokens):
            self.error("trailing input")
        return f

    def term(self) -> Term:
        tok = self.next()
        if tok == "(":
            head = self.next()
            if not head.endswith("^"):
                self.error(f"expected a function application, got {head!r}")
            fname = head[:-1]
            if not self.sig.has_function(fname):
                self.error(f"unknown function {fname!r}")
            try:
                power = int(self.next())
            except ValueError:
                self.error("function power must be an integer")
            arg = self.term()
            self.expect(")")
            return app(fname, power, arg)
        if tok == ")":
            self.error("unexpected ')' in term")
        return Var(tok)

    def formula(self) -> Formula:
        tok = self.next()
        if tok != "(":
            # bare flag name or boolean constant
            if tok == "true":
                return TRUE
            if tok == "false":
                return FALSE
            ar = self.sig.arity(tok)
            if ar is None:
                self.error(f"unknown flag {tok!r}")
            if ar != 0:
                self.error(f"relation {tok!r} has arity {ar}, needs arguments")
            return Atom(tok, ())
        head = self.next()
        if head == "not":
            sub = self.formula()
            self.expect(")")
            return fnot(sub)
        if head in ("and", "or"):
            parts = []
            while self.peek() != ")":
                parts.append(self.formula())
            self.next()
            if not parts:
                self.error(f"empty {head}")
            return fand(*parts) if head == "and" else f_or(*parts)
        if head in ("exists", "forall"):
            self.expect("(")
            vs = []
            while self.peek() != ")":
                vs.append(self.next())
            self.next()
            if not vs:
                self.error("empty quantifier variable list")
            body = self.formula()
            self.expect(")")
            return Exists(tuple(vs), body) if head == "exists" else Forall(tuple(vs), body)
        if head == "=":
            left = self.term()
            right = self.term()
            self.expect(")")
            return Eq(left, right)
        if head == "dist<=":
            try:
                bound = int(self.next())
            except ValueError:
                self.error("dist<= bound must be an integer")
            left = self.term()
            right = self.term()
            self.expect(")")
            return dist_le(left, right, bound)
        # relational atom
        ar = self.sig.arity(head)
        if ar is None:
            self.error(f"unknown relation {head!r}")
        args = []
        while self.peek() != ")":
            args.append(self.term())
        self.next()
        if len(args) != ar:
            self.error(f"relation {head!r} expects {ar} arguments, got {len(args)}")
        return Atom(head, tuple(args))


def parse_formula(text: str, sig: Signature) -> Formula:
    return _Parser(text, sig).parse()


# ---------------------------------------------------------------------------
# Structural helpers


def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset(term_var(t) for t in f.args)
    if isinstance(f, Eq):
        return frozenset({term_var(f.left), term_var(f.right)})
    if isinstance(f, DistAtom):
        return frozenset({term_var(f.left), term_var(f.right)})
    if isinstance(f, Not):
        return free_vars(f.sub)
    if isinstance(f, (And, Or)):
        out: frozenset[str] = frozenset()
        for a in f.args:
            out |= free_vars(a)
        return out
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - frozenset(f.vars)
    raise InputError(f"unknown formula node {f!r}")


def all_var_names(f: Formula) -> set[str]:
    if isinstance(f, (Atom, Eq, DistAtom)):
        return set(free_vars(f))
    if isinstance(f, Not):
        return all_var_names(f.sub)
    if isinstance(f, (And, Or)):
        out: set[str] = set()
        for a in f.args:
            out |= all_var_names(a)
        return out
    if isinstance(f, (Exists, Forall)):
        return all_var_names(f.body) | set(f.vars)
    raise InputError(f"unknown formula node {f!r}")


class FreshNames:
    """Deterministic counter-based fresh variable names avoiding a given set."""

    def __init__(self, avoid: Iterable[str] = (), prefix: str = "v"):
        self.avoid = set(avoid)
        self.prefix = prefix
        self.counter = 0

    def new(self) -> str:
        while True:
            name = f"{self.prefix}{self.counter}"
            self.counter += 1
            if name not in self.avoid:
                self.avoid.add(name)
                return name


def substitute(f: Formula, mapping: Mapping[str, Term], fresh: FreshNames | None = None) -> Formula:
    """Capture-avoiding simultaneous substitution of variables by terms."""
    if fresh is None:
        avoid = all_var_names(f)
        for t in mapping.values():
            avoid.add(term_var(t))
        fresh = FreshNames(avoid)
    if isinstance(f, Atom):
        return Atom(f.rel, tuple(map_term_var(t, mapping) for t in f.args))
    if isinstance(f, Eq):
        return Eq(map_term_var(f.left, mapping), map_term_var(f.right, mapping))
    if isinstance(f, DistAtom):
        return DistAtom(map_term_var(f.left, mapping), map_term_var(f.right, mapping), f.bound)
    if isinstance(f, Not):
        return fnot(substitute(f.sub, mapping, fresh))
    if isinstance(f, And):
        return fand(*(substitute(a, mapping, fresh) for a in f.args))
    if isinstance(f, Or):
        return f_or(*(substitute(a, mapping, fresh) for a in f.args))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in mapping.items() if k not in f.vars}
        clash = {term_var(t) for t in inner.values()} & set(f.vars)
        newvars = list(f.vars)
        if clash:
            ren = {}
            for i, v in enumerate(newvars):
                if v in clash:
                    nv = fresh.new()
                    ren[v] = Var(nv)
                    newvars[i] = nv
            body = substitute(f.body, ren, fresh)
        else:
            body = f.body
        body = substitute(body, inner, fresh)
        cls = Exists if isinstance(f, Exists) else Forall
        return cls(tuple(newvars), body)
    raise InputError(f"unknown formula node {f!r}")


def formula_size(f: Formula) -> int:
    if isinstance(f, (Atom, Eq, DistAtom)):
        return 1
    if isinstance(f, Not):
        return 1 + formula_size(f.sub)
    if isinstance(f, (And, Or)):
        return 1 + sum(formula_size(a) for a in f.args)
    if isinstance(f, (Exists, Forall)):
        return 1 + len(f.vars) + formula_size(f.body)
    raise InputError(f"unknown formula node {f!r}")


# ---------------------------------------------------------------------------
# Normal forms and rank measures


def nnf(f: Formula, negate: bool = False) -> Formula:
    """Push negations down to atoms."""
    if isinstance(f, (Atom, Eq, DistAtom)):
        return fnot(f) if negate else f
    if isinstance(f, Not):
        return nnf(f.sub, not negate)
    if isinstance(f, And):
        parts = tuple(nnf(a, negate) for a in f.args)
        return f_or(*parts) if negate else fand(*parts)
    if isinstance(f, Or):
        parts = tuple(nnf(a, negate) for a in f.args)
        return fand(*parts) if negate else f_or(*parts)
    if isinstance(f, Exists):
        body = nnf(f.body, negate)
        return Forall(f.vars, body) if negate else Exists(f.vars, body)
    if isinstance(f, Forall):
        body = nnf(f.body, negate)
        return Exists(f.vars, body) if negate else Forall(f.vars, body)
    raise InputError(f"unknown formula node {f!r}")


def quantifier_rank(f: Formula) -> int:
    if isinstance(f, (Atom, Eq, DistAtom)):
        return 0
    if isinstance(f, Not):
        return quantifier_rank(f.sub)
    if isinstance(f, (And, Or)):
        return max((quantifier_rank(a) for a in f.args), default=0)
    if isinstance(f, (Exists, Forall)):
        return len(f.vars) + quantifier_rank(f.body)
    raise InputError(f"unknown formula node {f!r}")


def alternation_rank(f: Formula) -> int:
    """Max number of quantifier-type switches along any branch of nnf(f)."""

    def rec(g: Formula, last: str | None) -> int:
        if isinstance(g, (Atom, Eq, DistAtom, Not)):
            return 0
        if isinstance(g, (And, Or)):
            return max((rec(a, last) for a in g.args), default=0)
        if isinstance(g, Exists):
            return (1 if last == "A" else 0) + rec(g.body, "E")
        if isinstance(g, Forall):
            return (1 if last == "E" else 0) + rec(g.body, "A")
        raise InputError(f"unknown formula node {g!r}")

    return rec(nnf(f), None)


def batched_qrank(f: Formula, m: int) -> int | None:
    """Number of quantifier blocks along the deepest branch of nnf(f) when
    every block has at most m variables; None when some block exceeds m."""

    def rec(g: Formula) -> int | None:
        if isinstance(g, (Atom, Eq, DistAtom, Not)):
            return 0
        if isinstance(g, (And, Or)):
            best = 0
            for a in g.args:
                sub = rec(a)
                if sub is None:
                    return None
                best = max(best, sub)
            return best
        if isinstance(g, (Exists, Forall)):
            if len(g.vars) > m:
                return None
            sub = rec(g.body)
            return None if sub is None else 1 + sub
        raise InputError(f"unknown formula node {g!r}")

    return rec(nnf(f))


def expand_dist(f: Formula, fresh: FreshNames | None = None) -> Formula:
    """Replace every dist<= atom by its existential path expansion: a chain
    of bound-1 fresh variables with 'stay or step along E' transitions."""
    if fresh is None:
        fresh = FreshNames(all_var_names(f), prefix="d")
    if isinstance(f, (Atom, Eq)):
        return f
    if isinstance(f, DistAtom):
        r = f.bound
        if r == 0:
            return Eq(f.left, f.right)
        chain: list[Term] = [f.left]
        names = [fresh.new() for _ in range(r - 1)]
        chain += [Var(n) for n in names]
        chain.append(f.right)
        steps = [f_or(Eq(a, b), Atom("E", (a, b))) for a, b in zip(chain, chain[1:])]
        body = fand(*steps)
        if names:
            return Exists(tuple(names), body)
        return body
    if isinstance(f, Not):
        return fnot(expand_dist(f.sub, fresh))
    if isinstance(f, And):
        return fand(*(expand_dist(a, fresh) for a in f.args))
    if isinstance(f, Or):
        return f_or(*(expand_dist(a, fresh) for a in f.args))
    if isinstance(f, Exists):
        return Exists(f.vars, expand_dist(f.body, fresh))
    if isinstance(f, Forall):
        return Forall(f.vars, expand_dist(f.body, fresh))
    raise InputError(f"unknown formula node {f!r}")


def _prenex(f: Formula, fresh: FreshNames) -> tuple[list[tuple[str, tuple[str, ...]]], Formula]:
    """Prenex form of an NNF formula: (prefix blocks, matrix).  Same-kind
    sibling blocks are merged greedily to keep alternations low."""
    if isinstance(f, (Atom, Eq, DistAtom, Not)):
        return [], f
    if isinstance(f, (Exists, Forall)):
        kind = "E" if isinstance(f, Exists) else "A"
        ren = {v: Var(fresh.new()) for v in f.vars}
        body = substitute(f.body, ren, fresh)
        prefix, matrix = _prenex(body, fresh)
        block = tuple(ren[v].name for v in f.vars)
        if prefix and prefix[0][0] == kind:
            merged = (kind, block + prefix[0][1])
            return [merged] + prefix[1:], matrix
        return [(kind, block)] + prefix, matrix
    if isinstance(f, (And, Or)):
        parts = [_prenex(a, fresh) for a in f.args]
        prefixes = [list(p) for p, _ in parts]
        matrices = [m for _, m in parts]
        out: list[tuple[str, tuple[str, ...]]] = []
        while any(prefixes):
            kinds = [p[0][0] for p in prefixes if p]
            # majority leading kind, existential on ties
            kind = "E" if kinds.count("E") >= kinds.count("A") else "A"
            block: list[str] = []
            for p in prefixes:
                while p and p[0][0] == kind:
                    block.extend(p.pop(0)[1])
            if not block:
                # nobody leads with the chosen kind; flip
                kind = "A" if kind == "E" else "E"
                for p in prefixes:
                    while p and p[0][0] == kind:
                        block.extend(p.pop(0)[1])
            if out and out[-1][0] == kind:
                out[-1] = (kind, out[-1][1] + tuple(block))
            else:
                out.append((kind, tuple(block)))
        matrix = fand(*matrices) if isinstance(f, And) else f_or(*matrices)
        return out, matrix
    raise InputError(f"unknown formula node {f!r}")


def _rebuild_prenex(prefix: list[tuple[str, tuple[str, ...]]], matrix: Formula) -> Formula:
    f = matrix
    for kind, vs in reversed(prefix):
        used = free_vars(f)
        live = tuple(v for v in vs if v in used)
        if not live:
            continue
        f = Exists(live, f) if kind == "E" else Forall(live, f)
    return f


def to_bsigma(f: Formula, q: int) -> Formula:
    """An equivalent boolean combination of prenex formulas with at most q
    quantifier blocks each (precondition: alternation rank <= q-1)."""
    if q < 1:
        raise InputError("q must be positive")
    g = nnf(f)
    if alternation_rank(g) > q - 1:
        raise PreconditionError(f"alternation rank exceeds {q - 1}")
    fresh = FreshNames(all_var_names(g), prefix="p")

    def top(h: Formula) -> Formula:
        if isinstance(h, (And, Or)):
            parts = tuple(top(a) for a in h.args)
            return fand(*parts) if isinstance(h, And) else f_or(*parts)
        if isinstance(h, (Atom, Eq, DistAtom, Not)):
            return h
        prefix, matrix = _prenex(h, fresh)
        return _rebuild_prenex(prefix, matrix)

    return top(g)


def normalize_batched(f: Formula, m: int, k: int, sig: Signature) -> Formula:
    """Canonical renaming of bound variables plus syntactic deduplication
    (the constructors already flatten/sort/dedupe n-ary connectives)."""
    counter = [0]

    def rec(g: Formula, env: Mapping[str, Term]) -> Formula:
        if isinstance(g, (Atom, Eq, DistAtom)):
            return substitute(g, dict(env))
        if isinstance(g, Not):
            return fnot(rec(g.sub, env))
        if isinstance(g, And):
            return fand(*(rec(a, env) for a in g.args))
        if isinstance(g, Or):
            return f_or(*(rec(a, env) for a in g.args))
        if isinstance(g, (Exists, Forall)):
            new_env = dict(env)
            fresh_names = []
            for v in g.vars:
                name = f"b{counter[0]}"
                counter[0] += 1
                fresh_names.append(name)
                new_env[v] = Var(name)
            body = rec(g.body, new_env)
            cls = Exists if isinstance(g, Exists) else Forall
            return cls(tuple(fresh_names), body)
        raise InputError(f"unknown formula node {g!r}")

    return rec(f, {})


# ---------------------------------------------------------------------------
# Interpretations with parameters


@dataclass(frozen=True)
class InterpretationWithParams:
    """An interpretation (domain, edge, colors) with parameter variables.

    ``domain`` has free variables (domain_var, *params); ``edge`` has free
    variables (*edge_vars, *params).  The edge formula is symmetrized at
    application time.
    """

    domain: Formula
    domain_var: str
    edge: Formula
    edge_vars: tuple[str, str]
    params: tuple[str, ...]
    colors: tuple[tuple[str, Formula, str], ...] = ()  # (name, formula, var)

    def domain_at(self, t: Term) -> Formula:
        return substitute(self.domain, {self.domain_var: t})

    def edge_at(self, t1: Term, t2: Term) -> Formula:
        sub = substitute(self.edge, {self.edge_vars[0]: t1, self.edge_vars[1]: t2})
        return sub

    def color_at(self, name: str, t: Term) -> Formula:
        for cname, formula, var in self.colors:
            if cname == name:
                return substitute(formula, {var: t})
        raise InputError(f"interpretation has no color {name!r}")


def ball_minus_interpretation(r: int, num_removed: int) -> InterpretationWithParams:
    """Domain = radius-r ball around y0 minus {y1..yk}; edges unchanged."""
    params = tuple(["y0"] + [f"y{i}" for i in range(1, num_removed + 1)])
    x = Var("x")
    domain = fand(
        dist_le(x, Var("y0"), r),
        *(fnot(Eq(x, Var(p))) for p in params[1:]),
    )
    edge = Atom("E", (Var("x1"), Var("x2")))
    return InterpretationWithParams(domain, "x", edge, ("x1", "x2"), params)


def ball_star_interpretation(r: int, num_isolated: int) -> InterpretationWithParams:
    """Domain = radius-r ball around y0; edges touching {y1..yk} removed."""
    params = tuple(["y0"] + [f"y{i}" for i in range(1, num_isolated + 1)])
    x = Var("x")
    domain = dist_le(x, Var("y0"), r)
    e1, e2 = Var("x1"), Var("x2")
    edge = fand(
        Atom("E", (e1, e2)),
        *(fnot(Eq(e1, Var(p))) for p in params[1:]),
        *(fnot(Eq(e2, Var(p))) for p in params[1:]),
    )
    return InterpretationWithParams(domain, "x", edge, ("x1", "x2"), params)


def rewrite_under_interpretation(f: Formula, interp: InterpretationWithParams) -> Formula:
    """The formula f-hat(params) with I(G,u) |= f iff G |= f-hat(u).

    dist<= atoms in f are first expanded (they speak about distances in the
    interpreted graph); quantifiers are then relativized to the domain
    formula and E atoms replaced by the symmetrized edge formula.
    """
    if not free_vars(f) <= set(interp.params):
        raise InputError("formula must be a sentence over the interpreted signature")
    g = expand_dist(nnf(f))
    fresh = FreshNames(
        all_var_names(g)
        | all_var_names(interp.domain)
        | all_var_names(interp.edge)
        | set(interp.params),
        prefix="i",
    )

    def rec(h: Formula) -> Formula:
        if isinstance(h, Atom):
            if h.rel == "E":
                t1, t2 = h.args
                return f_or(interp.edge_at(t1, t2), interp.edge_at(t2, t1))
            if any(name == h.rel for name, _, _ in interp.colors):
                (t,) = h.args
                return fand(interp.color_at(h.rel, t), interp.domain_at(t))
            return h
        if isinstance(h, (Eq, DistAtom)):
            return h
        if isinstance(h, Not):
            return fnot(rec(h.sub))
        if isinstance(h, And):
            return fand(*(rec(a) for a in h.args))
        if isinstance(h, Or):
            return f_or(*(rec(a) for a in h.args))
        if isinstance(h, Exists):
            ren = {v: Var(fresh.new()) for v in h.vars}
            body = rec(substitute(h.body, ren, fresh))
            guards = [interp.domain_at(ren[v]) for v in h.vars]
            return Exists(tuple(ren[v].name for v in h.vars), fand(*guards, body))
        if isinstance(h, Forall):
            ren = {v: Var(fresh.new()) for v in h.vars}
            body = rec(substitute(h.body, ren, fresh))
            guards = [interp.domain_at(ren[v]) for v in h.vars]
            return Forall(
                tuple(ren[v].name for v in h.vars),
                f_or(*(fnot(gd) for gd in guards), body),
            )
        raise InputError(f"unknown formula node {h!r}")

    return rec(g)


def apply_interpretation(interp: InterpretationWithParams, A, params: tuple[int, ...]):
    """Evaluate the interpretation on a graph structure with parameters,
    producing a new graph structure (colored if the interpretation has
    color formulas)."""
    from . import oracle
    from .structures import RelationalStructure

    if len(params) != len(interp.params):
        raise InputError(
            f"expected {len(interp.params)} parameters, got {len(params)}"
        )
    env = dict(zip(interp.params, params))
    domain = [
        w
        for w in A.universe
        if oracle.eval_formula(A, interp.domain, {**env, interp.domain_var: w})
    ]
    dset = set(domain)
    edges = set()
    v1, v2 = interp.edge_vars
    for i, u in enumerate(domain):
        for w in domain[i + 1 :]:
            if oracle.eval_formula(A, interp.edge, {**env, v1: u, v2: w}) or oracle.eval_formula(
                A, interp.edge, {**env, v1: w, v2: u}
            ):
                edges.add((u, w))
                edges.add((w, u))
    rels = {"E": (2, edges)}
    for name, formula, var in interp.colors:
        members = {
            (w,) for w in domain if oracle.eval_formula(A, formula, {**env, var: w})
        }
        rels[name] = (1, members)
    return RelationalStructure(dset, rels)
