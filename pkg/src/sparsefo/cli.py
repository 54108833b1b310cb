"""Command-line entry point: model checking, QE, rank/game analysis,
encoders, instance generators, self-test, and benchmarks.

Exit codes: 0 success, 1 property/agreement failure, 2 input error,
3 budget exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import random
import sys
import time
from dataclasses import dataclass, field

from . import __version__, encoders, oracle, qe_engine, splitter, treerank
from .errors import Budget, BudgetExceededError, InputError, PreconditionError
from .logic import (
    Signature,
    formula_size,
    graph_signature,
    parse_formula,
    print_formula,
    structure_signature,
)
from .structures import (
    Graph,
    RootedForest,
    build_tdk,
    graph_to_structure,
    parse_forest,
    parse_graph,
    parse_structure,
    serialize_forest,
    serialize_graph,
    subdivide_uniform,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3

DEFAULT_SEED = 0


@dataclass
class RunManifest:
    """Reproducibility record: inputs, seed, budgets, verdicts, timings."""

    command: str
    seed: int
    budget_steps: int
    cap_tower: int
    digests: dict[str, str] = field(default_factory=dict)
    verdicts: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    def emit(self, out=sys.stdout) -> None:
        print(f"manifest command {self.command}", file=out)
        print(f"manifest version {__version__}", file=out)
        print(f"manifest seed {self.seed}", file=out)
        print(f"manifest budget-steps {self.budget_steps}", file=out)
        print(f"manifest cap-tower {self.cap_tower}", file=out)
        for k in sorted(self.digests):
            print(f"manifest digest {k} {self.digests[k]}", file=out)
        for k in sorted(self.verdicts):
            print(f"verdict {k} {self.verdicts[k]}", file=out)
        for k in sorted(self.timings):
            print(f"timing {k} {self.timings[k]:.3f}", file=out)


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SPARSEFO_SEED")
    return int(env) if env else DEFAULT_SEED


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _load_structure(path: str, manifest: RunManifest):
    text = _read(path)
    manifest.digests[os.path.basename(path)] = _digest(text)
    head = text.lstrip().split(None, 1)[0] if text.strip() else ""
    if head == "graph":
        return graph_to_structure(parse_graph(text))
    if head == "forest":
        return parse_forest(text).to_structure()
    if head == "structure":
        return parse_structure(text)
    raise InputError(f"{path}: expected a 'graph', 'forest' or 'structure' file")


def _load_formula(arg: str, sig: Signature, manifest: RunManifest):
    if arg.startswith("@"):
        text = _read(arg[1:])
        manifest.digests[os.path.basename(arg[1:])] = _digest(text)
    else:
        text = arg
        manifest.digests["formula"] = _digest(text)
    return parse_formula(text, sig)


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="RNG seed (overrides SPARSEFO_SEED)")
    p.add_argument("--budget-steps", type=int, default=10**7)
    p.add_argument("--cap-tower", type=int, default=10**6)


def _manifest(args, name: str) -> RunManifest:
    return RunManifest(name, _seed(args), args.budget_steps, args.cap_tower)


# ---------------------------------------------------------------------------
# mc / oracle / qe


def cmd_mc(args) -> int:
    man = _manifest(args, "mc")
    A = _load_structure(args.structure, man)
    phi = _load_formula(args.formula, structure_signature(A), man)
    engines = ("oracle", "qe", "selector") if args.engine == "all" else (args.engine,)
    verdicts = {}
    for name in engines:
        t0 = time.time()
        budget = Budget(args.budget_steps)
        if name == "oracle":
            verdicts[name] = oracle.eval_formula(A, phi, budget=budget)
        elif name == "qe":
            verdicts[name] = qe_engine.model_check_qe(A, phi, budget=budget)
        elif name == "selector":
            verdicts[name] = qe_engine.model_check_selector(A, phi, budget=budget)
        else:
            raise InputError(f"unknown engine {name!r}")
        man.timings[name] = time.time() - t0
        man.verdicts[name] = str(verdicts[name]).lower()
    agree = len(set(verdicts.values())) == 1
    man.verdicts["agreement"] = "yes" if agree else "NO"
    man.emit()
    return EXIT_OK if agree else EXIT_FAIL


def cmd_oracle(args) -> int:
    man = _manifest(args, "oracle")
    A = _load_structure(args.structure, man)
    phi = _load_formula(args.formula, structure_signature(A), man)
    t0 = time.time()
    v = oracle.eval_formula(A, phi, budget=Budget(args.budget_steps))
    man.timings["oracle"] = time.time() - t0
    man.verdicts["oracle"] = str(v).lower()
    man.emit()
    return EXIT_OK


def cmd_qe(args) -> int:
    man = _manifest(args, "qe")
    A = _load_structure(args.structure, man)
    phi = _load_formula(args.formula, structure_signature(A), man)
    t0 = time.time()
    res = qe_engine.full_qe(phi, A, budget=Budget(args.budget_steps))
    man.timings["qe"] = time.time() - t0
    man.verdicts["formula-size"] = str(formula_size(res.formula))
    man.verdicts["unary-predicates"] = str(len(res.structure.relations))
    from .logic import free_vars

    if not free_vars(phi):
        got = oracle.eval_formula(res.structure, res.formula)
        ref = oracle.eval_formula(A, phi)
        man.verdicts["verdict"] = str(got).lower()
        man.verdicts["oracle-agreement"] = "yes" if got == ref else "NO"
        man.emit()
        return EXIT_OK if got == ref else EXIT_FAIL
    man.emit()
    return EXIT_OK


# ---------------------------------------------------------------------------
# rank / game


def cmd_rank(args) -> int:
    man = _manifest(args, "rank")
    text = _read(args.graph)
    man.digests[os.path.basename(args.graph)] = _digest(text)
    G = parse_graph(text)
    t0 = time.time()
    rank = splitter.game_rank_exact(
        G, args.r, args.m, args.cap, budget=Budget(args.budget_steps)
    )
    man.timings["rank"] = time.time() - t0
    man.verdicts["game-rank"] = str(rank) + ("+" if rank > args.cap else "")
    man.emit()
    return EXIT_OK


def cmd_game(args) -> int:
    man = _manifest(args, "game")
    text = _read(args.graph)
    man.digests[os.path.basename(args.graph)] = _digest(text)
    G = parse_graph(text)
    strat = splitter.splitter_strategy_lemma_win(args.d, args.r, args.k)
    m = splitter.splitter_batch_bound(args.d, args.r, args.k)
    t0 = time.time()
    ok, bad = splitter.verify_splitter_strategy(G, args.r, m, strat, args.d)
    man.timings["game"] = time.time() - t0
    man.verdicts["batch-bound"] = str(m)
    man.verdicts["splitter-wins"] = "yes" if ok else "NO"
    if not ok:
        man.verdicts["counterexample-rounds"] = str(len(bad))
    man.emit()
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# encode


def cmd_encode(args) -> int:
    man = _manifest(args, "encode")
    text = _read(args.graph)
    man.digests[os.path.basename(args.graph)] = _digest(text)
    G = parse_graph(text)
    phi = _load_formula(args.formula, graph_signature(), man)
    t0 = time.time()
    F, psi, m = encoders.encode_graph(G, phi, args.d, cap=args.cap_tower)
    man.timings["encode"] = time.time() - t0
    os.makedirs(args.emit, exist_ok=True)
    with open(os.path.join(args.emit, "forest.txt"), "w") as fh:
        fh.write(serialize_forest(F))
    with open(os.path.join(args.emit, "formula.txt"), "w") as fh:
        fh.write(print_formula(psi) + "\n")
    man.verdicts["m"] = str(m)
    man.verdicts["forest-size"] = str(len(F.nodes))
    if args.verify:
        t0 = time.time()
        ref = oracle.eval_formula(graph_to_structure(G), phi)
        got = oracle.eval_formula(F.to_structure(), psi)
        man.timings["verify"] = time.time() - t0
        man.verdicts["graph-verdict"] = str(ref).lower()
        man.verdicts["forest-verdict"] = str(got).lower()
        man.verdicts["equivalence"] = "yes" if got == ref else "NO"
        report = os.path.join(args.emit, "report.txt")
        with open(report, "w") as fh:
            sub = RunManifest(man.command, man.seed, man.budget_steps, man.cap_tower,
                              man.digests, man.verdicts, man.timings)
            sub.emit(out=fh)
        if got != ref:
            man.emit()
            return EXIT_FAIL
    man.emit()
    return EXIT_OK


# ---------------------------------------------------------------------------
# generate


def _gen_bounded_degree(rng: random.Random, n: int, deg: int) -> Graph:
    edges = set()
    degree = {v: 0 for v in range(n)}
    attempts = 4 * n * deg
    for _ in range(attempts):
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v or degree[u] >= deg or degree[v] >= deg:
            continue
        e = (min(u, v), max(u, v))
        if e in edges:
            continue
        edges.add(e)
        degree[u] += 1
        degree[v] += 1
    return Graph(range(n), edges)


def _gen_gnp(rng: random.Random, n: int, p: float) -> Graph:
    edges = [
        (u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p
    ]
    return Graph(range(n), edges)


def cmd_generate(args) -> int:
    man = _manifest(args, "generate")
    rng = random.Random(_seed(args))
    fam = args.family
    if fam == "bounded-degree":
        out = serialize_graph(_gen_bounded_degree(rng, args.n, args.max_degree))
    elif fam == "gnp":
        if not 0 <= args.p <= 1:
            raise InputError("p must be in [0,1]")
        out = serialize_graph(_gen_gnp(rng, args.n, args.p))
    elif fam == "tdk":
        out = serialize_forest(build_tdk(args.d, args.k))
    elif fam == "subdivided-tdk":
        G, _ = subdivide_uniform(build_tdk(args.d, args.k), args.r + 1)
        out = serialize_graph(G)
    elif fam == "forest":
        out = serialize_forest(_gen_forest(rng, args.n, args.d, args.colors))
    elif fam == "trees-over-m":
        trees = encoders.enumerate_trees_over_m(args.d, args.m, cap=args.cap_tower)
        idx = rng.randrange(len(trees))
        parent: dict[int, int] = {}
        colors: dict[str, set[int]] = {}
        trees[idx].materialize(parent, colors, 0)
        out = serialize_forest(RootedForest(parent, colors))
    else:
        raise InputError(f"unknown family {fam!r}")
    man.digests["output"] = _digest(out)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    man.emit(out=sys.stderr)
    return EXIT_OK


def _gen_forest(rng: random.Random, n: int, depth: int, ncolors: int) -> RootedForest:
    parent = {}
    level = {}
    for v in range(n):
        shallow = [u for u in range(v) if level[u] < depth - 1]
        if v == 0 or not shallow or rng.random() < 0.2:
            parent[v] = v
            level[v] = 0
        else:
            p = rng.choice(shallow)
            parent[v] = p
            level[v] = level[p] + 1
    colors: dict[str, set[int]] = {f"C{i}": set() for i in range(1, ncolors + 1)}
    for v in range(n):
        if ncolors and rng.random() < 0.7:
            colors[f"C{rng.randrange(1, ncolors + 1)}"].add(v)
    return RootedForest(parent, colors)


# ---------------------------------------------------------------------------
# selftest / bench


def _selftest_suites(rng: random.Random, budget_steps: int):
    """Compact in-process battery covering each acceptance property at
    reduced scale.  Yields (name, callable) pairs; callables raise
    AssertionError on failure."""

    def three_way():
        for trial in range(8):
            n = rng.randrange(2, 7)
            G = _gen_bounded_degree(rng, n, 3)
            A = graph_to_structure(G)
            phi = _random_sentence(rng, depth=rng.randrange(1, 4))
            a = oracle.eval_formula(A, phi, budget=Budget(budget_steps))
            b = qe_engine.model_check_qe(A, phi, budget=Budget(budget_steps))
            c = qe_engine.model_check_selector(A, phi, budget=Budget(budget_steps))
            assert a == b == c, f"engines disagree on trial {trial}: {a} {b} {c}"

    def forest_exact():
        from itertools import product as iproduct

        from .forest_qe import forest_qe
        from .logic import App, Eq, Exists, Var, fand, fnot, free_vars

        # fixed counting anchor: "root has at least two children" must
        # distinguish a 2-star from a 1-star (sensitive to count trimming)
        two_kids = Exists(
            ("y", "z"),
            fand(
                Eq(App("parent", 1, Var("y")), Var("x")),
                Eq(App("parent", 1, Var("z")), Var("x")),
                fnot(Eq(Var("y"), Var("z"))),
                fnot(Eq(Var("y"), Var("x"))),
                fnot(Eq(Var("z"), Var("x"))),
            ),
        )
        for F, want in (
            (RootedForest({0: 0, 1: 0, 2: 0}), True),
            (RootedForest({0: 0, 1: 0}), False),
        ):
            res = forest_qe(two_kids, 2, F)
            got = oracle.eval_formula(res.forest.to_structure(), res.formula, {"x": 0})
            assert got == want, f"child-counting anchor wrong: got {got}, want {want}"

        for trial in range(10):
            F = _gen_forest(rng, rng.randrange(3, 10), 3, 2)
            phi = _random_forest_formula(rng)
            res = forest_qe(phi, F.depth(), F)
            fv = sorted(free_vars(phi))
            A, Ahat = F.to_structure(), res.forest.to_structure()
            for tup in iproduct(sorted(F.nodes), repeat=len(fv)):
                want = oracle.eval_formula(A, phi, dict(zip(fv, tup)))
                got = oracle.eval_formula(Ahat, res.formula, dict(zip(fv, tup)))
                assert want == got, f"forest QE mismatch on trial {trial} at {tup}"

    def game_soundness():
        d, r, k = 1, 1, 3
        strat = splitter.splitter_strategy_lemma_win(d, r, k)
        m = splitter.splitter_batch_bound(d, r, k)
        for _ in range(4):
            G = _gen_bounded_degree(rng, rng.randrange(3, 8), 2)
            ok, bad = splitter.verify_splitter_strategy(G, r, m, strat, d)
            assert ok, f"splitter strategy lost: {bad}"

    def counting_anchors():
        assert len(encoders.enumerate_trees_over_m(1, 3)) == 3
        assert len(encoders.enumerate_trees_over_m(2, 2)) == 4
        assert len(encoders.enumerate_trees_over_m(2, 3)) == 8
        assert len(encoders.enumerate_trees_over_m(3, 2)) == 16

    def coloring_verifier():
        for _ in range(4):
            G = _gen_bounded_degree(rng, rng.randrange(4, 12), 3)
            col = qe_engine.low_treedepth_coloring(G, 2)
            assert qe_engine.verify_ltd_coloring(G, col, 2)

    return [
        ("three-way-agreement", three_way),
        ("forest-qe-exactness", forest_exact),
        ("splitter-soundness", game_soundness),
        ("counting-anchors", counting_anchors),
        ("coloring-verifier", coloring_verifier),
    ]


def _random_sentence(rng: random.Random, depth: int):
    from .logic import Atom, Eq, Exists, Forall, Var, f_or, fand, fnot

    names = [f"v{i}" for i in range(depth)]

    def body(i: int, avail):
        if i == depth:
            lits = []
            for _ in range(rng.randrange(1, 4)):
                a, b = rng.choice(avail), rng.choice(avail)
                lit = Atom("E", (Var(a), Var(b))) if rng.random() < 0.7 else Eq(Var(a), Var(b))
                if rng.random() < 0.5:
                    lit = fnot(lit)
                lits.append(lit)
            return fand(*lits) if rng.random() < 0.5 else f_or(*lits)
        q = Exists if rng.random() < 0.5 else Forall
        return q((names[i],), body(i + 1, avail + [names[i]]))

    if depth < 1:
        raise InputError("depth must be at least 1")
    return body(0, [])


def _random_forest_formula(rng: random.Random):
    from .logic import App, Atom, Eq, Exists, Var, fand, fnot

    x = Var("x")
    opts = [
        Exists(("y",), fand(Eq(App("parent", 1, Var("y")), x), fnot(Eq(Var("y"), x)))),
        Atom("C1", (x,)),
        fnot(Atom("C2", (x,))),
        Eq(App("parent", 1, x), x),
    ]
    return rng.choice(opts)


def cmd_selftest(args) -> int:
    man = _manifest(args, "selftest")
    rng = random.Random(_seed(args))
    failures = 0
    for name, fn in _selftest_suites(rng, args.budget_steps):
        t0 = time.time()
        try:
            fn()
            man.verdicts[name] = "pass"
        except AssertionError as exc:
            man.verdicts[name] = f"FAIL ({exc})"
            failures += 1
        except Exception as exc:  # noqa: BLE001 -- any escape is a failure
            man.verdicts[name] = f"FAIL ({type(exc).__name__}: {exc})"
            failures += 1
        man.timings[name] = time.time() - t0
    man.emit()
    return EXIT_OK if failures == 0 else EXIT_FAIL


def cmd_bench(args) -> int:
    man = _manifest(args, "bench")
    rng = random.Random(_seed(args))
    sizes = [4, 6, 8]
    for n in sizes:
        G = _gen_bounded_degree(rng, n, 3)
        A = graph_to_structure(G)
        phi = _random_sentence(rng, 2)
        for name, fn in (
            ("oracle", lambda: oracle.eval_formula(A, phi)),
            ("qe", lambda: qe_engine.model_check_qe(A, phi)),
            ("selector", lambda: qe_engine.model_check_selector(A, phi)),
        ):
            t0 = time.time()
            fn()
            man.timings[f"{name}-n{n}"] = time.time() - t0
    man.emit()
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="sparsefo")
    sub = top.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("mc", help="model-check a formula on a structure")
    p.add_argument("--structure", required=True)
    p.add_argument("--formula", required=True, help="text or @file")
    p.add_argument("--engine", choices=("oracle", "qe", "selector", "all"), default="all")
    _common_flags(p)
    p.set_defaults(fn=cmd_mc)

    p = sub.add_parser("oracle", help="brute-force evaluation only")
    p.add_argument("--structure", required=True)
    p.add_argument("--formula", required=True)
    _common_flags(p)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("qe", help="run quantifier elimination and report sizes")
    p.add_argument("--structure", required=True)
    p.add_argument("--formula", required=True)
    _common_flags(p)
    p.set_defaults(fn=cmd_qe)

    p = sub.add_parser("rank", help="exact batched game rank of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--cap", type=int, default=6)
    _common_flags(p)
    p.set_defaults(fn=cmd_rank)

    p = sub.add_parser("game", help="verify the constructive splitter strategy")
    p.add_argument("--graph", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    _common_flags(p)
    p.set_defaults(fn=cmd_game)

    p = sub.add_parser("encode", help="encode a graph+sentence as a colored forest")
    p.add_argument("--graph", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--emit", required=True, help="output directory")
    p.add_argument("--verify", action="store_true", help="oracle-check the equivalence")
    _common_flags(p)
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("generate", help="write a deterministic instance")
    p.add_argument(
        "--family",
        required=True,
        choices=("bounded-degree", "gnp", "tdk", "subdivided-tdk", "forest", "trees-over-m"),
    )
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--p", type=float, default=0.3)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--max-degree", type=int, default=3)
    p.add_argument("--colors", type=int, default=2)
    p.add_argument("--out", default=None)
    _common_flags(p)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("selftest", help="run the reduced acceptance battery")
    _common_flags(p)
    p.set_defaults(fn=cmd_selftest)

    p = sub.add_parser("bench", help="engine timing comparison on generated instances")
    _common_flags(p)
    p.set_defaults(fn=cmd_bench)

    return top


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.fn(args)
    except (InputError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
