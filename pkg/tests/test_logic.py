import random

import pytest

from conftest import all_graphs_upto, colored_structure, gnp_graph, path_graph
from sparsefo import oracle
from sparsefo.errors import InputError
from sparsefo.logic import (
    And,
    App,
    Atom,
    Eq,
    Exists,
    Forall,
    Not,
    Or,
    Var,
    alternation_rank,
    apply_interpretation,
    ball_minus_interpretation,
    ball_star_interpretation,
    batched_qrank,
    f_or,
    fand,
    fnot,
    free_vars,
    graph_signature,
    nnf,
    parse_formula,
    print_formula,
    quantifier_rank,
    rewrite_under_interpretation,
    to_bsigma,
)
from sparsefo.structures import graph_to_structure

SIG = graph_signature(colors=("C1", "C2"))


def _random_sentence(rng, depth, colored=False):
    def body(i, avail):
        if i == 0:
            lits = []
            for _ in range(rng.randrange(1, 4)):
                a, b = rng.choice(avail), rng.choice(avail)
                r = rng.random()
                if r < 0.5:
                    lit = Atom("E", (Var(a), Var(b)))
                elif colored and r < 0.75:
                    lit = Atom(f"C{rng.randrange(1, 3)}", (Var(a),))
                else:
                    lit = Eq(Var(a), Var(b))
                if rng.random() < 0.5:
                    lit = fnot(lit)
                lits.append(lit)
            return fand(*lits) if rng.random() < 0.5 else f_or(*lits)
        v = f"v{i}"
        q = Exists if rng.random() < 0.5 else Forall
        return q((v,), body(i - 1, avail + [v]))

    return body(depth, [])


class TestParse:
    def test_exists_atom(self):
        f = parse_formula("(exists (x) (E x y))", SIG)
        assert isinstance(f, Exists) and free_vars(f) == {"y"}

    def test_closed_false(self):
        f = parse_formula("(forall (x) (not (= x x)))", SIG)
        A = graph_to_structure(path_graph(2))
        assert oracle.eval_formula(A, f) is False

    def test_function_term(self):
        sig = graph_signature()
        from sparsefo.logic import forest_signature

        f = parse_formula("(exists (x) (C1 (parent^ 2 x)))", forest_signature(colors=("C1",)))
        assert isinstance(f, Exists)
        atom = f.body
        assert isinstance(atom, Atom) and isinstance(atom.args[0], App)
        assert atom.args[0].power == 2

    def test_syntax_error_position(self):
        with pytest.raises(InputError, match="position"):
            parse_formula("(exists (x) (E x", SIG)

    def test_unknown_symbol(self):
        with pytest.raises(InputError):
            parse_formula("(Q x)", SIG)

    def test_round_trip(self):
        rng = random.Random(4)
        for _ in range(20):
            f = _random_sentence(rng, rng.randrange(1, 4), colored=True)
            text = print_formula(f)
            assert print_formula(parse_formula(text, SIG)) == text


class TestNnf:
    def test_pushes_through_quantifier(self):
        f = fnot(Exists(("x",), Atom("E", (Var("x"), Var("x")))))
        g = nnf(f)
        assert isinstance(g, Forall) and isinstance(g.body, Not)

    def test_atom_unchanged(self):
        a = Atom("E", (Var("x"), Var("y")))
        assert nnf(a) == a

    def test_de_morgan(self):
        f = fnot(fand(Atom("C1", (Var("x"),)), fnot(Atom("C2", (Var("x"),)))))
        g = nnf(f)
        assert isinstance(g, Or)

    def test_oracle_equivalent(self):
        rng = random.Random(7)
        for _ in range(25):
            A = colored_structure(rng, rng.randrange(2, 6), 0.4, 2)
            f = _random_sentence(rng, rng.randrange(1, 4), colored=True)
            assert oracle.eval_formula(A, f) == oracle.eval_formula(A, nnf(f))


class TestRanks:
    def test_single_block_no_alternation(self):
        f = Exists(("x", "y"), Atom("E", (Var("x"), Var("y"))))
        assert alternation_rank(f) == 0

    def test_three_blocks(self):
        f = Exists(("x",), Forall(("y",), Exists(("z",), Eq(Var("x"), Var("z")))))
        assert alternation_rank(f) == 2

    def test_negation_counts_after_nnf(self):
        f = fnot(Exists(("x",), Forall(("y",), Atom("E", (Var("x"), Var("y"))))))
        assert alternation_rank(f) == 1

    def test_nnf_preserves_alternation_rank(self):
        rng = random.Random(9)
        for _ in range(25):
            f = _random_sentence(rng, rng.randrange(1, 4))
            assert alternation_rank(nnf(f)) == alternation_rank(f)

    def test_quantifier_free(self):
        a = Eq(Var("x"), Var("x"))
        assert quantifier_rank(a) == 0 and batched_qrank(a, 2) == 0

    def test_two_batches(self):
        f = Exists(("x1", "x2"), Forall(("y",), Eq(Var("x1"), Var("y"))))
        assert batched_qrank(f, 2) == 2

    def test_block_too_large(self):
        f = Exists(("x1", "x2", "x3"), Eq(Var("x1"), Var("x2")))
        assert batched_qrank(f, 2) is None
        assert batched_qrank(f, 3) == 1


class TestToBsigma:
    def test_union_of_existentials(self):
        f = f_or(
            Exists(("x",), Atom("E", (Var("x"), Var("x")))),
            Exists(("y",), fnot(Eq(Var("y"), Var("y")))),
        )
        g = to_bsigma(f, 1)
        assert alternation_rank(g) == 0

    def test_oracle_equivalent_sweep(self):
        rng = random.Random(13)
        for _ in range(50):
            A = colored_structure(rng, rng.randrange(2, 7), 0.4, 2)
            f = _random_sentence(rng, rng.randrange(1, 4), colored=True)
            q = alternation_rank(f) + 1
            g = to_bsigma(f, q)
            assert oracle.eval_formula(A, f) == oracle.eval_formula(A, g)


class TestInterpretations:
    def test_ball_star_isolates(self):
        from sparsefo.structures import ball as ball_set
        from sparsefo.structures import isolate

        rng = random.Random(17)
        interp = ball_star_interpretation(1, 1)
        for _ in range(10):
            G = gnp_graph(rng, 6, 0.4)
            A = graph_to_structure(G)
            v, u = rng.randrange(6), rng.randrange(6)
            got = apply_interpretation(interp, A, (v, u))
            want = isolate(G.induced(ball_set(G, v, 1)), {u} & ball_set(G, v, 1))
            assert set(got.universe) == set(want.vertices)
            assert got.relations["E"][1] == {(a, b) for a, b in want.edges} | {
                (b, a) for a, b in want.edges
            }

    def test_ball_minus_path_center(self):
        A = graph_to_structure(path_graph(5))
        interp = ball_minus_interpretation(1, 0)
        got = apply_interpretation(interp, A, (2,))
        assert set(got.universe) == {1, 2, 3}

    def test_empty_domain(self):
        A = graph_to_structure(path_graph(3))
        interp = ball_minus_interpretation(0, 1)
        got = apply_interpretation(interp, A, (1, 1))
        assert not got.universe

    def test_rewrite_equivalence_exhaustive_small(self):
        import itertools

        sig = graph_signature()
        phis = [
            parse_formula("(exists (x) (exists (y) (and (E x y) (not (= x y)))))", sig),
            parse_formula("(forall (x) (exists (y) (E x y)))", sig),
        ]
        interps = [ball_minus_interpretation(1, 1), ball_star_interpretation(1, 1)]
        for G in all_graphs_upto(4):
            A = graph_to_structure(G)
            for interp in interps:
                for params in itertools.product(sorted(G.vertices), repeat=len(interp.params)):
                    I = apply_interpretation(interp, A, params)
                    val = dict(zip(interp.params, params))
                    for phi in phis:
                        hat = rewrite_under_interpretation(phi, interp)
                        assert oracle.eval_formula(I, phi) == oracle.eval_formula(A, hat, val)

    def test_rewrite_requires_sentence(self):
        interp = ball_minus_interpretation(1, 0)
        with pytest.raises(InputError):
            rewrite_under_interpretation(Atom("E", (Var("x"), Var("z"))), interp)
