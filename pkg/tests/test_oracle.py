import itertools
import random

import pytest

from conftest import colored_structure, complete_graph, cycle_graph, path_graph
from sparsefo import oracle
from sparsefo.errors import Budget, BudgetExceededError
from sparsefo.logic import (
    Atom,
    Eq,
    Exists,
    Forall,
    Var,
    fand,
    fnot,
    graph_signature,
    parse_formula,
)
from sparsefo.structures import RootedForest, graph_to_structure

SIG = graph_signature()
HAS_EDGE = parse_formula("(exists (x) (exists (y) (and (E x y) (not (= x y)))))", SIG)
DOMINATED = parse_formula("(exists (x) (forall (y) (or (= x y) (E x y))))", SIG)


class TestEval:
    def test_edge_sentence(self):
        assert oracle.eval_formula(graph_to_structure(complete_graph(2)), HAS_EDGE) is True
        assert oracle.eval_formula(graph_to_structure(path_graph(1)), HAS_EDGE) is False

    def test_dominating_vertex(self):
        assert oracle.eval_formula(graph_to_structure(cycle_graph(5)), DOMINATED) is False
        assert oracle.eval_formula(graph_to_structure(complete_graph(3)), DOMINATED) is True

    def test_free_variable_valuation(self):
        A = graph_to_structure(path_graph(3))
        f = Exists(("y",), Atom("E", (Var("x"), Var("y"))))
        assert oracle.eval_formula(A, f, {"x": 1}) is True

    def test_function_term_on_forest(self):
        F = RootedForest({0: 0, 1: 0, 2: 1}, colors={"C1": [2]})
        A = F.to_structure()
        sig = A.signature if hasattr(A, "signature") else None
        from sparsefo.logic import forest_signature

        f = parse_formula("(exists (x) (and (C1 x) (= (parent^ 2 x) (parent^ 2 x))))",
                          forest_signature(colors=("C1",)))
        assert oracle.eval_formula(A, f) is True

    def test_budget_exceeded(self):
        A = graph_to_structure(complete_graph(8))
        f = parse_formula(
            "(forall (a) (forall (b) (forall (c) (forall (d) (E a b)))))", SIG
        )
        with pytest.raises(BudgetExceededError):
            oracle.eval_formula(A, f, budget=Budget(10))

    def test_reusable_evaluator(self):
        A = graph_to_structure(cycle_graph(6))
        ev = oracle.evaluator(A)
        assert ev.eval(HAS_EDGE, {}) is True
        assert ev.eval(DOMINATED, {}) is False


class TestSatisfyingTuples:
    def test_edge_pairs(self):
        A = graph_to_structure(path_graph(3))
        f = Atom("E", (Var("x"), Var("y")))
        got = oracle.satisfying_tuples(A, f, ("x", "y"))
        assert got.variables == ("x", "y")
        assert got.tuples == {(0, 1), (1, 0), (1, 2), (2, 1)}

    def test_complementation(self):
        rng = random.Random(3)
        for _ in range(15):
            A = colored_structure(rng, rng.randrange(2, 6), 0.4, 2)
            f = Exists(("z",), fand(Atom("E", (Var("x"), Var("z"))),
                                    Atom("C1", (Var("z"),))))
            pos = oracle.satisfying_tuples(A, f, ("x",)).tuples
            neg = oracle.satisfying_tuples(A, fnot(f), ("x",)).tuples
            assert pos | neg == {(a,) for a in A.universe}
            assert not pos & neg

    def test_sentence_gives_empty_tuple(self):
        A = graph_to_structure(complete_graph(2))
        assert oracle.satisfying_tuples(A, HAS_EDGE, ()).tuples == {()}


class TestQTypePartition:
    def test_vertex_transitive_single_block(self):
        A = graph_to_structure(cycle_graph(6))
        blocks = oracle.q_type_partition(A, q=2)
        assert len(blocks) == 1

    def test_path_endpoints_vs_middle(self):
        A = graph_to_structure(path_graph(3))
        blocks = oracle.q_type_partition(A, q=1)
        assert sorted(sorted(b) for b in blocks) == [[0, 2], [1]]

    def test_atomic_types_at_zero(self):
        A = colored_structure(random.Random(5), 5, 0.5, 2)
        blocks = oracle.q_type_partition(A, q=0)
        # q=0 distinguishes vertices only by loops and colors
        for b in blocks:
            reference = next(iter(b))
            for v in b:
                for name, (ar, tuples) in A.relations.items():
                    if ar == 1:
                        assert ((v,) in tuples) == ((reference,) in tuples)

    def test_refinement_chain(self):
        rng = random.Random(11)
        for _ in range(10):
            A = colored_structure(rng, rng.randrange(3, 7), 0.4, 2)
            prev = [set(b) for b in oracle.q_type_partition(A, q=0)]
            for q in (1, 2):
                cur = [set(b) for b in oracle.q_type_partition(A, q=q)]
                for b in cur:
                    assert any(b <= p for p in prev)
                prev = cur


class TestSubtreeIso:
    def test_path_vs_star(self):
        F1 = RootedForest({0: 0, 1: 0, 2: 1})           # path of depth 2
        F2 = RootedForest({0: 0, 1: 0, 2: 0})           # star of depth 1
        A1, A2 = F1.to_structure(), F2.to_structure()
        assert oracle.subtree_iso(A1, 0, A1, 0) is True
        assert oracle.subtree_iso(A1, 0, A2, 0) is False
        assert oracle.subtree_iso(A1, 2, A2, 2) is True  # both leaves

    def test_colors_matter(self):
        F1 = RootedForest({0: 0, 1: 0}, colors={"C1": [1]})
        F2 = RootedForest({0: 0, 1: 0}, colors={"C1": []})
        assert oracle.subtree_iso(F1.to_structure(), 0, F2.to_structure(), 0) is False

    def test_equivalence_relation(self):
        rng = random.Random(19)
        from conftest import random_forest

        F = random_forest(rng, 12, 3)
        A = F.to_structure()
        verts = sorted(F.parent)
        iso = {(a, b) for a in verts for b in verts if oracle.subtree_iso(A, a, A, b)}
        for a in verts:
            assert (a, a) in iso
        for a, b in iso:
            assert (b, a) in iso
        for a, b in iso:
            for c in verts:
                if (b, c) in iso:
                    assert (a, c) in iso
