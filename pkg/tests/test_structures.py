import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complete_graph, cycle_graph, gnp_graph, path_graph, star_graph
from sparsefo.canon import canonical_code
from sparsefo.errors import InputError
from sparsefo.structures import (
    Graph,
    RelationalStructure,
    RootedForest,
    ball,
    build_fdk,
    build_tdk,
    gaifman_graph,
    graph_to_structure,
    isolate,
    parse_forest,
    parse_graph,
    parse_structure,
    radius,
    serialize_forest,
    serialize_graph,
    serialize_structure,
    subdivide,
    subdivide_per_level,
    subdivide_uniform,
)


class TestBall:
    def test_path_radius_one(self):
        G = path_graph(3)
        assert ball(G, 1, 1) == {0, 1, 2}

    def test_zero_radius(self):
        G = cycle_graph(5)
        assert ball(G, 3, 0) == {3}

    def test_cycle_radius_two(self):
        G = cycle_graph(6)
        assert ball(G, 0, 2) == {4, 5, 0, 1, 2}

    def test_unknown_vertex(self):
        with pytest.raises(InputError):
            ball(path_graph(2), 17, 1)

    @given(st.integers(0, 4), st.integers(0, 6), st.data())
    @settings(max_examples=40, deadline=None)
    def test_monotone_in_radius(self, r, seed, data):
        rng = random.Random(seed)
        G = gnp_graph(rng, 7, 0.3)
        v = data.draw(st.sampled_from(sorted(G.vertices)))
        assert ball(G, v, r) <= ball(G, v, r + 1)


class TestRadius:
    def test_single_vertex(self):
        assert radius(Graph([0], [])) == 0

    def test_disconnected_is_infinite(self):
        assert radius(Graph([0, 1], [])) == math.inf

    def test_path_five(self):
        assert radius(path_graph(5)) == 2


class TestIsolate:
    def test_empty_set_is_identity(self):
        G = cycle_graph(4)
        assert isolate(G, ()).edges == G.edges

    def test_triangle_one_vertex(self):
        H = isolate(complete_graph(3), {0})
        assert H.edges == frozenset({(1, 2)})

    def test_star_center(self):
        H = isolate(star_graph(3), {0})
        assert not H.edges and len(H.vertices) == 4

    @given(st.integers(0, 5), st.sets(st.integers(0, 6), max_size=4))
    @settings(max_examples=30, deadline=None)
    def test_idempotent(self, seed, S):
        G = gnp_graph(random.Random(seed), 7, 0.4)
        once = isolate(G, S)
        assert isolate(once, S).edges == once.edges


class TestBuildTdk:
    def test_depth_one(self):
        assert len(build_tdk(1, 5).nodes) == 1

    def test_star(self):
        T = build_tdk(2, 3)
        assert len(T.nodes) == 4 and T.depth() == 2

    def test_depth_three(self):
        assert len(build_tdk(3, 2).nodes) == 7

    def test_closed_form(self):
        for d in range(1, 6):
            for k in range(1, 5):
                assert len(build_tdk(d, k).nodes) == sum(k**i for i in range(d))

    def test_forest_variant(self):
        F = build_fdk(2, 3)
        assert len(F.roots()) == 3 and len(F.nodes) == 3 * 4

    def test_zero_depth_rejected(self):
        with pytest.raises(InputError):
            build_tdk(0, 2)


class TestSubdivide:
    def test_all_lengths_one_isomorphic(self):
        for d, k in ((2, 2), (3, 2), (2, 3)):
            T = build_tdk(d, k)
            G, emb = subdivide_uniform(T, 1)
            H = Graph(T.nodes, ((v, T.parent[v]) for v in T.nodes if T.parent[v] != v))
            assert canonical_code(G) == canonical_code(H)

    def test_star_lengths_two_is_path(self):
        T = build_tdk(2, 2)
        G, _ = subdivide_uniform(T, 2)
        assert canonical_code(G) == canonical_code(path_graph(5))

    def test_per_level_profile(self):
        G, _ = subdivide_per_level(build_tdk(2, 3), (3,))
        assert len(G.vertices) == 10

    def test_embedding_paths_disjoint(self):
        T = build_tdk(3, 2)
        G, emb = subdivide_uniform(T, 3)
        internal: set[int] = set()
        for path in emb.paths.values():
            inner = set(path[1:-1])
            assert not inner & internal
            internal |= inner

    def test_bad_length(self):
        T = build_tdk(2, 2)
        with pytest.raises(InputError):
            subdivide(T, {(1, 0): 0})


class TestGaifman:
    def test_unary_only_edgeless(self):
        A = RelationalStructure(range(3), {"C": (1, {(0,), (2,)})}, {})
        assert not gaifman_graph(A).edges

    def test_binary_tuple(self):
        A = RelationalStructure(range(2), {"R": (2, {(0, 1)})}, {})
        assert gaifman_graph(A).edges == frozenset({(0, 1)})

    def test_ternary_tuple_triangle(self):
        A = RelationalStructure(range(3), {"R": (3, {(0, 1, 2)})}, {})
        assert gaifman_graph(A).edges == frozenset({(0, 1), (0, 2), (1, 2)})

    def test_forest_function_matches_tree(self):
        F = build_tdk(3, 2)
        A = F.to_structure()
        expect = Graph(F.nodes, ((v, F.parent[v]) for v in F.nodes if F.parent[v] != v))
        got = gaifman_graph(A)
        assert got.edges >= expect.edges


class TestFormats:
    def test_graph_round_trip(self):
        G = gnp_graph(random.Random(3), 6, 0.4)
        assert parse_graph(serialize_graph(G)).edges == G.edges

    def test_forest_round_trip(self):
        F = RootedForest({0: 0, 1: 0, 2: 1}, {"red": {2}}, {"flg": True})
        F2 = parse_forest(serialize_forest(F))
        assert F2.parent == F.parent
        assert F2.colors["red"] == F.colors["red"]
        assert F2.flags == F.flags

    def test_structure_round_trip(self):
        A = RelationalStructure(
            range(3), {"E": (2, {(0, 1), (1, 0)}), "C": (1, {(2,)})}, {"f": {0: 0, 1: 0, 2: 1}}
        )
        B = parse_structure(serialize_structure(A))
        assert B.relations == A.relations and B.functions == A.functions

    def test_bad_header(self):
        with pytest.raises(InputError):
            parse_graph("nope 3\n")
