import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphbandit.graph import (
    FeedbackGraph,
    GraphError,
    Observability,
    classify,
    format_graph,
    greedy_weak_dominating_set,
    independence_number_exact,
    is_weak_dominating_set,
    ix_quantity,
    observation_probabilities,
    observation_probability,
    parse_graph,
    read_graph_sequence,
    self_loop_set,
    self_loop_subgraph,
    weak_domination_number_exact,
)

from conftest import brute_alpha, brute_classify, brute_weak_domination, distributions, graphs


def nin(*sets):
    return FeedbackGraph(len(sets), tuple(frozenset(s) for s in sets))


SELF3 = nin({0}, {1}, {2})
LOOPLESS3 = nin({1, 2}, {0, 2}, {0, 1})
STAR = nin({0}, {0}, {0}, {0}, {0})
TWO_HUBS = nin({0}, {1}, {0}, {0}, {0}, {1}, {1}, {1})


class TestConstruction:
    def test_rejects_out_of_range_neighbour(self):
        with pytest.raises(GraphError):
            nin({0, 3}, {1})

    def test_rejects_wrong_length(self):
        with pytest.raises(GraphError):
            FeedbackGraph(3, (frozenset({0}),))

    def test_rejects_empty(self):
        with pytest.raises(GraphError):
            FeedbackGraph(0, ())

    def test_from_edges_matches_in_neighbours(self):
        g = FeedbackGraph.from_edges(3, [(0, 0), (0, 1), (2, 1)])
        assert g.in_neighbors == (frozenset({0}), frozenset({0, 2}), frozenset())
        assert g.has_edge(2, 1) and not g.has_edge(1, 2)

    def test_observer_matrix_is_read_only(self):
        with pytest.raises(ValueError):
            SELF3.observer_matrix[0, 1] = 1.0


class TestClassify:
    def test_self_aware(self):
        assert classify(SELF3) is Observability.STRONGLY_OBSERVABLE

    def test_loopless_complete(self):
        assert classify(LOOPLESS3) is Observability.STRONGLY_OBSERVABLE

    def test_weak(self):
        assert classify(nin({1}, {1}, {2})) is Observability.WEAKLY_OBSERVABLE

    def test_two_node_edge_case_is_strong(self):
        # N_in(0) = {1} is exactly the complement of 0
        assert classify(nin({1}, {1})) is Observability.STRONGLY_OBSERVABLE

    def test_unobservable(self):
        assert classify(nin(set(), {1})) is Observability.UNOBSERVABLE

    @given(graphs())
    def test_matches_definition(self, g):
        assert classify(g).value.split("_")[0] == {"strong": "strongly", "weak": "weakly",
                                                   "unobservable": "unobservable"}[brute_classify(g)]


class TestSelfLoopSet:
    def test_examples(self):
        assert self_loop_set(nin({0}, {1}, {2}, {3})) == {0, 1, 2, 3}
        assert self_loop_set(LOOPLESS3) == set()
        assert self_loop_set(nin({0}, {0}, {2})) == {0, 2}


class TestObservationProbability:
    def test_self_loop_only(self):
        assert observation_probability(SELF3, [0.3, 0.4, 0.3], 0) == pytest.approx(0.3)

    def test_complement_mass(self):
        assert observation_probability(LOOPLESS3, [0.3, 0.4, 0.3], 0) == pytest.approx(0.7)

    def test_direct_sum(self):
        g = nin({0}, {1}, {0, 1})
        assert observation_probability(g, [0.2, 0.5, 0.3], 2) == pytest.approx(0.7)

    def test_bad_index(self):
        with pytest.raises(IndexError):
            observation_probability(SELF3, [1 / 3] * 3, 3)

    @given(graphs().flatmap(lambda g: st.tuples(st.just(g), distributions(g.num_nodes))))
    def test_vector_agrees_with_scalar_and_is_a_probability(self, pair):
        g, dist = pair
        w = observation_probabilities(g, dist)
        for i in range(g.num_nodes):
            assert w[i] == pytest.approx(observation_probability(g, dist, i), abs=1e-12)
            assert 0.0 <= w[i] <= 1.0


class TestIxQuantity:
    def test_examples(self):
        assert ix_quantity(nin({0}, {1}), np.array([0.5, 0.5]), 0.5) == pytest.approx(1.0)
        assert ix_quantity(LOOPLESS3, np.full(3, 1 / 3), 0.1) == 0.0
        assert ix_quantity(nin({0}, {1}, {2}, {3}), np.full(4, 0.25), 0.0) == pytest.approx(4.0)

    @settings(max_examples=200)
    @given(graphs(self_aware=True).flatmap(
        lambda g: st.tuples(st.just(g), distributions(g.num_nodes, allow_zeros=False),
                            st.sampled_from([0.01, 0.05, 0.25, 0.5]))))
    def test_graph_lemma_bound(self, triple):
        g, dist, gamma = triple
        k = g.num_nodes
        a = brute_alpha(g)
        bound = 2 * a * math.log(1 + (math.ceil(k * k / gamma) + k) / a) + 2
        assert ix_quantity(g, dist, gamma) <= bound

    @given(graphs(self_aware=True).flatmap(
        lambda g: st.tuples(st.just(g), distributions(g.num_nodes, allow_zeros=False))))
    def test_nonincreasing_in_gamma(self, pair):
        g, dist = pair
        vals = [ix_quantity(g, dist, gm) for gm in (0.0, 0.1, 0.5, 1.0)]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


class TestIndependenceNumber:
    def test_examples(self):
        assert independence_number_exact(nin({0}, {1}, {2}, {3})) == 4
        assert independence_number_exact(nin(*[set(range(5))] * 5)) == 1
        assert independence_number_exact(nin({0, 1}, {0, 1}, {2, 3}, {2, 3})) == 2

    def test_cap(self):
        g = nin(*[{i} for i in range(6)])
        with pytest.raises(GraphError):
            independence_number_exact(g, max_nodes=5)

    def test_largest_allowed_size_is_fast(self):
        rng = np.random.default_rng(3)
        adj = rng.random((24, 24)) < 0.3
        g = FeedbackGraph(24, tuple(frozenset(np.flatnonzero(adj[:, i]).tolist()) for i in range(24)))
        assert 1 <= independence_number_exact(g) <= 24

    @settings(max_examples=300)
    @given(graphs(max_nodes=9))
    def test_matches_brute_force(self, g):
        assert independence_number_exact(g) == brute_alpha(g)


class TestDomination:
    def test_examples(self):
        assert greedy_weak_dominating_set(SELF3) == frozenset()
        assert greedy_weak_dominating_set(STAR) == {0}
        assert greedy_weak_dominating_set(TWO_HUBS) == {0, 1}
        assert weak_domination_number_exact(SELF3) == 0
        assert weak_domination_number_exact(STAR) == 1
        assert weak_domination_number_exact(TWO_HUBS) == 2

    def test_unobservable_rejected(self):
        with pytest.raises(GraphError):
            greedy_weak_dominating_set(nin(set(), {1}))

    @settings(max_examples=300)
    @given(graphs(max_nodes=8))
    def test_greedy_valid_and_within_log_factor(self, g):
        if classify(g) is Observability.UNOBSERVABLE:
            return
        dom = greedy_weak_dominating_set(g)
        assert is_weak_dominating_set(g, dom)
        d = weak_domination_number_exact(g)
        assert d == brute_weak_domination(g)
        assert len(dom) <= d * (1 + math.log(g.num_nodes)) + 1e-9


class TestSubgraphAndParsing:
    def test_self_loop_subgraph_relabels(self):
        g = nin({0, 2}, {0}, {2, 1})
        sub, nodes = self_loop_subgraph(g)
        assert nodes == [0, 2]
        assert sub.in_neighbors == (frozenset({0, 1}), frozenset({1}))
        assert self_loop_subgraph(LOOPLESS3) == (None, [])

    def test_parse_round_trip(self):
        g = parse_graph(" K=3 ; 0:0,1; 1:1 ;2:0,2 ")
        assert g.in_neighbors == (frozenset({0, 1}), frozenset({1}), frozenset({0, 2}))
        assert parse_graph(format_graph(g)) == g

    def test_parse_missing_node_is_empty(self):
        assert parse_graph("K=2; 1:1").in_neighbors[0] == frozenset()

    @pytest.mark.parametrize("text", ["0:0", "K=2; 0:0; 0:1", "K=2; 2:0", "K=2; 0:x"])
    def test_parse_errors(self, text):
        with pytest.raises(GraphError):
            parse_graph(text)

    def test_read_sequence(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("# two graphs\nK=2; 0:0; 1:1\n\nK=2; 0:1; 1:0  # loopless\n")
        seq = read_graph_sequence(p)
        assert len(seq) == 2 and classify(seq[1]) is Observability.STRONGLY_OBSERVABLE
        bad = tmp_path / "bad.txt"
        bad.write_text("K=1; 0:0\nK=1; 3:0\n")
        with pytest.raises(GraphError, match="bad.txt:2"):
            read_graph_sequence(bad)
