import random

import pytest

from soskit.graphs import (
    Graph,
    brute_force_alpha,
    brute_force_alpha_chi,
    brute_force_chi,
    hamming_graph,
    lovasz_theta,
    lovasz_theta_prime,
)


class TestGraph:
    def test_parse_edge_list(self):
        g = Graph.parse_edge_list("0 1\n1 2\n\n# comment\n2 0\n")
        assert g.n == 3 and len(g.edges) == 3

    def test_complement(self):
        g = Graph.cycle(5)
        assert len(g.complement().edges) == 5
        assert g.complement().complement() == g

    def test_rejects_loops(self):
        with pytest.raises(ValueError):
            Graph.from_edges(2, [(0, 0)])


class TestHamming:
    def test_2_2_2_is_four_cycle(self):
        g = hamming_graph(2, 2, 2)
        # words 00,01,10,11: edges exactly between distance-1 pairs
        assert g.n == 4
        assert g.edges == frozenset({(0, 1), (0, 2), (1, 3), (2, 3)})

    def test_d1_empty(self):
        assert len(hamming_graph(2, 3, 1).edges) == 0

    def test_cube(self):
        g = hamming_graph(2, 3, 2)
        assert g.n == 8 and len(g.edges) == 12  # 8*3/2 distance-1 pairs

    def test_size_cap(self):
        with pytest.raises(ValueError):
            hamming_graph(2, 13, 2)


class TestBruteForce:
    def test_c5(self):
        g = Graph.cycle(5)
        assert brute_force_alpha(g) == 2
        assert brute_force_chi(g.complement()) == 3

    def test_complete(self):
        for n in (2, 4, 6):
            alpha, chi = brute_force_alpha_chi(Graph.complete(n))
            assert alpha == 1 and chi == n
            assert brute_force_chi(Graph.empty(n)) == 1

    def test_empty(self):
        assert brute_force_alpha(Graph.empty(7)) == 7

    def test_cube_code_size(self):
        # binary codes of length 3, min distance 2: A_2(3,2) = 4
        assert brute_force_alpha(hamming_graph(2, 3, 2)) == 4


class TestTheta:
    def test_empty_and_complete(self):
        assert abs(lovasz_theta(Graph.empty(4)) - 4.0) < 1e-6
        assert abs(lovasz_theta(Graph.complete(4)) - 1.0) < 1e-6

    def test_c5_between_alpha_and_chi(self):
        g = Graph.cycle(5)
        t = lovasz_theta(g)
        assert 2 - 1e-6 <= t <= 3 + 1e-6
        assert abs(t - 5 ** 0.5) < 1e-6

    def test_disjoint_union_additive(self):
        rng = random.Random(4)
        for _ in range(3):
            def rand_graph(n):
                edges = [(u, v) for u in range(n) for v in range(u + 1, n)
                         if rng.random() < 0.5]
                return Graph.from_edges(n, edges)
            g, h = rand_graph(3), rand_graph(4)
            whole = lovasz_theta(g.disjoint_union(h))
            assert abs(whole - (lovasz_theta(g) + lovasz_theta(h))) < 1e-5


class TestThetaPrime:
    def test_k3(self):
        assert abs(lovasz_theta_prime(Graph.complete(3)) - 1.0) < 1e-6

    def test_empty(self):
        assert abs(lovasz_theta_prime(Graph.empty(5)) - 5.0) < 1e-6

    def test_hamming_squeeze(self):
        g = hamming_graph(2, 3, 2)
        tp = lovasz_theta_prime(g)
        t = lovasz_theta(g)
        assert tp >= brute_force_alpha(g) - 1e-6  # alpha = A_2(3,2) = 4
        assert tp <= t + 1e-6


class TestSandwich:
    def test_corpus(self, graphs_small):
        for name, g in graphs_small:
            alpha = brute_force_alpha(g)
            chi_bar = brute_force_chi(g.complement())
            t = lovasz_theta(g)
            tp = lovasz_theta_prime(g)
            assert alpha - 1e-6 <= tp <= t + 1e-6 <= chi_bar + 2e-6, name
