import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from flowmetrics.families import (clique_minus_edge, complete_graph, cycle_graph, hypercube_graph,
                                  parallel_edges, random_connected_graph, random_regular_multigraph,
                                  random_tree)
from flowmetrics.graph import GraphError, WeightedGraph
from flowmetrics.sparsify import (ClosedFormMismatch, _sample_once, build_sparsifier, degree_condition_check,
                                  expander_clique_sparsifier, general_ratio_bound, gomory_hu,
                                  gomory_hu_threshold, oversampling_factor, pair_list, resistance_ratio,
                                  sampling_scores, symmetric_closed_forms, symmetric_family,
                                  symmetric_ratio_grid, union_removal_sensitivity, verify_sparsifier)

from strategies import graphs


def edge_set(g):
    return sorted((min(a, b), max(a, b), round(w, 9)) for a, b, w in g.edges)


def tree_min_cuts(tree_edges, n):
    T = nx.Graph()
    T.add_nodes_from(range(n))
    for a, b, w in tree_edges:
        T.add_edge(a, b, weight=w)
    out = {}
    for s, t in itertools.combinations(range(n), 2):
        path = nx.shortest_path(T, s, t)
        out[s, t] = min(T[u][v]["weight"] for u, v in zip(path, path[1:]))
    return out


def enum_min_cuts(g):
    out = {}
    for s, t in itertools.combinations(range(g.n), 2):
        others = [v for v in range(g.n) if v not in (s, t)]
        best = math.inf
        for k in range(len(others) + 1):
            for extra in itertools.combinations(others, k):
                S = {s, *extra}
                best = min(best, sum(w for a, b, w in g.edges if (a in S) != (b in S)))
        out[s, t] = best
    return out


# ---------------------------------------------------------------- scores

def test_scores_tree():
    g = random_tree(8, np.random.default_rng(0))
    sc = sampling_scores(g, 2, "exact-q2")
    assert np.allclose(sc.scores, 1) and sc.total == pytest.approx(7)


def test_scores_clique():
    sc = sampling_scores(complete_graph(6), 2)
    assert np.allclose(sc.scores, 2 / 6)
    assert sc.total == pytest.approx(5)


def test_scores_parallel_pair():
    assert np.allclose(sampling_scores(parallel_edges(2), 2).scores, 0.5)


@given(graphs())
def test_leverage_matches_hat_matrix(g):
    A = np.diag(g.weights) @ g.incidence().toarray()
    hat = np.diag(A @ np.linalg.pinv(A))
    sc = sampling_scores(g, 2, "exact-q2")
    assert np.allclose(sc.scores, hat, atol=1e-9)
    assert sc.total == pytest.approx(g.n - 1, abs=1e-6)


@given(graphs(), st.sampled_from([1.5, 3.0, 5.0]))
def test_lewis_weights_fixed_point(g, p):
    sc = sampling_scores(g, p, "lewis-iterative")
    q = sc.q
    A = np.diag(g.weights) @ g.incidence().toarray()
    M = A.T @ np.diag(sc.scores ** (1 - 2 / q)) @ A
    lev = np.einsum("ij,jk,ik->i", A, np.linalg.pinv(M), A)
    assert np.allclose(sc.scores, lev ** (q / 2), rtol=1e-3)
    assert sc.total == pytest.approx(g.n - 1, rel=1e-3)


def test_score_mode_errors():
    with pytest.raises(GraphError):
        sampling_scores(cycle_graph(4), 3, "exact-q2")
    with pytest.raises(GraphError):
        sampling_scores(cycle_graph(4), 3, "bogus")
    with pytest.raises(GraphError):
        sampling_scores(cycle_graph(4), "inf")


def test_oversampling_factor_branches():
    x = math.log(20 / 0.25)
    assert oversampling_factor(20, 0.25, 1.5) == pytest.approx(x * math.log(x) ** 2 / 0.25 ** 2)
    assert oversampling_factor(20, 0.25, 3.0) == pytest.approx(20 ** 0.5 * math.log(20) * math.log(4) / 0.25 ** 5)


# ---------------------------------------------------------------- Gomory-Hu

def test_gomory_hu_small_cases():
    assert {w for _, _, w in gomory_hu(complete_graph(4)).edges} == {3.0}
    assert {w for _, _, w in gomory_hu(complete_graph(3)).edges} == {2.0}
    t = random_tree(7, np.random.default_rng(2))
    assert edge_set(gomory_hu(t)) == edge_set(t)


@given(graphs(nmax=7))
def test_gomory_hu_cut_values(g):
    tree = gomory_hu(g)
    assert tree.is_tree()
    ours = tree_min_cuts(tree.edges, g.n)
    G = nx.Graph()
    for a, b, w in g.merged().edges:
        G.add_edge(a, b, capacity=w)
    ref_tree = nx.gomory_hu_tree(G)
    ref = tree_min_cuts([(a, b, d["weight"]) for a, b, d in ref_tree.edges(data=True)], g.n)
    brute = enum_min_cuts(g)
    for key in brute:
        assert ours[key] == pytest.approx(brute[key], rel=1e-12)
        assert ref[key] == pytest.approx(brute[key], rel=1e-12)


# ---------------------------------------------------------------- sparsifier

def test_tree_input_is_returned():
    t = random_tree(9, np.random.default_rng(4))
    for p in (1.5, 3.0):
        assert build_sparsifier(t, p, 0.5, seed=1).graph_after == t


def test_gomory_hu_branch():
    g = random_connected_graph(9, np.random.default_rng(8), density=0.6)
    for p in (gomory_hu_threshold(g.n, 0.25) + 1, "inf"):
        res = build_sparsifier(g, p, 0.25, seed=0)
        assert res.method == "gomory-hu" and res.edge_count == g.n - 1
    assert verify_sparsifier(g, res.graph_after, "inf").max_rel_error <= 1e-12


def test_k20_sparsifier():
    K = complete_graph(20)
    res = build_sparsifier(K, 3, 0.25, seed=7)
    assert res.graph_after.is_connected() and res.graph_after.n == 20
    assert verify_sparsifier(K, res.graph_after, 3).max_rel_error <= 0.25


def test_sparsifier_is_deterministic():
    g = random_connected_graph(10, np.random.default_rng(9), density=0.7)
    a = build_sparsifier(g, 2, 0.5, seed=3, oversample=0.2)
    b = build_sparsifier(g, 2, 0.5, seed=3, oversample=0.2)
    assert a.graph_after == b.graph_after and a.seed == b.seed


def test_sparsifier_unbiased_at_q2():
    # E[w'^2] = w^2 edge by edge, so the mean Laplacian over seeds approaches the original
    g = random_connected_graph(8, np.random.default_rng(10), density=0.8)
    acc = np.zeros((g.n, g.n))
    runs = 300
    tau = sampling_scores(g, 2).scores
    for seed in range(runs):
        h, _, _ = _sample_once(g, tau, 2.0, 2.0, np.random.default_rng(seed))
        acc += h.laplacian(h.weights ** 2)
    L = g.laplacian(g.weights ** 2)
    assert np.max(np.abs(acc / runs - L)) <= 0.1 * np.max(np.abs(L))


def test_sparsifier_errors():
    g = cycle_graph(6)
    with pytest.raises(GraphError):
        build_sparsifier(g, 4 / 3, 0.5)
    with pytest.raises(GraphError):
        build_sparsifier(g, 3, 1.5)
    with pytest.raises(GraphError, match="no connected sample"):
        build_sparsifier(g, 3, 0.5, oversample=1e-9)


def test_verify_identity_and_scaling():
    g = random_connected_graph(7, np.random.default_rng(11))
    for p in (1.5, 2, 3, "inf"):
        assert verify_sparsifier(g, g, p).max_rel_error == 0
        assert verify_sparsifier(g, g.scaled(2), p).max_rel_error == pytest.approx(0.5, rel=1e-6)


def test_pair_list():
    assert len(pair_list(10)) == 45
    assert len(pair_list(40)) == 200
    assert len(pair_list(40, 17, seed=1)) == 17
    assert len(pair_list(40, "all")) == 780


# ---------------------------------------------------------------- resistance ratio

def test_ratio_clique_and_clique_minus_edge():
    assert resistance_ratio(complete_graph(6)).ratio == pytest.approx(1.0)
    assert resistance_ratio(clique_minus_edge(5)).ratio == pytest.approx(5 / 3, abs=1e-9)


def test_ratio_cube():
    rep = resistance_ratio(hypercube_graph(3))
    assert rep.ratio >= 1 + 1 / 14


@given(graphs(nmin=3, nmax=8))
def test_ratio_general_bound(g):
    rep = resistance_ratio(g)
    assert rep.ratio >= 1 - 1e-12
    assert rep.verdict, rep.to_dict()


def test_general_ratio_bound_values():
    assert general_ratio_bound(3) == 2
    assert general_ratio_bound(5) == pytest.approx(1 + 1 / 8)


# ---------------------------------------------------------------- symmetric family

def test_symmetric_family_n5():
    rep = symmetric_family(5, 1, 1)
    assert (rep.r_st, rep.r_a, rep.r_b) == pytest.approx((2 / 3, 7 / 15, 2 / 5), abs=1e-12)
    assert 6 * rep.r_a + 3 * rep.r_b == pytest.approx(4)


def test_symmetric_family_random():
    rng = np.random.default_rng(13)
    for _ in range(50):
        n = int(rng.integers(5, 30))
        alpha, beta = np.exp(rng.uniform(-3, 3, 2))
        rep = symmetric_family(n, alpha, beta)
        assert rep.mismatch <= 1e-9
        assert rep.foster_lhs == pytest.approx(n - 1, rel=1e-9)


def test_symmetric_family_rejects_small_n():
    with pytest.raises(GraphError):
        symmetric_family(4)
    assert issubclass(ClosedFormMismatch, RuntimeError)


def test_symmetric_grid():
    assert symmetric_ratio_grid(ns=range(5, 12), ratios=np.geomspace(0.01, 100, 41))["verdict"]
    # the closed forms give (2/3, 7/15, 2/5) at n=5
    assert symmetric_closed_forms(5, 1, 1) == pytest.approx((2 / 3, 7 / 15, 2 / 5))


# ---------------------------------------------------------------- degree conditions

def test_degree_conditions_regular():
    rep = degree_condition_check(hypercube_graph(3))
    assert rep.conditions["regular"] and rep.applicable and rep.verdict


def test_degree_conditions_unit_weights():
    rep = degree_condition_check(cycle_graph(7).scaled(3.0))
    assert rep.conditions["equal_weights"] and rep.verdict


def test_degree_conditions_clique_inapplicable():
    rep = degree_condition_check(complete_graph(6))
    assert rep.complete and not rep.applicable and rep.verdict


def _regular(rng):
    while True:
        n = 2 * int(rng.integers(3, 8))
        try:
            return random_regular_multigraph(n, int(rng.integers(2, n // 2 + 1)), rng,
                                             weight=float(rng.uniform(0.5, 2)), max_tries=500)
        except GraphError:
            continue  # disconnected draw


def test_degree_conditions_corpus():
    rng = np.random.default_rng(14)
    checked = 0
    for i in range(200):
        if i % 2:
            g = _regular(rng)
        else:
            g = random_connected_graph(int(rng.integers(4, 11)), rng, wmin=1.0, wmax=1.0)
        rep = degree_condition_check(g)
        assert rep.verdict, rep.to_dict()
        checked += rep.applicable
    assert checked > 150


@pytest.mark.parametrize("n, k", [(7, 4), (9, 6), (10, 7), (12, 9)])
def test_degree_conditions_dense_circulant(n, k):
    # circulant graph: i ~ i +- 1..k/2 (plus the antipode when k is odd and n even)
    offs = list(range(1, k // 2 + 1)) + ([n // 2] if k % 2 else [])
    pairs = {(min(i, (i + o) % n), max(i, (i + o) % n)) for i in range(n) for o in offs}
    g = WeightedGraph.from_edges(n, [(a, b, 1.0) for a, b in sorted(pairs)])
    assert np.all(g.degrees() == k)
    rep = degree_condition_check(g)
    assert rep.conditions["regular"] and rep.applicable and rep.verdict


# ---------------------------------------------------------------- expander and clique union

def test_expander_clique_sparsifier():
    rep = expander_clique_sparsifier(64, 0.5, seed=0)
    assert rep.degree == 16 and rep.edge_count == 512
    assert rep.max_rel_error <= 0.5
    assert rep.ratio.ratio > 1 + 1 / (2 * 63)
    with pytest.raises(GraphError):
        expander_clique_sparsifier(16, 0.1)


@pytest.mark.parametrize("n", [8, 20, 40])
@pytest.mark.parametrize("eps", [0.25, 0.5])
def test_union_sensitivity(n, eps):
    assert union_removal_sensitivity(n, eps).verdict


@pytest.mark.parametrize("size", [3, 4, 6])
def test_union_sensitivity_larger_cliques(size):
    rep = union_removal_sensitivity(40, 0.25, size=size)
    assert rep.verdict and math.isfinite(rep.min_change)
    # removing an edge of unit K_k moves its own R_eff from 2/k to 2/(k-2) when k > 2
    if size > 3:
        assert rep.min_change >= 2 / (size - 2) * (1 - 1e-9)


@given(graphs())
def test_grounded_resistances_match_matrix(g):
    from flowmetrics.props import resistance_matrix
    from flowmetrics.sparsify import grounded_resistances
    members = list(range(g.n))
    assert np.allclose(grounded_resistances(g, members), resistance_matrix(g), rtol=1e-9, atol=1e-12)
