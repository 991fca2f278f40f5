import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import null_space
from scipy.optimize import minimize, minimize_scalar
from scipy.sparse.csgraph import shortest_path

from flowmetrics.families import complete_graph, cycle_graph, parallel_edges, path_graph, random_connected_graph
from flowmetrics.graph import DemandPair, GraphError, WeightedGraph, divergence
from flowmetrics.solve import (FlowAssignment, SolverError, _solve_finite, d_p, distance, dual_cost,
                               flow_cost, kkt_check, mincut_dinf, resistance_d2, shortest_path_d1,
                               solve_dual, solve_primal)
from flowmetrics.graph import PNormParam

from strategies import finite_p, graph_and_pair


# ---------------------------------------------------------------- independent oracles

def floyd_d1(g, s, t):
    A = np.full((g.n, g.n), np.inf)
    for a, b, w in g.edges:
        A[a, b] = A[b, a] = min(A[a, b], 1 / w)
    return shortest_path(np.where(np.isinf(A), 0, A), method="FW", directed=False)[s, t]


def pinv_d2(g, s, t):
    Lp = np.linalg.pinv(g.laplacian(g.weights ** 2))
    chi = DemandPair(s, t).vector(g.n)
    return math.sqrt(chi @ Lp @ chi)


def enum_dinf(g, s, t):
    others = [v for v in range(g.n) if v not in (s, t)]
    best = math.inf
    for k in range(len(others) + 1):
        for extra in itertools.combinations(others, k):
            S = {s, *extra}
            best = min(best, sum(w for a, b, w in g.edges if (a in S) != (b in S)))
    return 1 / best


def cycle_space_dp(g, s, t, p):
    """Minimise ||W^-1 f||_p^p over f = f0 + C y with BFGS; returns an upper bound on d_p."""
    B = g.incidence().toarray()
    chi = DemandPair(s, t).vector(g.n)
    f0 = np.linalg.lstsq(B.T, chi, rcond=None)[0]
    C = null_space(B.T)
    if C.shape[1] == 0:
        return float(np.sum(np.abs(f0 / g.weights) ** p) ** (1 / p))
    w = g.weights

    def obj(y):
        z = (f0 + C @ y) / w
        return np.sum(np.abs(z) ** p), C.T @ (p * np.sign(z) * np.abs(z) ** (p - 1) / w)

    res = minimize(obj, np.zeros(C.shape[1]), jac=True, method="BFGS",
                   options={"gtol": 1e-13, "maxiter": 20000})
    return float(res.fun ** (1 / p))


# ---------------------------------------------------------------- golden values

@pytest.mark.parametrize("p", [1.5, 2, 3, 5])
def test_two_edge_path(p):
    rep = d_p(path_graph(3), DemandPair(0, 2), p)
    assert rep.primal_value == pytest.approx(2 ** (1 / p), rel=1e-7)
    assert rep.dual_value == pytest.approx(2 ** (1 / p), rel=1e-7)


@pytest.mark.parametrize("n", [4, 8, 16])
def test_clique_d2(n):
    assert d_p(complete_graph(n), DemandPair(0, 1), 2).primal_value == pytest.approx(math.sqrt(2 / n), abs=1e-9)


def test_parallel_edges_closed_form():
    # m unit parallel edges: the flow splits evenly, d_p = m^(1/p - 1)
    for p in (1.5, 3.0):
        assert distance(parallel_edges(4), 0, 1, p) == pytest.approx(4 ** (1 / p - 1), rel=1e-7)


def test_cycle_large_p():
    # opposite vertices of an 8-cycle: two paths of length 4 each carrying 1/2
    p = 1000.0
    want = (8 * 0.5 ** p) ** (1 / p)
    assert distance(cycle_graph(8), 0, 4, p, tol=1e-6) == pytest.approx(want, rel=1e-6)


@pytest.mark.parametrize("p", [1.25, 1.5, 3.0, 6.0])
def test_cycle_one_dimensional_oracle(p):
    rng = np.random.default_rng(7)
    w = rng.uniform(0.2, 5, 6)
    g = WeightedGraph.from_edges(6, [(i, (i + 1) % 6, w[i]) for i in range(6)])
    # flow x on the path 0-1-2-3, 1-x on 0-5-4-3
    top, bottom = w[:3], w[3:]

    def cost(x):
        return np.sum(np.abs(x / top) ** p) + np.sum(np.abs((1 - x) / bottom) ** p)

    res = minimize_scalar(cost, bounds=(0, 1), method="bounded", options={"xatol": 1e-12})
    assert distance(g, 0, 3, p) == pytest.approx(res.fun ** (1 / p), rel=1e-8)


# ---------------------------------------------------------------- exact solvers against oracles

@given(graph_and_pair())
def test_d1_matches_floyd(gp):
    g, s, t = gp
    assert shortest_path_d1(g, DemandPair(s, t)) == pytest.approx(floyd_d1(g, s, t), rel=1e-12)


@given(graph_and_pair())
def test_d2_matches_pinv(gp):
    g, s, t = gp
    assert resistance_d2(g, DemandPair(s, t)) == pytest.approx(pinv_d2(g, s, t), rel=1e-9)


@given(graph_and_pair(nmax=7))
def test_dinf_matches_cut_enumeration(gp):
    g, s, t = gp
    assert mincut_dinf(g, DemandPair(s, t)) == pytest.approx(enum_dinf(g, s, t), rel=1e-12)


@given(graph_and_pair(nmax=6), finite_p)
def test_general_solver_matches_cycle_space_oracle(gp, p):
    g, s, t = gp
    rep = d_p(g, DemandPair(s, t), p)
    oracle = cycle_space_dp(g, s, t, p)
    assert rep.dual_value <= oracle * (1 + 1e-9)
    assert rep.primal_value == pytest.approx(oracle, rel=1e-6)


# ---------------------------------------------------------------- certificates and invariants

@given(graph_and_pair(), finite_p)
def test_certificate(gp, p):
    g, s, t = gp
    d = DemandPair(s, t)
    f, rep = solve_primal(g, d, p)
    assert rep.rel_gap <= 1e-8
    assert rep.kkt_residual <= 1e-6
    assert rep.dual_value <= rep.primal_value * (1 + 1e-12)
    assert np.allclose(divergence(g, f.values), d.vector(g.n), atol=1e-9)
    assert flow_cost(g, f, p) == pytest.approx(rep.primal_value, rel=1e-12)
    phi, rep2 = solve_dual(g, d, p)
    assert phi.values[s] - phi.values[t] == pytest.approx(1.0, abs=1e-12)
    assert 1 / dual_cost(g, phi, p) == pytest.approx(rep2.dual_value, rel=1e-12)


@given(graph_and_pair(), finite_p, st.floats(0.01, 100))
def test_homogeneity(gp, p, c):
    g, s, t = gp
    a = distance(g, s, t, p)
    b = distance(g.scaled(c), s, t, p)
    assert b == pytest.approx(a / c, rel=1e-7)


@given(graph_and_pair(), finite_p)
def test_symmetry(gp, p):
    g, s, t = gp
    assert distance(g, s, t, p) == pytest.approx(distance(g, t, s, p), rel=1e-7)


@given(graph_and_pair())
def test_nonincreasing_in_p(gp):
    g, s, t = gp
    vals = [distance(g, s, t, p) for p in (1, 1.5, 2, 3, 5, math.inf)]
    assert all(b <= a * (1 + 1e-7) for a, b in zip(vals, vals[1:]))


def test_kkt_check_flags_a_perturbed_flow():
    g = random_connected_graph(6, np.random.default_rng(3), density=0.6)
    d = DemandPair(0, 5)
    f, phi, rep = _solve_finite(g, d, PNormParam(3.0), 1e-10)
    # phi has a unit gap; the optimality pair is phi scaled by primal^p
    scale = 3.0 * math.log(rep.primal_value)
    assert kkt_check(g, FlowAssignment(d, f), phi, 3.0, log_scale=scale).optimal
    cycle = np.linalg.svd(g.incidence().toarray().T)[2][-1]  # a circulation
    bad = kkt_check(g, FlowAssignment(d, f + 0.1 * cycle / np.abs(cycle).max()), phi, 3.0,
                    log_scale=scale)
    assert not bad.optimal and bad.feasibility_residual < 1e-9


def test_solver_error_carries_best_iterate():
    g = random_connected_graph(7, np.random.default_rng(1), density=0.7)
    with pytest.raises(SolverError) as info:
        _solve_finite(g, DemandPair(0, 6), PNormParam(5.0), 1e-15, max_iter=1)
    assert info.value.potentials is not None and info.value.gap > 0


def test_errors():
    g = path_graph(3)
    with pytest.raises(GraphError):
        d_p(g, DemandPair(0, 3), 2)
    with pytest.raises(GraphError):
        solve_primal(g, DemandPair(0, 2), 1)


def test_huge_p_is_infinity():
    rep = d_p(cycle_graph(5), DemandPair(0, 2), 5e6)
    assert rep.method == "maxflow" and rep.primal_value == pytest.approx(0.5)
