"""p-norm flow distances: exact solvers for p in {1, 2, inf} and a certified
Newton solver for finite p in (1, inf).

For finite p the solver works on whichever side of the primal/dual pair has
exponent >= 2 (potentials for p <= 2, flows for p > 2), so every Newton
system is a grounded Laplacian with bounded conductances.  The other side is
recovered through the KKT map, and the pair (feasible flow, unit-gap
potentials) certifies the answer through the duality gap.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .graph import (
    DemandPair,
    GraphError,
    PNormParam,
    WeightedGraph,
    as_pnorm,
    divergence,
    potential_differences,
    potential_edge_costs,
)

DEFAULT_TOL = 1e-8
MAX_ITER = 10_000
_COND_FLOOR = 1e-7
_ARMIJO = 1e-4
KKT_TARGET = 1e-9
POLISH_STEPS = 200
_STALL = 1e-18  # relative Newton decrement below double-precision resolution


class SolverError(RuntimeError):
    """Raised when a finite-p solve stops short of the requested gap."""

    def __init__(self, message: str, potentials: np.ndarray | None = None,
                 flow: np.ndarray | None = None, gap: float = math.inf, iterations: int = 0):
        super().__init__(message)
        self.potentials = potentials
        self.flow = flow
        self.gap = gap
        self.iterations = iterations


@dataclass(frozen=True)
class FlowAssignment:
    demand: DemandPair
    values: np.ndarray

    def to_list(self) -> list[float]:
        return [float(x) for x in self.values]


@dataclass(frozen=True)
class PotentialAssignment:
    values: np.ndarray

    def to_list(self) -> list[float]:
        return [float(x) for x in self.values]


@dataclass
class SolveReport:
    p: PNormParam
    primal_value: float
    dual_value: float
    rel_gap: float
    kkt_residual: float
    iterations: int
    method: str = "newton"

    @property
    def value(self) -> float:
        """Point estimate of d_p: the midpoint is inside the certified bracket."""
        return 0.5 * (self.primal_value + self.dual_value)

    def to_dict(self) -> dict:
        return {
            "p": str(self.p),
            "primal": self.primal_value,
            "dual": self.dual_value,
            "rel_gap": self.rel_gap,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
        }


@dataclass
class KKTReport:
    edge_residual: float
    feasibility_residual: float
    tol: float
    optimal: bool = field(init=False)

    def __post_init__(self) -> None:
        self.optimal = self.edge_residual <= self.tol and self.feasibility_residual <= self.tol

    @property
    def residual(self) -> float:
        return max(self.edge_residual, self.feasibility_residual)


def _signed_pow(x: np.ndarray, r: float) -> np.ndarray:
    """x |x|^(r-1)."""
    return np.sign(x) * np.abs(x) ** r


def _norm(x: np.ndarray, r: float) -> float:
    a = np.abs(np.asarray(x, dtype=float))
    if a.size == 0:
        return 0.0
    amax = a.max()
    if amax == 0 or math.isinf(r):
        return float(amax)
    return float(amax * np.sum((a / amax) ** r) ** (1.0 / r))


def flow_cost(g: WeightedGraph, f: FlowAssignment | np.ndarray, p: PNormParam | float) -> float:
    """``||W^{-1} f||_p``."""
    values = f.values if isinstance(f, FlowAssignment) else np.asarray(f, dtype=float)
    if values.shape != (g.m,):
        raise GraphError(f"flow has {values.shape} entries, graph has {g.m} edges")
    return _norm(values / g.weights, as_pnorm(p).p)


def dual_cost(g: WeightedGraph, phi: PotentialAssignment | np.ndarray, p: PNormParam | float) -> float:
    """``||W B phi||_q`` with q the conjugate of p."""
    values = phi.values if isinstance(phi, PotentialAssignment) else phi
    return _norm(potential_edge_costs(g, values), as_pnorm(p).q)


def kkt_flow_from_potentials(g: WeightedGraph, phi: PotentialAssignment | np.ndarray,
                             p: PNormParam | float) -> np.ndarray:
    """Edge map ``w^q (dphi)|dphi|^(q-2)``, unnormalised."""
    p = as_pnorm(p)
    if p.p == 1 or p.is_inf:
        raise GraphError("the KKT flow map needs finite p > 1")
    values = phi.values if isinstance(phi, PotentialAssignment) else phi
    return g.weights ** p.q * _signed_pow(potential_differences(g, values), p.q - 1)


def kkt_potential_drops(g: WeightedGraph, f: np.ndarray, p: PNormParam | float) -> np.ndarray:
    """Inverse map ``f|f|^(p-2) / w^p``, the potential drop each flow value demands."""
    p = as_pnorm(p)
    return _signed_pow(np.asarray(f, dtype=float), p.p - 1) / g.weights ** p.p


def _signed_exp(sign: np.ndarray, log_mag: np.ndarray) -> np.ndarray:
    out = np.zeros_like(log_mag)
    ok = sign != 0
    out[ok] = sign[ok] * np.exp(log_mag[ok])
    return out


def _safe_log(x: np.ndarray) -> np.ndarray:
    a = np.abs(x)
    out = np.full(a.shape, -np.inf)
    out[a > 0] = np.log(a[a > 0])
    return out


def kkt_check(g: WeightedGraph, f: FlowAssignment, phi: PotentialAssignment | np.ndarray,
              p: PNormParam | float, tol: float = 1e-6, log_scale: float = 0.0) -> KKTReport:
    """Residuals of the optimality conditions for the pair (f, phi * exp(log_scale)).

    The edge identity ``B phi = f|f|^(p-2) / w^p`` is compared in whichever
    direction is Lipschitz: as flows ``f = w^q (B phi)|B phi|^(q-2)`` when
    p <= 2, as potential drops when p > 2.  Powers are taken in log space and
    the edge residual is relative to the larger side's max-norm.  The
    feasibility residual is ``||B^T f - (chi_s - chi_t)||_inf``.
    """
    p = as_pnorm(p)
    if p.p == 1 or p.is_inf:
        raise GraphError("the KKT edge identity needs finite p > 1")
    values = phi.values if isinstance(phi, PotentialAssignment) else np.asarray(phi, dtype=float)
    fv = np.asarray(f.values, dtype=float)
    drops = potential_differences(g, values)
    logw = np.log(g.weights)
    if p.p <= 2:
        have = fv
        want = _signed_exp(np.sign(drops),
                           p.q * logw + (p.q - 1) * (_safe_log(drops) + log_scale))
    else:
        have = drops
        want = _signed_exp(np.sign(fv), (p.p - 1) * _safe_log(fv) - p.p * logw - log_scale)
    scale = max(float(np.max(np.abs(have), initial=0.0)), float(np.max(np.abs(want), initial=0.0)))
    edge_res = float(np.max(np.abs(have - want))) / scale if scale > 0 else 0.0
    feas = float(np.max(np.abs(divergence(g, fv) - f.demand.vector(g.n))))
    return KKTReport(edge_res, feas, tol)


# ---------------------------------------------------------------- exact solvers

def shortest_path_d1(g: WeightedGraph, d: DemandPair) -> float:
    """Dijkstra with edge lengths 1/w (parallel edges: the heaviest one wins)."""
    d.check(g)
    adj: list[list[tuple[int, float]]] = [[] for _ in range(g.n)]
    for a, b, w in g.edges:
        adj[a].append((b, 1.0 / w))
        adj[b].append((a, 1.0 / w))
    dist = [math.inf] * g.n
    dist[d.source] = 0.0
    heap = [(0.0, d.source)]
    while heap:
        du, u = heapq.heappop(heap)
        if du > dist[u]:
            continue
        if u == d.target:
            return du
        for v, length in adj[u]:
            nd = du + length
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist[d.target]


def _grounded_solve(L: np.ndarray, rhs: np.ndarray, ground: int, refine: int = 2) -> np.ndarray:
    """Solve ``L x = rhs`` with ``x[ground] = 0``.

    A couple of refinement sweeps recover full precision for Laplacians with
    widely spread conductances (condition numbers up to ~1e12).
    """
    keep = np.arange(L.shape[0]) != ground
    A = L[np.ix_(keep, keep)]
    b = rhs[keep]
    lu = scipy.linalg.lu_factor(A, check_finite=False)
    y = scipy.linalg.lu_solve(lu, b, check_finite=False)
    for _ in range(refine):
        y += scipy.linalg.lu_solve(lu, b - A @ y, check_finite=False)
    x = np.zeros(L.shape[0])
    x[keep] = y
    return x


def effective_resistance(g: WeightedGraph, d: DemandPair, conductances: np.ndarray | None = None) -> float:
    """Effective resistance with the given conductances (default: the weights)."""
    d.check(g)
    L = g.laplacian(conductances)
    chi = d.vector(g.n)
    try:
        x = _grounded_solve(L, chi, d.target)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - connected graphs are nonsingular
        raise SolverError(f"singular Laplacian: {exc}") from exc
    return float(x[d.source] - x[d.target])


def resistance_d2(g: WeightedGraph, d: DemandPair) -> float:
    """d_2 = sqrt(R_eff) on the graph with conductances w^2."""
    return math.sqrt(effective_resistance(g, d, g.weights ** 2))


def _flow_network(g: WeightedGraph) -> nx.DiGraph:
    net = nx.DiGraph()
    net.add_nodes_from(range(g.n))
    for a, b, w in g.edges:
        for u, v in ((a, b), (b, a)):
            if net.has_edge(u, v):
                net[u][v]["capacity"] += w
            else:
                net.add_edge(u, v, capacity=w)
    return net


def min_cut(g: WeightedGraph, d: DemandPair) -> tuple[float, set[int]]:
    """Weighted minimum s-t cut value and the source side."""
    d.check(g)
    value, (side, _) = nx.minimum_cut(_flow_network(g), d.source, d.target, capacity="capacity")
    return float(value), set(side)


def mincut_dinf(g: WeightedGraph, d: DemandPair) -> float:
    return 1.0 / min_cut(g, d)[0]


# ---------------------------------------------------------------- finite p

def _exponent_schedule(r: float) -> list[float]:
    """Exponents 2, 4, 8, ... ending at r; warm starts for steep objectives."""
    sched = []
    e = 4.0
    while e < r / 1.5:
        sched.append(e)
        e *= 2
    sched.append(r)
    return sched


def _scaled_terms(z: np.ndarray, r: float):
    """Scale-free value, gradient and curvature of sum |z|^r.

    Returns ``(log F, grad, hess)`` where grad and hess are the derivatives of
    ``F / s^r`` for ``s = max|z|`` (same Newton direction as F itself).
    """
    a = np.abs(z)
    s = float(a.max())
    if s == 0:
        return -math.inf, np.zeros_like(z), np.zeros_like(z), s
    y = a / s
    grad = r * np.sign(z) * y ** (r - 1) / s
    hess = r * (r - 1) * y ** (r - 2) / s ** 2
    return _log_power_sum(z, r), grad, hess, s


def _log_power_sum(z: np.ndarray, r: float) -> float:
    a = np.abs(z)
    nz = a > 0
    if not np.any(nz):
        return -math.inf
    return float(logsumexp(r * np.log(a[nz])))


def _floor(c: np.ndarray) -> np.ndarray:
    top = float(c.max(initial=0.0))
    if top <= 0:
        return np.ones_like(c)
    return np.maximum(c, _COND_FLOOR * top)


def _armijo(logf0: float, slope: float, logf: float, t: float, scale_pow: float) -> bool:
    """Sufficient decrease test in log space.

    ``slope`` is the directional derivative of ``F / s^r`` (negative) and
    ``scale_pow`` is ``log s^r``.
    """
    f0 = math.exp(logf0 - scale_pow)
    target = f0 + _ARMIJO * t * slope
    if target <= 0:
        return logf < logf0
    return logf <= math.log(target) + scale_pow


class _Problem:
    """Shared state for one (graph, demand, p) solve."""

    def __init__(self, g: WeightedGraph, d: DemandPair, p: PNormParam):
        self.g = g
        self.d = d
        self.p = p
        self.chi = d.vector(g.n)
        self.free = np.array([v for v in range(g.n) if v not in (d.source, d.target)], dtype=int)
        self.w2 = g.weights ** 2
        self.iterations = 0

    # -- certificates -----------------------------------------------------------
    def repair(self, f: np.ndarray) -> np.ndarray:
        """Smallest w^-2-weighted correction restoring B^T f = chi."""
        g = self.g
        r = divergence(g, f) - self.chi
        if not np.any(r):
            return f
        y = _grounded_solve(g.laplacian(self.w2), r, self.d.target)
        return f - self.w2 * potential_differences(g, y)

    def certificate(self, f_raw: np.ndarray, phi: np.ndarray):
        """(primal, dual, gap, feasible flow, normalised potentials, raw residual)."""
        g, d, p = self.g, self.d, self.p
        feas_res = float(np.max(np.abs(divergence(g, f_raw) - self.chi)))
        f = self.repair(f_raw)
        primal = flow_cost(g, f, p)
        spread = phi[d.source] - phi[d.target]
        if spread == 0 or not np.isfinite(spread):
            return primal, 0.0, math.inf, f, phi, feas_res
        phi_n = (phi - phi[d.target]) / spread
        dual_norm = dual_cost(g, phi_n, p)
        dual = 1.0 / dual_norm if dual_norm > 0 else math.inf
        gap = (primal - dual) / dual if dual > 0 else math.inf
        return primal, dual, gap, f, phi_n, feas_res

    # -- potentials side (q >= 2) --------------------------------------------------
    def electrical_potentials(self) -> np.ndarray:
        g, d = self.g, self.d
        x = _grounded_solve(g.laplacian(self.w2), self.chi, d.target)
        return x / (x[d.source] - x[d.target])

    def flow_from_potentials(self, phi: np.ndarray, q: float) -> np.ndarray:
        g = self.g
        z = potential_edge_costs(g, phi)
        s = float(np.max(np.abs(z)))
        f = g.weights * _signed_pow(z / s, q - 1)
        c = divergence(g, f)[self.d.source]
        return f / c

    def newton_potentials(self, phi: np.ndarray, r: float, budget: int, stop) -> tuple[np.ndarray, bool]:
        """Minimise sum |w (B phi)|^r with phi_s = 1, phi_t = 0 fixed."""
        g, free = self.g, self.free
        if free.size == 0:
            return phi, True
        for _ in range(budget):
            self.iterations += 1
            z = potential_edge_costs(g, phi)
            logf, gz, hz, s = _scaled_terms(z, r)
            grad = (np.bincount(g.tails, g.weights * gz, minlength=g.n)
                    - np.bincount(g.heads, g.weights * gz, minlength=g.n))[free]
            H = g.laplacian(self.w2 * _floor(hz))[np.ix_(free, free)]
            step = -np.linalg.solve(H, grad)
            slope = float(grad @ step)
            if slope >= 0 or stop(phi, -slope):
                return phi, True
            if -slope <= _STALL * math.exp(logf - r * math.log(s)):
                return phi, True
            t = 1.0
            scale_pow = r * math.log(s)
            while t > 1e-14:
                trial = phi.copy()
                trial[free] += t * step
                if _armijo(logf, slope, _log_power_sum(potential_edge_costs(g, trial), r), t, scale_pow):
                    break
                t *= 0.5
            else:
                return phi, False
            phi = trial
        return phi, False

    # -- flow side (p > 2) ----------------------------------------------------------
    def electrical_flow(self) -> np.ndarray:
        g = self.g
        x = _grounded_solve(g.laplacian(self.w2), self.chi, self.d.target)
        return self.w2 * potential_differences(g, x)

    def potentials_from_flow(self, f: np.ndarray, r: float) -> np.ndarray:
        """w^2-weighted least-squares fit of potentials to the drops ``f|f|^(r-2) / w^r``.

        Computed up to a positive scale (in log space, so steep exponents do
        not overflow); exact whenever the drops form a potential difference.
        """
        g = self.g
        a = np.abs(f)
        nz = a > 0
        logs = np.full(g.m, -np.inf)
        logs[nz] = (r - 1) * np.log(a[nz]) - r * np.log(g.weights[nz])
        top = logs.max()
        drops = np.sign(f) * np.exp(logs - top)
        return _grounded_solve(g.laplacian(self.w2), divergence(g, self.w2 * drops), self.d.target)

    def newton_flow(self, f: np.ndarray, r: float, budget: int, stop) -> tuple[np.ndarray, np.ndarray, bool]:
        """Minimise sum |f / w|^r subject to B^T f = chi; returns (f, potentials, converged)."""
        g, d = self.g, self.d
        phi = np.zeros(g.n)
        for _ in range(budget):
            self.iterations += 1
            f = self.repair(f)
            u = f / g.weights
            logf, gu, hu, s = _scaled_terms(u, r)
            hu = _floor(hu)
            # Newton step for u in the affine set {B^T W u = chi}; conductances w^2 / h.
            cond = self.w2 / hu
            rhs = divergence(g, g.weights * gu / hu)
            nu = _grounded_solve(g.laplacian(cond), rhs, d.target)
            du = -(gu - g.weights * potential_differences(g, nu)) / hu
            # The Schur system can be badly conditioned; project the step back
            # onto divergence-free flows with the well-conditioned w^2 Laplacian.
            step = g.weights * du
            y = _grounded_solve(g.laplacian(self.w2), divergence(g, step), d.target)
            du = (step - self.w2 * potential_differences(g, y)) / g.weights
            phi = self.potentials_from_flow(f, r)
            slope = float(gu @ du)
            if slope >= 0 or stop(f, phi, -slope):
                return f, phi, True
            if -slope <= _STALL * math.exp(logf - r * math.log(s)):
                return f, phi, True
            t = 1.0
            scale_pow = r * math.log(s)
            while t > 1e-14:
                trial = f + t * g.weights * du
                if _armijo(logf, slope, _log_power_sum(trial / g.weights, r), t, scale_pow):
                    break
                t *= 0.5
            else:
                return f, phi, False
            f = trial
        return f, phi, False


def _solve_finite(g: WeightedGraph, d: DemandPair, p: PNormParam, tol: float,
                  max_iter: int = MAX_ITER):
    d.check(g)
    prob = _Problem(g, d, p)
    best: dict = {}
    polish = [0]

    def score(cert):
        # Certified iterates first, ranked by KKT residual; otherwise by gap.
        return (0, cert["kkt"]) if cert["gap"] <= tol else (1, cert["gap"])

    def record(f_raw, phi) -> bool:
        primal, dual, gap, f, phi_n, feas_res = prob.certificate(f_raw, phi)
        kkt = kkt_check(g, FlowAssignment(d, f), phi_n, p, log_scale=p.p * math.log(primal))
        cert = dict(primal=primal, dual=dual, gap=gap, f=f, phi=phi_n,
                    kkt=max(kkt.edge_residual, kkt.feasibility_residual, feas_res))
        if not best or score(cert) < score(best):
            best.clear()
            best.update(cert)
        if gap <= tol:
            polish[0] += 1
        # Once certified, keep polishing the KKT residual for a bounded number of steps.
        return gap <= tol and (cert["kkt"] <= KKT_TARGET or polish[0] > POLISH_STEPS)

    if p.p <= 2:
        q = p.q
        phi = prob.electrical_potentials()
        if q != 2:
            for r in _exponent_schedule(q)[:-1]:
                phi, _ = prob.newton_potentials(phi, r, 100, lambda ph, dec: dec < 1e-6)
        if not record(prob.flow_from_potentials(phi, q), phi) and q != 2:
            phi, _ = prob.newton_potentials(
                phi, q, max_iter, lambda ph, dec: record(prob.flow_from_potentials(ph, q), ph))
            record(prob.flow_from_potentials(phi, q), phi)
    else:
        f = prob.electrical_flow()
        for r in _exponent_schedule(p.p)[:-1]:
            f, _, _ = prob.newton_flow(f, r, 100, lambda ff, ph, dec: dec < 1e-6)
        f, phi, _ = prob.newton_flow(f, p.p, max_iter, lambda ff, ph, dec: record(ff, ph))
        record(f, prob.potentials_from_flow(f, p.p))

    report = SolveReport(p, best["primal"], best["dual"], best["gap"], best["kkt"], prob.iterations)
    if not best["gap"] <= tol:
        raise SolverError(
            f"d_p solve for p={p} stopped at rel_gap={best['gap']:.3e} > tol={tol:.1e}",
            potentials=best["phi"], flow=best["f"], gap=best["gap"], iterations=prob.iterations,
        )
    return best["f"], best["phi"], report


def solve_dual(g: WeightedGraph, d: DemandPair, p: PNormParam | float,
               tol: float = DEFAULT_TOL) -> tuple[PotentialAssignment, SolveReport]:
    """Unit-gap potentials minimising ``||W B phi||_q``; report.dual_value = 1 / that minimum."""
    p = as_pnorm(p)
    _require_finite(p)
    _, phi, report = _solve_finite(g, d, p, tol)
    return PotentialAssignment(phi), report


def solve_primal(g: WeightedGraph, d: DemandPair, p: PNormParam | float,
                 tol: float = DEFAULT_TOL) -> tuple[FlowAssignment, SolveReport]:
    """Feasible unit s-t flow minimising ``||W^{-1} f||_p`` to the requested gap."""
    p = as_pnorm(p)
    _require_finite(p)
    f, _, report = _solve_finite(g, d, p, tol)
    return FlowAssignment(d, f), report


def _require_finite(p: PNormParam) -> None:
    if p.p == 1 or p.is_inf:
        raise GraphError("the convex solver handles 1 < p < inf; use the exact solvers otherwise")


def d_p(g: WeightedGraph, d: DemandPair, p: PNormParam | float | str,
        tol: float = DEFAULT_TOL) -> SolveReport:
    """Flow distance d_p(s, t) with a certificate."""
    p = as_pnorm(p)
    d.check(g)
    if p.p == 1:
        v = shortest_path_d1(g, d)
        return SolveReport(p, v, v, 0.0, 0.0, 0, method="dijkstra")
    if p.p == 2:
        v = resistance_d2(g, d)
        return SolveReport(p, v, v, 0.0, 0.0, 0, method="laplacian")
    if p.is_inf:
        v = mincut_dinf(g, d)
        return SolveReport(p, v, v, 0.0, 0.0, 0, method="maxflow")
    return _solve_finite(g, d, p, tol)[2]


def distance(g: WeightedGraph, s: int, t: int, p: PNormParam | float | str,
             tol: float = DEFAULT_TOL) -> float:
    """Convenience wrapper returning the primal value of :func:`d_p`."""
    return d_p(g, DemandPair(s, t), p, tol).primal_value
