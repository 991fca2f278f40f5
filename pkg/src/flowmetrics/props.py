"""All-pairs flow distances and numerical checks of their structural properties."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import DemandPair, GraphError, PNormParam, WeightedGraph, as_pnorm, potential_edge_costs
from .solve import DEFAULT_TOL, _norm, _signed_pow, d_p

EXHAUSTIVE_TRIPLES_MAX_N = 60
SAMPLED_TRIPLES = 100_000


@dataclass
class DistanceMatrix:
    n: int
    p: PNormParam
    values: np.ndarray
    gap_bound: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.n, self.n):
            raise GraphError(f"distance matrix must be {self.n}x{self.n}")

    def __getitem__(self, key):
        return self.values[key]

    def to_dict(self) -> dict:
        return {"n": self.n, "p": str(self.p), "gap_bound": self.gap_bound,
                "values": self.values.tolist()}

    def to_csv(self, digits: int = 12) -> str:
        return "\n".join(",".join(f"{x:.{digits}g}" for x in row) for row in self.values) + "\n"


def all_pairs(g: WeightedGraph, p: PNormParam | float | str, tol: float = DEFAULT_TOL) -> DistanceMatrix:
    """d_p for every pair, one independent solve per unordered pair."""
    p = as_pnorm(p)
    D = np.zeros((g.n, g.n))
    gap = 0.0
    for s, t in itertools.combinations(range(g.n), 2):
        rep = d_p(g, DemandPair(s, t), p, tol)
        D[s, t] = D[t, s] = rep.primal_value
        gap = max(gap, rep.rel_gap)
    return DistanceMatrix(g.n, p, D, gap)


# ---------------------------------------------------------------- Foster sums

@dataclass
class FosterReport:
    p: PNormParam
    q: float
    sum: float
    lower_bound: float
    upper_bound: float
    max_edge_term: float
    tol: float
    form: str = "sum"
    verdict: bool = field(init=False)

    def __post_init__(self) -> None:
        in_bracket = self.lower_bound - self.tol <= self.sum <= self.upper_bound + self.tol
        self.verdict = bool(in_bracket and self.max_edge_term <= 1 + self.tol)

    def to_dict(self) -> dict:
        return {"p": str(self.p), "q": self.q, "sum": self.sum, "lower_bound": self.lower_bound,
                "upper_bound": self.upper_bound, "max_edge_term": self.max_edge_term,
                "form": self.form, "verdict": self.verdict}


def foster_bracket(n: int, m: int, p: PNormParam) -> tuple[float, float]:
    """Bracket on sum_e (w_e d_p(e))^q for a connected graph with n vertices and m edges."""
    if p.p == 1:
        return 1.0, 1.0
    if p.p == 2:
        return float(n - 1), float(n - 1)
    if p.p > 2:
        return n / 2, float(n - 1)
    return float(n - 1), float(m)


def edge_distances(g: WeightedGraph, p: PNormParam, tol: float = DEFAULT_TOL) -> np.ndarray:
    """d_p between the endpoints of each edge (one solve per distinct endpoint pair)."""
    cache: dict[tuple[int, int], float] = {}
    out = np.empty(g.m)
    for i, (a, b, _) in enumerate(g.edges):
        key = (min(a, b), max(a, b))
        if key not in cache:
            cache[key] = d_p(g, DemandPair(*key), p, tol).primal_value
        out[i] = cache[key]
    return out


def foster_sum(g: WeightedGraph, p: PNormParam | float | str, tol: float = 1e-6,
               solve_tol: float = DEFAULT_TOL) -> FosterReport:
    """Sum of (w d_p)^q over edges with its bracket; at p = 1 the max form max_e w d_1 = 1."""
    p = as_pnorm(p)
    terms_base = g.weights * edge_distances(g, p, solve_tol)
    lo, hi = foster_bracket(g.n, g.m, p)
    if p.p == 1:
        top = float(terms_base.max())
        return FosterReport(p, p.q, top, lo, hi, top, tol, form="max")
    terms = terms_base ** p.q
    total = float(terms.sum())
    # Bracket tolerance scales with the number of summed terms.
    return FosterReport(p, p.q, total, lo, hi, float(terms.max()), tol * max(1, g.m))


# ---------------------------------------------------------------- p-strong triangle inequality

@dataclass(frozen=True)
class Violation:
    x: int
    y: int
    z: int
    excess: float  # d(x,y)^p / (d(x,z)^p + d(z,y)^p) - 1, or the ultrametric analogue

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "z": self.z, "excess": self.excess}


def _triples(n: int, rng: np.random.Generator | None):
    if n <= EXHAUSTIVE_TRIPLES_MAX_N:
        x, y, z = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
        x, y, z = x.ravel(), y.ravel(), z.ravel()
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        x, y, z = (rng.integers(0, n, SAMPLED_TRIPLES) for _ in range(3))
    keep = (x != y) & (y != z) & (x != z)
    return x[keep], y[keep], z[keep]


def check_p_strong(m: DistanceMatrix, tol: float = 1e-6, exponent: PNormParam | float | str | None = None,
                   rng: np.random.Generator | None = None, limit: int | None = None) -> list[Violation]:
    """Triples with d(x,y)^e > d(x,z)^e + d(z,y)^e beyond relative tol (e defaults to m.p).

    Exhaustive for n <= 60, otherwise 1e5 sampled triples.  The comparison is
    normalised by d(x,y) so that large exponents do not overflow.
    """
    e = m.p if exponent is None else as_pnorm(exponent)
    x, y, z = _triples(m.n, rng)
    D = m.values
    dxy, dxz, dzy = D[x, y], D[x, z], D[z, y]
    if e.is_inf:
        rhs = np.maximum(dxz, dzy) / dxy
        excess = 1.0 / rhs - 1.0
    else:
        rhs = (dxz / dxy) ** e.p + (dzy / dxy) ** e.p
        excess = 1.0 / rhs - 1.0
    bad = np.flatnonzero(excess > tol)
    bad = bad[np.argsort(-excess[bad])]
    if limit is not None:
        bad = bad[:limit]
    return [Violation(int(x[i]), int(y[i]), int(z[i]), float(excess[i])) for i in bad]


# ---------------------------------------------------------------- monotonicity in p

@dataclass
class MonotonicityReport:
    ps: list[PNormParam]
    values: list[float]
    nonincreasing: bool
    sandwich: bool
    powered: bool
    details: list[dict]

    @property
    def verdict(self) -> bool:
        return self.nonincreasing and self.sandwich and self.powered

    def to_dict(self) -> dict:
        return {"p": [str(p) for p in self.ps], "values": self.values,
                "nonincreasing": self.nonincreasing, "sandwich": self.sandwich,
                "powered": self.powered, "verdict": self.verdict, "details": self.details}


def check_monotonicity(g: WeightedGraph, pair: DemandPair, p_list, tol: float = 1e-6,
                       solve_tol: float = DEFAULT_TOL) -> MonotonicityReport:
    """Check, for consecutive p < p' in ``p_list``:

    (a) d_p' <= d_p;
    (b) d_p <= |E|^(1/p - 1/p') d_p';
    (c) d_{p,G}^q >= d_{p',G'}^{q'} where G' carries weights w^(q/q').
    """
    ps = [as_pnorm(p) for p in p_list]
    if any(b.p <= a.p for a, b in zip(ps, ps[1:])):
        raise GraphError("p_list must be strictly ascending")
    vals = [d_p(g, pair, p, solve_tol).primal_value for p in ps]
    mono = sandwich = powered = True
    details = []
    for (p, dp), (pp, dpp) in zip(zip(ps, vals), zip(ps[1:], vals[1:])):
        inv = lambda r: 0.0 if r.is_inf else 1.0 / r.p  # noqa: E731
        a_ok = dpp <= dp * (1 + tol)
        b_ok = dp <= g.m ** (inv(p) - inv(pp)) * dpp * (1 + tol)
        row = {"p": str(p), "p_next": str(pp), "nonincreasing": a_ok, "sandwich": b_ok}
        if math.isinf(p.q):
            row["powered"] = None  # p = 1: the reweighting exponent q/q' is infinite
        else:
            g2 = g.with_weights(g.weights ** (p.q / pp.q))
            lhs = dp ** p.q
            rhs = d_p(g2, pair, pp, solve_tol).primal_value ** pp.q
            row.update(powered=bool(lhs >= rhs * (1 - tol)), lhs=lhs, rhs=rhs)
            powered &= row["powered"]
        mono &= a_ok
        sandwich &= b_ok
        details.append(row)
    return MonotonicityReport(ps, vals, bool(mono), bool(sandwich), bool(powered), details)


# ---------------------------------------------------------------- q-Laplacian

def q_laplacian(g: WeightedGraph, phi: np.ndarray, q: float) -> np.ndarray:
    """(L_q phi)_x = sum_y w(xy)^q (phi_x - phi_y)|phi_x - phi_y|^(q-2)."""
    z = potential_edge_costs(g, phi)
    edge = g.weights * _signed_pow(z, q - 1)
    return np.bincount(g.tails, edge, minlength=g.n) - np.bincount(g.heads, edge, minlength=g.n)


@dataclass
class LambdaReport:
    p: PNormParam
    q: float
    lambda2: float | None
    bound: float | None
    max_distance: float | None
    rayleigh_min: float | None
    identity_residual: float
    asserted: bool
    verdict: bool

    def to_dict(self) -> dict:
        return {"p": str(self.p), "q": self.q, "lambda2": self.lambda2, "bound": self.bound,
                "max_distance": self.max_distance, "rayleigh_min": self.rayleigh_min,
                "identity_residual": self.identity_residual, "asserted": self.asserted,
                "verdict": self.verdict}


def lambda_bound_report(g: WeightedGraph, p: PNormParam | float, samples: int = 200,
                        seed: int = 0, tol: float = 1e-6) -> LambdaReport:
    """Spectral upper bound d_p <= (2 / lambda_q)^(1/q).

    At q = 2 lambda is the exact second eigenvalue of the Laplacian with
    conductances w^2 and the bound is checked on every pair.  For q != 2 the
    report only gives the smallest sampled Rayleigh quotient on the unit
    sphere orthogonal to 1 (an upper estimate) and asserts nothing.
    """
    p = as_pnorm(p)
    if p.p == 1 or p.is_inf:
        raise GraphError("the q-Laplacian bound needs 1 < p < inf")
    q = p.q
    rng = np.random.default_rng(seed)
    resid = 0.0
    rayleigh = []
    for _ in range(samples):
        phi = rng.standard_normal(g.n)
        phi -= phi.mean()
        phi /= np.linalg.norm(phi)
        form = float(phi @ q_laplacian(g, phi, q))
        cost = _norm(potential_edge_costs(g, phi), q) ** q
        resid = max(resid, abs(form - cost) / max(cost, 1e-300))
        rayleigh.append(form)
    if q == 2:
        lam = float(np.linalg.eigvalsh(g.laplacian(g.weights ** 2))[1])
        bound = math.sqrt(2 / lam)
        D = all_pairs(g, p)
        top = float(D.values.max())
        return LambdaReport(p, q, lam, bound, top, min(rayleigh), resid, True,
                            bool(top <= bound * (1 + tol)))
    return LambdaReport(p, q, None, None, None, min(rayleigh), resid, False, True)


# ---------------------------------------------------------------- commute times

@dataclass
class CommuteReport:
    hitting: np.ndarray
    commute: np.ndarray
    resistance: np.ndarray
    total_weight: float
    mismatch: float
    tol: float

    @property
    def verdict(self) -> bool:
        return self.mismatch <= self.tol

    def to_dict(self) -> dict:
        return {"hitting": self.hitting.tolist(), "commute": self.commute.tolist(),
                "resistance": self.resistance.tolist(), "total_weight": self.total_weight,
                "mismatch": self.mismatch, "verdict": self.verdict}


def laplacian_pinv(g: WeightedGraph, conductances: np.ndarray | None = None) -> np.ndarray:
    """L^+ = (L + J/n)^-1 - J/n for a connected graph.

    A thresholded pseudoinverse can keep the null eigenvalue when it lands just
    above the cutoff, which wrecks every resistance; the shift avoids that.
    """
    J = np.full((g.n, g.n), 1.0 / g.n)
    return np.linalg.inv(g.laplacian(conductances) + J) - J


def resistance_matrix(g: WeightedGraph, conductances: np.ndarray | None = None) -> np.ndarray:
    """All-pairs effective resistance from the Laplacian pseudoinverse."""
    Lp = laplacian_pinv(g, conductances)
    d = np.diag(Lp)
    return d[:, None] + d[None, :] - 2 * Lp


def hitting_times(g: WeightedGraph) -> np.ndarray:
    """h[u, v]: expected steps of the w-weighted random walk from u to first reach v."""
    A = np.zeros((g.n, g.n))
    np.add.at(A, (g.tails, g.heads), g.weights)
    np.add.at(A, (g.heads, g.tails), g.weights)
    P = A / A.sum(axis=1, keepdims=True)
    H = np.zeros((g.n, g.n))
    for v in range(g.n):
        rest = np.arange(g.n) != v
        M = np.eye(g.n - 1) - P[np.ix_(rest, rest)]
        H[rest, v] = np.linalg.solve(M, np.ones(g.n - 1))
    return H


def commute_check(g: WeightedGraph, tol: float = 1e-8) -> CommuteReport:
    """Compare C(u,v) = h(u,v) + h(v,u) with 2 w(E) R_eff(u,v) (relative mismatch)."""
    H = hitting_times(g)
    C = H + H.T
    R = resistance_matrix(g)
    wE = float(g.weights.sum())
    off = ~np.eye(g.n, dtype=bool)
    target = 2 * wE * R
    mismatch = float(np.max(np.abs(C[off] - target[off]) / target[off])) if g.n > 1 else 0.0
    return CommuteReport(H, C, R, wE, mismatch, tol)


def symmetric_hitting_times(n: int, alpha: float, beta: float) -> dict[str, float]:
    """Closed-form hitting times on K_n minus {s,t} (alpha at s,t; beta elsewhere).

    H0 = h(s,t), H1 = h(x,t), H2 = h(s,x), H3 = h(x,y) for middle vertices x != y.
    """
    if n < 4:
        raise GraphError("the symmetric family needs n >= 4")
    gam = beta / alpha
    h0 = 4 + (n - 3) * gam
    h1 = 3 + (n - 3) * gam
    h3 = (n - 2) * (4 + (n - 3) * gam) / (2 + (n - 2) * gam)
    h2 = 1 + (n - 3) / (n - 2) * h3
    return {"H0": h0, "H1": h1, "H2": h2, "H3": h3}
