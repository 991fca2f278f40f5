"""Row-sampling d_p sparsifiers, Gomory-Hu trees, and the effective-resistance
lower-bound experiments for resistance sparsifiers.

Two resistance conventions appear here.  d_2 uses the squared weights w^2 as
conductances (``resistance_d2``); the lower-bound experiments treat w itself
as the conductance, which is what ``resistance_matrix(g)`` computes by default.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .families import clique_minus_edge, clique_union, random_regular_multigraph
from .graph import DemandPair, GraphError, PNormParam, WeightedGraph, as_pnorm
from .props import laplacian_pinv, resistance_matrix
from .solve import DEFAULT_TOL, d_p, min_cut

LEWIS_MAX_ITER = 100
LEWIS_TOL = 1e-4
MAX_RETRIES = 20
KEEP_SCORE = 1 - 1e-9  # edges at or above this score are bridges (or numerically so)
VERIFY_ALL_PAIRS_MAX_N = 30
VERIFY_SAMPLED_PAIRS = 200
UNION_LINK_WEIGHT = 1e-9


# ---------------------------------------------------------------- sampling scores

@dataclass
class SamplingScores:
    scores: np.ndarray
    total: float
    oversampling: float
    q: float
    mode: str
    iterations: int = 1

    def to_dict(self) -> dict:
        return {"scores": self.scores.tolist(), "total": self.total,
                "oversampling": self.oversampling, "q": self.q, "mode": self.mode,
                "iterations": self.iterations}


def oversampling_factor(n: int, eps: float, q: float) -> float:
    """g(n, eps, q) with every hidden constant set to 1.

    The q <= 2 branch also covers q = 2.
    """
    if not 0 < eps < 1:
        raise GraphError("eps must lie in (0, 1)")
    if q <= 2:
        x = math.log(n / eps)
        return x * math.log(x) ** 2 / eps ** 2 if x > 1 else x / eps ** 2
    return n ** (q / 2 - 1) * math.log(n) * math.log(1 / eps) / eps ** 5


def _edge_resistances(g: WeightedGraph, conductances: np.ndarray) -> np.ndarray:
    Lp = laplacian_pinv(g, conductances)
    a, b = g.tails, g.heads
    return Lp[a, a] + Lp[b, b] - 2 * Lp[a, b]


def leverage_scores(g: WeightedGraph) -> np.ndarray:
    """Leverage of the rows of WB: w_e^2 R_eff(e) with conductances w^2."""
    w2 = g.weights ** 2
    return np.clip(w2 * _edge_resistances(g, w2), 0.0, 1.0)


def lewis_weights(g: WeightedGraph, q: float, max_iter: int = LEWIS_MAX_ITER,
                  tol: float = LEWIS_TOL) -> tuple[np.ndarray, int]:
    """l_q Lewis weights of WB by the fixed point tau <- (leverage under W^2 tau^(1-2/q))^(q/2).

    The map is a contraction for q < 4.  Returns (weights, iterations).
    """
    w2 = g.weights ** 2
    tau = np.ones(g.m)
    for it in range(1, max_iter + 1):
        c = w2 * tau ** (1 - 2 / q)
        lev = np.maximum(w2 * _edge_resistances(g, c), 0.0)
        new = lev ** (q / 2)
        done = np.max(np.abs(new - tau) / np.maximum(tau, 1e-300)) <= tol
        tau = new
        if done:
            return tau, it
    return tau, max_iter


def sampling_scores(g: WeightedGraph, p: PNormParam | float | str, mode: str | None = None,
                    eps: float = 0.25) -> SamplingScores:
    p = as_pnorm(p)
    q = p.q
    if math.isinf(q) or q <= 1:
        raise GraphError("sampling scores need 1 < p < inf")
    mode = mode or ("exact-q2" if q == 2 else "lewis-iterative")
    if mode == "exact-q2":
        if abs(q - 2) > 1e-12:
            raise GraphError(f"mode exact-q2 needs q = 2, got q = {q:g}")
        tau, it = leverage_scores(g), 1
    elif mode == "lewis-iterative":
        tau, it = lewis_weights(g, q)
    else:
        raise GraphError(f"unknown score mode {mode!r}")
    return SamplingScores(tau, float(tau.sum()), oversampling_factor(g.n, eps, q), q, mode, it)


# ---------------------------------------------------------------- Gomory-Hu

def gomory_hu(g: WeightedGraph) -> WeightedGraph:
    """Gomory-Hu cut tree by Gusfield's method: n - 1 max-flow calls, no contractions.

    Each tree edge's two sides form a minimum cut of g between its endpoints,
    so tree path minima equal every pairwise min cut of g.
    """
    parent = [0] * g.n
    value = [0.0] * g.n
    for s in range(1, g.n):
        t = parent[s]
        cut, side = min_cut(g, DemandPair(s, t))
        value[s] = cut
        for i in range(g.n):
            if i != s and i in side and parent[i] == t:
                parent[i] = s
        if parent[t] in side:
            parent[s], parent[t] = parent[t], s
            value[s], value[t] = value[t], cut
    return WeightedGraph.from_edges(g.n, [(s, parent[s], value[s]) for s in range(1, g.n)])


# ---------------------------------------------------------------- sparsifier

@dataclass
class SparsifierResult:
    graph_after: WeightedGraph
    edge_count: int
    seed: int
    eps: float
    p: PNormParam
    method: str
    oversample: float = 1.0
    draws: int = 0
    attempts: int = 1
    kept_edges: int = 0
    score_sum: float = 0.0
    oversampling: float = 0.0

    def to_dict(self) -> dict:
        return {"edge_count": self.edge_count, "n": self.graph_after.n, "seed": self.seed,
                "eps": self.eps, "p": str(self.p), "method": self.method,
                "oversample": self.oversample, "draws": self.draws, "attempts": self.attempts,
                "kept_edges": self.kept_edges, "score_sum": self.score_sum,
                "oversampling": self.oversampling}


def gomory_hu_threshold(n: int, eps: float) -> float:
    return 4 / eps * math.log(n)


def _sample_once(g: WeightedGraph, tau: np.ndarray, factor: float, q: float,
                 rng: np.random.Generator) -> tuple[WeightedGraph, int, int]:
    keep = tau >= KEEP_SCORE
    pool = np.flatnonzero(~keep)
    sigma = tau[pool] * factor
    counts = np.zeros(g.m)
    draws = 0
    if len(pool):
        draws = int(math.ceil(sigma.sum()))
        prob = sigma / sigma.sum()
        picks = rng.choice(len(pool), size=draws, p=prob)
        counts[pool] = np.bincount(picks, minlength=len(pool))
    # each draw of e is a row of A scaled by (draws * prob_e)^(-1/q); duplicate rows
    # collapse in l_q to a single row scaled by (count_e / (draws * prob_e))^(1/q)
    w = g.weights.copy()
    if len(pool):
        w[pool] *= (counts[pool] / (draws * prob)) ** (1 / q)
    live = keep | (counts > 0)
    edges = [(int(a), int(b), float(x)) for a, b, x, k in zip(g.tails, g.heads, w, live) if k]
    return WeightedGraph.from_edges(g.n, edges, check_connected=False), draws, int(keep.sum())


def build_sparsifier(g: WeightedGraph, p: PNormParam | float | str, eps: float, seed: int = 0,
                     oversample: float = 1.0, mode: str | None = None,
                     max_retries: int = MAX_RETRIES) -> SparsifierResult:
    """Sample rows of WB with probability proportional to their scores.

    Bridges are always kept at their own weight.  For p >= 4 log(n) / eps the
    Gomory-Hu tree is returned instead.  A disconnected sample is redrawn
    with seed + 1, up to ``max_retries`` times.
    """
    p = as_pnorm(p)
    if not 0 < eps < 1:
        raise GraphError("eps must lie in (0, 1)")
    if p.p <= 4 / 3:
        raise GraphError("sparsification is only offered for p > 4/3")
    if oversample <= 0:
        raise GraphError("oversample must be positive")
    if p.is_inf or p.p >= gomory_hu_threshold(g.n, eps):
        tree = gomory_hu(g)
        return SparsifierResult(tree, tree.m, seed, eps, p, "gomory-hu", oversample)
    sc = sampling_scores(g, p, mode, eps)
    factor = sc.oversampling * oversample
    for attempt in range(max_retries + 1):
        rng = np.random.default_rng(seed + attempt)
        h, draws, kept = _sample_once(g, sc.scores, factor, sc.q, rng)
        if h.is_connected():
            return SparsifierResult(h, h.m, seed + attempt, eps, p, "sampling", oversample,
                                    draws, attempt + 1, kept, sc.total, sc.oversampling)
    raise GraphError(f"no connected sample after {max_retries + 1} attempts")


# ---------------------------------------------------------------- verification

@dataclass
class VerifyReport:
    p: PNormParam
    max_rel_error: float
    worst_pair: tuple[int, int] | None
    pairs_checked: int
    tol: float | None = None

    @property
    def verdict(self) -> bool:
        return self.tol is None or self.max_rel_error <= self.tol

    def to_dict(self) -> dict:
        return {"p": str(self.p), "max_rel_error": self.max_rel_error,
                "worst_pair": list(self.worst_pair) if self.worst_pair else None,
                "pairs_checked": self.pairs_checked, "tol": self.tol, "verdict": self.verdict}


def pair_list(n: int, pairs: str | int | None = None, seed: int = 0) -> list[tuple[int, int]]:
    """All pairs for "all" (or None with n <= 30), otherwise ``pairs`` distinct sampled pairs."""
    every = list(itertools.combinations(range(n), 2))
    if pairs == "all" or (pairs is None and n <= VERIFY_ALL_PAIRS_MAX_N):
        return every
    k = VERIFY_SAMPLED_PAIRS if pairs is None else int(pairs)
    if k >= len(every):
        return every
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(every), size=k, replace=False))
    return [every[i] for i in idx]


def pair_distances(g: WeightedGraph, pairs: list[tuple[int, int]], p: PNormParam | float | str,
                   tol: float = DEFAULT_TOL) -> np.ndarray:
    p = as_pnorm(p)
    if p.p == 2:
        R = resistance_matrix(g, g.weights ** 2)
        return np.sqrt(np.array([R[s, t] for s, t in pairs]))
    return np.array([d_p(g, DemandPair(s, t), p, tol).primal_value for s, t in pairs])


def verify_sparsifier(g: WeightedGraph, h: WeightedGraph, p: PNormParam | float | str,
                      pairs: str | int | None = None, tol: float | None = None, seed: int = 0,
                      solve_tol: float = DEFAULT_TOL, reference: np.ndarray | None = None) -> VerifyReport:
    """max |d_{p,h} - d_{p,g}| / d_{p,g} over the chosen pairs.

    ``reference`` may carry precomputed d_{p,g} values for the same pair list.
    """
    p = as_pnorm(p)
    if g.n != h.n:
        raise GraphError("graphs must share the vertex set")
    if not (g.is_connected() and h.is_connected()):
        raise GraphError("both graphs must be connected")
    plist = pair_list(g.n, pairs, seed)
    if not plist:
        return VerifyReport(p, 0.0, None, 0, tol)
    base = pair_distances(g, plist, p, solve_tol) if reference is None else np.asarray(reference)
    other = pair_distances(h, plist, p, solve_tol)
    err = np.abs(other - base) / base
    worst = int(np.argmax(err))
    return VerifyReport(p, float(err[worst]), plist[worst], len(plist), tol)


# ---------------------------------------------------------------- resistance ratio

def _is_complete(g: WeightedGraph) -> bool:
    pairs = {(min(a, b), max(a, b)) for a, b in zip(g.tails.tolist(), g.heads.tolist())}
    return len(pairs) == g.n * (g.n - 1) // 2


def general_ratio_bound(n: int) -> float:
    """Lower bound on max/min R_eff for a non-complete graph on n vertices.

    For n = 3 the only non-complete connected graphs are paths, whose ratio is at least 2.
    """
    if n < 3:
        raise GraphError("need n >= 3")
    return 2.0 if n == 3 else 1 + 1 / (n * n - 4 * n + 3)


@dataclass
class RatioReport:
    max_resistance: float
    min_resistance: float
    ratio: float
    bound: float
    argmax: tuple[int, int]
    argmin: tuple[int, int]
    tol: float = 1e-12

    @property
    def verdict(self) -> bool:
        return self.ratio >= self.bound - self.tol

    def to_dict(self) -> dict:
        return {"max_resistance": self.max_resistance, "min_resistance": self.min_resistance,
                "ratio": self.ratio, "bound": self.bound, "argmax": list(self.argmax),
                "argmin": list(self.argmin), "verdict": self.verdict}


def resistance_ratio(g: WeightedGraph, bound: float | None = None, tol: float = 1e-12) -> RatioReport:
    """max/min effective resistance over all pairs, conductances = w.

    The default bound is 1 for complete graphs and ``general_ratio_bound(n)`` otherwise.
    """
    if g.n < 3:
        raise GraphError("need n >= 3")
    R = resistance_matrix(g)
    iu = np.triu_indices(g.n, 1)
    vals = R[iu]
    hi, lo = int(np.argmax(vals)), int(np.argmin(vals))
    if bound is None:
        bound = 1.0 if _is_complete(g) else general_ratio_bound(g.n)
    return RatioReport(float(vals[hi]), float(vals[lo]), float(vals[hi] / vals[lo]), bound,
                       (int(iu[0][hi]), int(iu[1][hi])), (int(iu[0][lo]), int(iu[1][lo])), tol)


# ---------------------------------------------------------------- symmetric family

class ClosedFormMismatch(RuntimeError):
    pass


def symmetric_closed_forms(n: int, alpha: float, beta: float) -> tuple[float, float, float]:
    """(R_st, R_A, R_B) on K_n minus {s,t}: alpha on edges at s or t, beta elsewhere."""
    r_st = 2 / ((n - 2) * alpha)
    r_b = 2 / (2 * alpha + (n - 2) * beta)
    r_a = (1 + 1 / (n - 2) - (n - 3) * beta / (2 * alpha + (n - 2) * beta)) / (2 * alpha)
    return r_st, r_a, r_b


@dataclass
class SymmetricFamilyReport:
    n: int
    alpha: float
    beta: float
    r_st: float
    r_a: float
    r_b: float
    solver: tuple[float, float, float]
    mismatch: float
    foster_lhs: float
    ratio: float
    claim_bound: float = field(init=False)

    def __post_init__(self) -> None:
        self.claim_bound = 1 + 1 / (10 * self.n)

    @property
    def verdict(self) -> bool:
        return self.ratio > self.claim_bound

    def to_dict(self) -> dict:
        return {"n": self.n, "alpha": self.alpha, "beta": self.beta, "r_st": self.r_st,
                "r_a": self.r_a, "r_b": self.r_b, "solver": list(self.solver),
                "mismatch": self.mismatch, "foster_lhs": self.foster_lhs, "ratio": self.ratio,
                "claim_bound": self.claim_bound, "verdict": self.verdict}


def symmetric_family(n: int, alpha: float = 1.0, beta: float = 1.0, tol: float = 1e-9) -> SymmetricFamilyReport:
    """Closed forms for K_n minus {0,1}, checked against a Laplacian solve and Foster's identity."""
    if n < 5:
        raise GraphError("the symmetric family needs n >= 5")
    if alpha <= 0 or beta <= 0:
        raise GraphError("alpha and beta must be positive")
    r_st, r_a, r_b = symmetric_closed_forms(n, alpha, beta)
    R = resistance_matrix(clique_minus_edge(n, alpha, beta))
    solved = (float(R[0, 1]), float(R[0, 2]), float(R[2, 3]))
    mismatch = max(abs(x - y) / y for x, y in zip(solved, (r_st, r_a, r_b)))
    foster = 2 * (n - 2) * alpha * r_a + math.comb(n - 2, 2) * beta * r_b
    if mismatch > tol:
        raise ClosedFormMismatch(f"closed forms disagree with the Laplacian solve by {mismatch:.3g}")
    if abs(foster - (n - 1)) > tol * (n - 1):
        raise ClosedFormMismatch(f"Foster identity off: {foster!r} vs {n - 1}")
    vals = (r_st, r_a, r_b)
    return SymmetricFamilyReport(n, alpha, beta, r_st, r_a, r_b, solved, mismatch, foster,
                                 max(vals) / min(vals))


def symmetric_ratio_grid(ns=range(5, 41), ratios: np.ndarray | None = None) -> dict:
    """Closed-form max/min ratio over a (n, beta/alpha) grid against 1 + 1/(10 n)."""
    ratios = np.geomspace(0.01, 100, 401) if ratios is None else np.asarray(ratios)
    worst = None
    for n in ns:
        for r in ratios:
            vals = symmetric_closed_forms(n, 1.0, float(r))
            margin = max(vals) / min(vals) - (1 + 1 / (10 * n))
            if worst is None or margin < worst[0]:
                worst = (margin, n, float(r))
    return {"min_margin": worst[0], "n": worst[1], "beta_over_alpha": worst[2],
            "points": len(list(ns)) * len(ratios), "verdict": worst[0] > 0}


# ---------------------------------------------------------------- degree conditions

@dataclass
class DegreeConditionReport:
    n: int
    complete: bool
    conditions: dict[str, bool]
    ratio: float | None
    bound: float
    tol: float

    @property
    def applicable(self) -> bool:
        return not self.complete and any(self.conditions.values())

    @property
    def verdict(self) -> bool:
        return not self.applicable or self.ratio >= self.bound - self.tol

    def to_dict(self) -> dict:
        return {"n": self.n, "complete": self.complete, "conditions": self.conditions,
                "applicable": self.applicable, "ratio": self.ratio, "bound": self.bound,
                "verdict": self.verdict}


def degree_condition_check(g: WeightedGraph, tol: float = 1e-9) -> DegreeConditionReport:
    """Evaluate the weighted-degree conditions that force max/min R_eff >= 1 + 1/(2(n-1)).

    Degrees, neighbour counts and pair weights are taken on the merged simple graph.
    """
    if g.n < 3:
        raise GraphError("need n >= 3")
    s = g.merged()
    n = s.n
    W = np.zeros((n, n))
    W[s.tails, s.heads] = s.weights
    W = W + W.T
    deg = W.sum(axis=1)
    N = (W > 0).sum(axis=1)
    m = int(N.sum()) // 2
    wE = float(s.weights.sum())
    Dbar = 2 * wE / n
    slack = 1 + 1 / (2 * n)
    complete = m == n * (n - 1) // 2
    pair = deg[:, None] + deg[None, :] + 2 * W
    np.fill_diagonal(pair, np.inf)
    inner = float(np.dot(deg, N))
    scale = max(inner, 4 * m * wE / n)
    rel = 1e-12
    conds = {
        "min_degree": bool(deg.min() <= Dbar / 2 * slack * (1 + rel)),
        "pair_degree": bool(pair.min() <= 2 * Dbar * slack * (1 + rel)),
        "regular": bool(np.all(N == N[0])),
        "equal_weighted_degree": bool(np.allclose(deg, deg[0], rtol=1e-12, atol=0)),
        "equal_weights": bool(np.allclose(s.weights, s.weights[0], rtol=1e-12, atol=0)),
        "covariance": bool(inner >= 4 * m * wE / n - rel * scale),
        "expectation": bool(inner <= 4 * m * wE / n - 2 * wE + rel * scale),
    }
    bound = 1 + 1 / (2 * (n - 1))
    rep = DegreeConditionReport(n, complete, conds, None, bound, tol)
    if rep.applicable:
        rep.ratio = resistance_ratio(g).ratio
    return rep


# ---------------------------------------------------------------- expander sparsifier of K_n

@dataclass
class ExpanderReport:
    n: int
    eps: float
    degree: int
    weight: float
    seed: int
    graph: WeightedGraph
    edge_count: int
    max_rel_error: float
    ratio: RatioReport

    @property
    def verdict(self) -> bool:
        return self.max_rel_error <= self.eps

    def to_dict(self) -> dict:
        return {"n": self.n, "eps": self.eps, "degree": self.degree, "weight": self.weight,
                "seed": self.seed, "edge_count": self.edge_count,
                "clique_edge_count": self.n * (self.n - 1) // 2,
                "max_rel_error": self.max_rel_error, "ratio": self.ratio.to_dict(),
                "verdict": self.verdict}


def expander_clique_sparsifier(n: int, eps: float, seed: int = 0, c: float = 8.0,
                               max_retries: int = MAX_RETRIES) -> ExpanderReport:
    """Random d-regular graph, d = ceil(c/eps), weight n/d, as a resistance sparsifier of unit K_n.

    The weight makes every weighted degree n, so 1/deg(s) + 1/deg(t) = 2/n.
    """
    if not 0 < eps < 1 or 1 / eps > n / 4:
        raise GraphError("need 0 < eps < 1 and 1/eps <= n/4")
    d = math.ceil(c / eps)
    if d >= n:
        raise GraphError(f"degree {d} is not below n = {n}; lower c or raise eps")
    weight = n / d
    for attempt in range(max_retries + 1):
        try:
            h = random_regular_multigraph(n, d, np.random.default_rng(seed + attempt), weight)
            break
        except GraphError:
            continue
    else:
        raise GraphError(f"expander generation failed after {max_retries + 1} attempts")
    R = resistance_matrix(h)
    iu = np.triu_indices(n, 1)
    err = float(np.max(np.abs(R[iu] - 2 / n)) / (2 / n))
    return ExpanderReport(n, eps, d, weight, seed + attempt, h, h.m, err, resistance_ratio(h))


# ---------------------------------------------------------------- clique-union lower bound

@dataclass
class UnionSensitivityReport:
    n: int
    eps: float
    cliques: int
    size: int
    edge_count: int
    min_change: float
    threshold: float
    edges_checked: int

    @property
    def verdict(self) -> bool:
        return self.min_change > self.threshold

    def to_dict(self) -> dict:
        return {"n": self.n, "eps": self.eps, "cliques": self.cliques, "size": self.size,
                "vertices": self.cliques * self.size, "edge_count": self.edge_count,
                "min_change": self.min_change, "threshold": self.threshold,
                "edges_checked": self.edges_checked, "verdict": self.verdict}


def grounded_resistances(g: WeightedGraph, members: list[int]) -> np.ndarray:
    """R_eff (conductances w) among ``members``, one grounded Cholesky solve per member.

    Each value is read off a solution entry rather than formed as a difference
    of pseudoinverse entries, so tiny conductances elsewhere do not cost accuracy.
    """
    L = g.laplacian()
    k = len(members)
    R = np.zeros((k, k))
    for i, a in enumerate(members):
        keep = np.array([v for v in range(g.n) if v != a])
        pos = {int(v): j for j, v in enumerate(keep)}
        rhs = np.zeros((g.n - 1, k))
        for j, b in enumerate(members):
            if b != a:
                rhs[pos[b], j] = 1.0
        x = cho_solve(cho_factor(L[np.ix_(keep, keep)]), rhs)
        for j, b in enumerate(members):
            if b != a:
                R[i, j] = x[pos[b], j]
    return 0.5 * (R + R.T)


def union_removal_sensitivity(n: int, eps: float, link_weight: float = UNION_LINK_WEIGHT,
                              size: int | None = None) -> UnionSensitivityReport:
    """Drop each intra-clique edge of the clique union and record the largest relative
    R_eff change it causes; the report keeps the smallest of these over all edges.

    ceil(sqrt(eps) n) cliques of size ceil(eps^-1/2).  The change is measured over
    pairs inside the clique that lost the edge (a lower bound on the change over
    all pairs).  A removal that disconnects the graph counts as an infinite change.
    """
    if not 0 < eps < 1:
        raise GraphError("eps must lie in (0, 1)")
    count = math.ceil(math.sqrt(eps) * n - 1e-12)
    size = size or math.ceil(eps ** -0.5 - 1e-12)
    g = clique_union(count, size, link_weight)
    off = ~np.eye(size, dtype=bool)
    base: dict[int, np.ndarray] = {}
    worst = math.inf
    intra = [e for e, (a, b, w) in enumerate(g.edges) if a // size == b // size]
    for e in intra:
        c = g.edges[e][0] // size
        members = list(range(c * size, (c + 1) * size))
        if c not in base:
            base[c] = grounded_resistances(g, members)
        h = WeightedGraph.from_edges(g.n, [x for i, x in enumerate(g.edges) if i != e],
                                     check_connected=False)
        if not h.is_connected():
            change = math.inf
        else:
            R0, R1 = base[c], grounded_resistances(h, members)
            change = float(np.max(np.abs(R1[off] - R0[off]) / R0[off]))
        worst = min(worst, change)
    return UnionSensitivityReport(n, eps, count, size, g.m, worst, eps / 4, len(intra))
