"""Local graph reductions that preserve d_p, and the two non-existence witnesses
(Y-Delta for p not in {1, 2, inf}; star-mesh for p = inf)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls
from scipy.special import logsumexp

from .families import star_graph
from .graph import DemandPair, GraphError, PNormParam, WeightedGraph, as_pnorm
from .solve import d_p

INF_WEIGHT = 1e9
STAR_MESH_MAX_K = 20


@dataclass
class TransformResult:
    graph_after: WeightedGraph
    rule: str
    removed_vertices: list[int]
    removed_edges: list[int]
    created: list[tuple[int, int, float]]  # endpoints in the new numbering
    vertex_map: dict[int, int]  # old index -> new index for surviving vertices

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "removed_vertices": self.removed_vertices,
            "removed_edges": self.removed_edges,
            "created": [{"u": a, "v": b, "w": w} for a, b, w in self.created],
            "vertex_map": {str(k): v for k, v in self.vertex_map.items()},
            "n_after": self.graph_after.n,
            "m_after": self.graph_after.m,
        }


def _rebuild(g: WeightedGraph, drop_vertices: set[int], drop_edges: set[int],
             new_edges: list[tuple[int, int, float]], rule: str) -> TransformResult:
    keep = [v for v in range(g.n) if v not in drop_vertices]
    vmap = {v: i for i, v in enumerate(keep)}
    edges = [(vmap[a], vmap[b], w) for i, (a, b, w) in enumerate(g.edges) if i not in drop_edges]
    created = [(vmap[a], vmap[b], w) for a, b, w in new_edges]
    after = WeightedGraph.from_edges(len(keep), edges + created)
    return TransformResult(after, rule, sorted(drop_vertices), sorted(drop_edges), created, vmap)


def series_weight(alpha: float, beta: float, p: PNormParam | float | str) -> float:
    """Weight of the single edge replacing a path alpha - beta: (alpha^-p + beta^-p)^(-1/p)."""
    p = as_pnorm(p)
    if p.is_inf:
        return min(alpha, beta)
    return float(math.exp(-logsumexp([-p.p * math.log(alpha), -p.p * math.log(beta)]) / p.p))


def parallel_weight(alpha: float, beta: float, p: PNormParam | float | str) -> float:
    """Weight of the single edge replacing two parallel edges: (alpha^q + beta^q)^(1/q)."""
    q = as_pnorm(p).q
    if math.isinf(q):
        return max(alpha, beta)
    return float(math.exp(logsumexp([q * math.log(alpha), q * math.log(beta)]) / q))


def reduce_degree2(g: WeightedGraph, x: int, p: PNormParam | float | str) -> TransformResult:
    """Eliminate a degree-2 vertex x, joining its two neighbours by the series weight."""
    inc = g.incident_edges(x)
    if len(inc) != 2:
        raise GraphError(f"vertex {x} has degree {len(inc)}, expected 2")
    e1, e2 = (int(e) for e in inc)
    a, b = g.other_end(e1, x), g.other_end(e2, x)
    if a == b:
        raise GraphError(f"both edges at vertex {x} lead to {a}; merge them with merge_parallel")
    gamma = series_weight(g.weights[e1], g.weights[e2], p)
    return _rebuild(g, {x}, {e1, e2}, [(a, b, gamma)], "deg2")


def merge_parallel(g: WeightedGraph, e1: int, e2: int, p: PNormParam | float | str) -> TransformResult:
    """Replace two edges with the same endpoints by one edge of the parallel weight."""
    if e1 == e2:
        raise GraphError("need two distinct edges")
    ends1 = {int(g.tails[e1]), int(g.heads[e1])}
    ends2 = {int(g.tails[e2]), int(g.heads[e2])}
    if ends1 != ends2:
        raise GraphError(f"edges {e1} and {e2} are not parallel")
    gamma = parallel_weight(g.weights[e1], g.weights[e2], p)
    a, b = int(g.tails[e1]), int(g.heads[e1])
    return _rebuild(g, set(), {e1, e2}, [(a, b, gamma)], "parallel")


def wye_delta_weights(wa: float, wb: float, wc: float) -> tuple[float, float, float]:
    """d_2-preserving triangle weights (on {b,c}, {a,c}, {a,b}) for a star with weights wa, wb, wc."""
    s = wa * wa + wb * wb + wc * wc
    return (math.sqrt(wb * wb * wc * wc / s), math.sqrt(wa * wa * wc * wc / s),
            math.sqrt(wa * wa * wb * wb / s))


def wye_delta_p2(g: WeightedGraph, r: int) -> TransformResult:
    """Replace the star at a degree-3 vertex r by a triangle preserving d_2.

    A triangle edge that lands on an existing edge is merged with it (and
    with any other parallel copies) by the p = 2 parallel rule.
    """
    inc = [int(e) for e in g.incident_edges(r)]
    if len(inc) != 3:
        raise GraphError(f"vertex {r} has degree {len(inc)}, expected 3")
    nbrs = [g.other_end(e, r) for e in inc]
    if len(set(nbrs)) != 3:
        raise GraphError(f"vertex {r} needs three distinct neighbours")
    a, b, c = nbrs
    wa, wb, wc = (float(g.weights[e]) for e in inc)
    alpha, beta, gamma = wye_delta_weights(wa, wb, wc)
    drop = set(inc)
    created = []
    for (u, v), w in (((b, c), alpha), ((a, c), beta), ((a, b), gamma)):
        for e in range(g.m):
            if e not in drop and {int(g.tails[e]), int(g.heads[e])} == {u, v}:
                w = parallel_weight(w, float(g.weights[e]), 2.0)
                drop.add(e)
        created.append((u, v, w))
    return _rebuild(g, {r}, drop, created, "wye-delta")


# ---------------------------------------------------------------- Y-Delta obstruction

def obstruction_graphs(heavy: float = INF_WEIGHT) -> tuple[WeightedGraph, WeightedGraph]:
    """G1: unit star r=0 with leaves a=1, b=2, c=3.  G2: G1 plus v=4 tied to b and c by ``heavy``."""
    g1 = star_graph(3)
    g2 = WeightedGraph.from_edges(5, list(g1.edges) + [(4, 2, heavy), (4, 3, heavy)])
    return g1, g2


def triangle_replacement(g: WeightedGraph, alpha: float) -> WeightedGraph:
    """Drop the centre 0 of the star on {1,2,3} and add a triangle with uniform weight alpha."""
    rest = [(a - 1, b - 1, w) for a, b, w in g.edges if 0 not in (a, b)]
    tri = [(0, 1, alpha), (1, 2, alpha), (0, 2, alpha)]
    return WeightedGraph.from_edges(g.n - 1, tri + rest)


@dataclass
class ObstructionReport:
    p: PNormParam
    alpha1: float
    alpha2: float
    gap: float
    d_g1: float
    d_g1_replaced: float
    d_g2: float
    d_g2_replaced: float
    solver_alpha1: float
    solver_alpha2: float
    sensitivity: float
    tol: float = 1e-9
    consistent: bool = field(init=False)

    def __post_init__(self) -> None:
        self.consistent = self.gap <= self.tol

    def to_dict(self) -> dict:
        keys = ["alpha1", "alpha2", "gap", "d_g1", "d_g1_replaced", "d_g2", "d_g2_replaced",
                "solver_alpha1", "solver_alpha2", "sensitivity", "consistent"]
        out = {"p": str(self.p)}
        out.update({k: getattr(self, k) for k in keys})
        return out


def obstruction_alphas(p: PNormParam | float | str) -> tuple[float, float]:
    """Uniform triangle weights forced by G1 and by G2 respectively."""
    p = as_pnorm(p)
    q = p.q
    return (1 + 2 ** (q - 1)) ** (-1 / q), (2 ** (1 / (q - 1)) + 1) ** (-1 / p.p)


def wye_delta_obstruction(p: PNormParam | float | str, tol: float = 1e-9,
                          heavy: float = INF_WEIGHT) -> ObstructionReport:
    """Closed-form forced weights plus direct solves on G1, G2 and their triangle versions.

    The solver weights come from d_p(a,b) on each graph: on G1' (a uniform
    triangle) d_p(a,b) = 1/(alpha (1 + 2^(1-q))^(1/q)); on G2' (b and c
    tied) d_p(a,b) = 1/(alpha 2^(1/q)).  ``sensitivity`` is the relative
    change of d_p on G2 when the heavy weight is doubled.
    """
    p = as_pnorm(p)
    if p.p <= 1 or p.is_inf:
        raise GraphError("the obstruction is stated for 1 < p < inf")
    q = p.q
    a1, a2 = obstruction_alphas(p)
    ab = DemandPair(1, 2)
    g1, g2 = obstruction_graphs(heavy)
    d1 = d_p(g1, ab, p).primal_value
    d2 = d_p(g2, ab, p).primal_value
    d2_double = d_p(obstruction_graphs(2 * heavy)[1], ab, p).primal_value
    d1r = d_p(triangle_replacement(g1, a1), DemandPair(0, 1), p).primal_value
    d2r = d_p(triangle_replacement(g2, a2), DemandPair(0, 1), p).primal_value
    s1 = 1 / (d1 * (1 + 2 ** (1 - q)) ** (1 / q))
    s2 = 1 / (d2 * 2 ** (1 / q))
    return ObstructionReport(p, a1, a2, abs(a1 - a2), d1, d1r, d2, d2r, s1, s2,
                             abs(d2_double - d2) / d2, tol)


# ---------------------------------------------------------------- star-mesh at p = inf

@dataclass
class StarMeshReport:
    k: int
    feasible: bool
    weights: dict[tuple[int, int], float]
    residual: float
    worst_bipartition: list[int] | None
    worst_violation: float

    def to_dict(self) -> dict:
        return {"k": self.k, "feasible": self.feasible,
                "weights": [{"u": a, "v": b, "w": w} for (a, b), w in self.weights.items()],
                "residual": self.residual, "worst_bipartition": self.worst_bipartition,
                "worst_violation": self.worst_violation}


def star_mesh_cut_system(k: int, tol: float = 1e-9) -> StarMeshReport:
    """Can a nonnegative clique on the k leaves reproduce every leaf min-cut of the unit k-star?

    For each bipartition S of the leaves (S contains leaf 0, S proper) the
    clique's crossing weight must equal min(|S|, k - |S|).  Solved as
    nonnegative least squares; feasible iff the residual norm is <= tol.
    """
    if k < 2:
        raise GraphError("need k >= 2")
    if k > STAR_MESH_MAX_K:
        raise GraphError(f"k is capped at {STAR_MESH_MAX_K}")
    pairs = list(itertools.combinations(range(k), 2))
    rows, rhs, sides = [], [], []
    for mask in range(2 ** (k - 1) - 1):
        # leaf 0 is always on the S side; bits of mask pick the other members
        S = {0} | {i + 1 for i in range(k - 1) if mask >> i & 1}
        rows.append([1.0 if (i in S) != (j in S) else 0.0 for i, j in pairs])
        rhs.append(float(min(len(S), k - len(S))))
        sides.append(sorted(S))
    A, b = np.array(rows), np.array(rhs)
    x, res = nnls(A, b)
    viol = np.abs(A @ x - b)
    worst = int(np.argmax(viol))
    feasible = bool(res <= tol)
    return StarMeshReport(k, feasible, {pr: float(w) for pr, w in zip(pairs, x)}, float(res),
                          None if feasible else sides[worst], float(viol[worst]))
