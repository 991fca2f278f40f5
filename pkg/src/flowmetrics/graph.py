"""Weighted graphs, demand pairs, the p/q parameter and incidence algebra.

Orientation convention: every edge is stored as ``(tail, head, weight)`` in file
order.  The signed incidence matrix ``B`` has ``B[e, tail] = +1`` and
``B[e, head] = -1``, so ``(B phi)_e = phi_tail - phi_head`` and a positive flow
value moves mass from tail to head.  ``divergence(f) = B^T f`` is then the net
outflow at each vertex and a unit s-t flow satisfies ``B^T f = chi_s - chi_t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components

INF_P_THRESHOLD = 1e6


class GraphError(ValueError):
    """Invalid graph data or a graph that violates a required invariant."""


class ParseError(GraphError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected weighted (multi)graph with a fixed edge orientation.

    Instances are immutable; the edge arrays are read-only numpy views.
    """

    n: int
    tails: np.ndarray
    heads: np.ndarray
    weights: np.ndarray
    check_connected: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        tails = np.asarray(self.tails, dtype=np.int64).reshape(-1)
        heads = np.asarray(self.heads, dtype=np.int64).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise GraphError(f"vertex count must be a positive integer, got {self.n!r}")
        if not (len(tails) == len(heads) == len(weights)):
            raise GraphError("tails, heads and weights must have equal length")
        if len(weights):
            if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
                bad = int(np.flatnonzero(~(np.isfinite(weights) & (weights > 0)))[0])
                raise GraphError(f"edge {bad}: weight must be positive and finite")
            if tails.min() < 0 or heads.min() < 0 or max(tails.max(), heads.max()) >= self.n:
                raise GraphError("edge endpoint out of range")
            loops = np.flatnonzero(tails == heads)
            if len(loops):
                raise GraphError(f"edge {int(loops[0])}: self-loops are not allowed")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "tails", _frozen(tails))
        object.__setattr__(self, "heads", _frozen(heads))
        object.__setattr__(self, "weights", _frozen(weights))
        if self.check_connected and not self.is_connected():
            raise GraphError("graph is not connected")

    @classmethod
    def from_edges(
        cls, n: int, edges: Iterable[Sequence[float]], check_connected: bool = True
    ) -> "WeightedGraph":
        edges = list(edges)
        if not edges:
            return cls(n, np.zeros(0, int), np.zeros(0, int), np.zeros(0), check_connected)
        arr = np.asarray(edges, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise GraphError("edges must be (tail, head, weight) triples")
        if np.any(arr[:, :2] != np.round(arr[:, :2])):
            raise GraphError("vertex indices must be integers")
        return cls(n, arr[:, 0].astype(int), arr[:, 1].astype(int), arr[:, 2], check_connected)

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(w)) for a, b, w in zip(self.tails, self.heads, self.weights)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.tails, other.tails)
            and np.array_equal(self.heads, other.heads)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.tails.tobytes(), self.heads.tobytes(), self.weights.tobytes()))

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        adj = coo_matrix((np.ones(self.m), (self.tails, self.heads)), shape=(self.n, self.n))
        ncomp, _ = connected_components(adj, directed=False)
        return ncomp == 1

    def components(self) -> np.ndarray:
        adj = coo_matrix((np.ones(self.m), (self.tails, self.heads)), shape=(self.n, self.n))
        return connected_components(adj, directed=False)[1]

    def with_weights(self, weights: np.ndarray) -> "WeightedGraph":
        return WeightedGraph(self.n, self.tails, self.heads, weights, check_connected=False)

    def scaled(self, c: float) -> "WeightedGraph":
        return self.with_weights(self.weights * c)

    def incidence(self) -> csr_matrix:
        """Signed m x n incidence matrix (+1 at the tail, -1 at the head)."""
        rows = np.concatenate([np.arange(self.m), np.arange(self.m)])
        cols = np.concatenate([self.tails, self.heads])
        vals = np.concatenate([np.ones(self.m), -np.ones(self.m)])
        return csr_matrix((vals, (rows, cols)), shape=(self.m, self.n))

    def laplacian(self, conductances: np.ndarray | None = None) -> np.ndarray:
        """Dense Laplacian ``B^T C B``; conductances default to the weights."""
        c = self.weights if conductances is None else np.asarray(conductances, dtype=float)
        L = np.zeros((self.n, self.n))
        np.add.at(L, (self.tails, self.tails), c)
        np.add.at(L, (self.heads, self.heads), c)
        np.add.at(L, (self.tails, self.heads), -c)
        np.add.at(L, (self.heads, self.tails), -c)
        return L

    def degrees(self) -> np.ndarray:
        """Number of incident edges per vertex (parallel edges counted)."""
        return np.bincount(self.tails, minlength=self.n) + np.bincount(self.heads, minlength=self.n)

    def weighted_degrees(self, weights: np.ndarray | None = None) -> np.ndarray:
        w = self.weights if weights is None else weights
        return np.bincount(self.tails, w, minlength=self.n) + np.bincount(self.heads, w, minlength=self.n)

    def incident_edges(self, x: int) -> np.ndarray:
        return np.flatnonzero((self.tails == x) | (self.heads == x))

    def other_end(self, e: int, x: int) -> int:
        a, b = int(self.tails[e]), int(self.heads[e])
        if x == a:
            return b
        if x == b:
            return a
        raise GraphError(f"vertex {x} is not an endpoint of edge {e}")

    def merged(self) -> "WeightedGraph":
        """Simple graph with parallel edges summed (the usual conductance merge)."""
        key: dict[tuple[int, int], float] = {}
        for a, b, w in self.edges:
            k = (min(a, b), max(a, b))
            key[k] = key.get(k, 0.0) + w
        return WeightedGraph.from_edges(self.n, [(a, b, w) for (a, b), w in key.items()],
                                        check_connected=False)

    def is_tree(self) -> bool:
        return self.m == self.n - 1 and self.is_connected()


@dataclass(frozen=True)
class DemandPair:
    source: int
    target: int

    def __post_init__(self) -> None:
        if self.source == self.target:
            raise GraphError("demand pair needs distinct source and target")
        if self.source < 0 or self.target < 0:
            raise GraphError("vertex index must be non-negative")

    def check(self, g: WeightedGraph) -> None:
        if self.source >= g.n or self.target >= g.n:
            raise GraphError(f"demand pair ({self.source}, {self.target}) out of range for n={g.n}")

    def vector(self, n: int) -> np.ndarray:
        chi = np.zeros(n)
        chi[self.source] = 1.0
        chi[self.target] = -1.0
        return chi

    def reversed(self) -> "DemandPair":
        return DemandPair(self.target, self.source)


@dataclass(frozen=True)
class PNormParam:
    """Norm exponent p in [1, inf] together with its Hölder conjugate q.

    Finite p above ``INF_P_THRESHOLD`` is coerced to infinity.
    """

    p: float

    def __post_init__(self) -> None:
        p = float(self.p)
        if math.isnan(p) or p < 1:
            raise GraphError(f"p must lie in [1, inf], got {self.p!r}")
        if p > INF_P_THRESHOLD:
            p = math.inf
        object.__setattr__(self, "p", p)

    @property
    def q(self) -> float:
        if self.p == 1:
            return math.inf
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1)

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.p)

    @classmethod
    def parse(cls, text: str | float) -> "PNormParam":
        if isinstance(text, str) and text.strip().lower() in {"inf", "infinity", "∞"}:
            return cls(math.inf)
        return cls(float(text))

    def __str__(self) -> str:
        return "inf" if self.is_inf else repr(self.p)


def as_pnorm(p: PNormParam | float | str) -> PNormParam:
    if isinstance(p, PNormParam):
        return p
    if isinstance(p, str):
        return PNormParam.parse(p)
    return PNormParam(p)


def divergence(g: WeightedGraph, f: np.ndarray) -> np.ndarray:
    """``B^T f``: net outflow of ``f`` at every vertex."""
    f = np.asarray(f, dtype=float)
    if f.shape != (g.m,):
        raise GraphError(f"flow has {f.shape} entries, graph has {g.m} edges")
    return np.bincount(g.tails, f, minlength=g.n) - np.bincount(g.heads, f, minlength=g.n)


def potential_differences(g: WeightedGraph, phi: np.ndarray) -> np.ndarray:
    """``B phi``: potential drop from tail to head on every edge."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (g.n,):
        raise GraphError(f"potential has {phi.shape} entries, graph has {g.n} vertices")
    return phi[g.tails] - phi[g.heads]


def potential_edge_costs(g: WeightedGraph, phi: np.ndarray) -> np.ndarray:
    """``W B phi``: entry ``w(e) * (phi_tail - phi_head)`` per edge."""
    return g.weights * potential_differences(g, phi)


def parse_graph(text: str) -> WeightedGraph:
    """Parse the edge-list format: ``n m`` header then ``u v w`` lines, ``#`` comments."""
    header: tuple[int, int] | None = None
    edges: list[tuple[int, int, float]] = []
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        last_line = lineno
        parts = line.split()
        if header is None:
            if len(parts) != 2:
                raise ParseError("expected header 'n m'", lineno)
            try:
                n, m = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"malformed header {line!r}", lineno) from None
            if n < 1 or m < 0:
                raise ParseError("header needs n >= 1 and m >= 0", lineno)
            header = (n, m)
            continue
        if len(parts) != 3:
            raise ParseError(f"expected 'u v w', got {line!r}", lineno)
        try:
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"malformed edge {line!r}", lineno) from None
        n = header[0]
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError(f"vertex out of range in {line!r} (n={n})", lineno)
        if u == v:
            raise ParseError(f"self-loop at vertex {u}", lineno)
        if not (math.isfinite(w) and w > 0):
            raise ParseError(f"weight must be positive and finite, got {parts[2]}", lineno)
        if len(edges) >= header[1]:
            raise ParseError(f"more edge lines than the declared m={header[1]}", lineno)
        edges.append((u, v, w))
    if header is None:
        raise ParseError("empty document: missing header 'n m'")
    if len(edges) != header[1]:
        raise ParseError(f"declared m={header[1]} edges, found {len(edges)}", last_line or None)
    g = WeightedGraph.from_edges(header[0], edges, check_connected=False)
    if not g.is_connected():
        comp = g.components()
        lonely = int(np.flatnonzero(comp != comp[0])[0])
        raise ParseError(f"graph is disconnected: vertex {lonely} unreachable from vertex 0",
                         last_line or None)
    return g


def serialize_graph(g: WeightedGraph, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append(f"{g.n} {g.m}")
    lines.extend(f"{a} {b} {w:.17g}" for a, b, w in g.edges)
    return "\n".join(lines) + "\n"


def read_graph(path: str) -> WeightedGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def write_graph(g: WeightedGraph, path: str, comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_graph(g, comment))
