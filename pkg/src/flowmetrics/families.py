"""Standard graph constructions used by the experiments and the test corpus."""

from __future__ import annotations

import itertools

import numpy as np

from .graph import GraphError, WeightedGraph


def path_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph.from_edges(n, [(i, i + 1, weight) for i in range(n - 1)])


def cycle_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph.from_edges(n, [(i, (i + 1) % n, weight) for i in range(n)])


def star_graph(k: int, weights: list[float] | None = None) -> WeightedGraph:
    """Star with centre 0 and leaves 1..k."""
    weights = [1.0] * k if weights is None else weights
    return WeightedGraph.from_edges(k + 1, [(0, i + 1, w) for i, w in enumerate(weights)])


def complete_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph.from_edges(n, [(a, b, weight) for a, b in itertools.combinations(range(n), 2)])


def parallel_edges(m: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph.from_edges(2, [(0, 1, weight)] * m)


def hypercube_graph(dim: int) -> WeightedGraph:
    n = 1 << dim
    edges = [(x, x ^ (1 << b), 1.0) for x in range(n) for b in range(dim) if x < x ^ (1 << b)]
    return WeightedGraph.from_edges(n, edges)


def clique_minus_edge(n: int, alpha: float = 1.0, beta: float = 1.0) -> WeightedGraph:
    """K_n without the edge {0, 1}; edges touching 0 or 1 weigh alpha, the rest beta."""
    edges = []
    for a, b in itertools.combinations(range(n), 2):
        if (a, b) == (0, 1):
            continue
        edges.append((a, b, alpha if a in (0, 1) else beta))
    return WeightedGraph.from_edges(n, edges)


def random_tree(n: int, rng: np.random.Generator, wmin: float = 0.1, wmax: float = 10.0) -> WeightedGraph:
    edges = [(int(rng.integers(0, v)), v, float(rng.uniform(wmin, wmax))) for v in range(1, n)]
    perm = rng.permutation(n)
    return WeightedGraph.from_edges(n, [(int(perm[a]), int(perm[b]), w) for a, b, w in edges])


def random_connected_graph(
    n: int,
    rng: np.random.Generator,
    density: float | None = None,
    wmin: float = 0.1,
    wmax: float = 10.0,
    log_uniform: bool = True,
) -> WeightedGraph:
    """Random spanning tree plus each remaining pair independently with prob ``density``."""
    density = rng.uniform(0.1, 0.8) if density is None else density

    def draw() -> float:
        if log_uniform:
            return float(np.exp(rng.uniform(np.log(wmin), np.log(wmax))))
        return float(rng.uniform(wmin, wmax))

    perm = rng.permutation(n)
    present = set()
    edges = []
    for v in range(1, n):
        a, b = int(perm[rng.integers(0, v)]), int(perm[v])
        present.add((min(a, b), max(a, b)))
        edges.append((a, b, draw()))
    for a, b in itertools.combinations(range(n), 2):
        if (a, b) not in present and rng.random() < density:
            edges.append((a, b, draw()) if rng.random() < 0.5 else (b, a, draw()))
    order = rng.permutation(len(edges))
    return WeightedGraph.from_edges(n, [edges[i] for i in order])


def random_corpus(count: int, seed: int, nmin: int = 3, nmax: int = 8,
                  wmin: float = 0.1, wmax: float = 10.0) -> list[WeightedGraph]:
    rng = np.random.default_rng(seed)
    return [random_connected_graph(int(rng.integers(nmin, nmax + 1)), rng, wmin=wmin, wmax=wmax)
            for _ in range(count)]


def _avoiding_matching(n: int, used: set[tuple[int, int]], rng: np.random.Generator) -> list[tuple[int, int]] | None:
    """Random perfect matching avoiding ``used``: each vertex in random order takes a random
    free partner it is not yet joined to.  Returns None when it gets stuck."""
    free = set(range(n))
    pairs = []
    for v in rng.permutation(n):
        v = int(v)
        if v not in free:
            continue
        free.discard(v)
        options = sorted(u for u in free if (min(u, v), max(u, v)) not in used)
        if not options:
            return None
        u = options[int(rng.integers(len(options)))]
        free.discard(u)
        pairs.append((min(u, v), max(u, v)))
    return pairs


def random_regular_multigraph(n: int, d: int, rng: np.random.Generator, weight: float = 1.0,
                              max_tries: int = 200) -> WeightedGraph:
    """Union of ``d`` random perfect matchings, each redrawn until it avoids earlier edges."""
    if n % 2:
        raise GraphError("perfect-matching construction needs an even vertex count")
    if d >= n:
        raise GraphError("degree must be below n for a simple regular graph")
    used: set[tuple[int, int]] = set()
    edges: list[tuple[int, int, float]] = []
    for _ in range(d):
        for _attempt in range(max_tries):
            pairs = _avoiding_matching(n, used, rng)
            if pairs is not None:
                break
        else:
            raise GraphError("could not draw a matching disjoint from the previous ones")
        used.update(pairs)
        edges.extend((a, b, weight) for a, b in pairs)
    g = WeightedGraph.from_edges(n, edges, check_connected=False)
    if not g.is_connected():
        raise GraphError("generated regular graph is disconnected")
    return g


def clique_union(num_cliques: int, size: int, link_weight: float = 1e-9) -> WeightedGraph:
    """Disjoint unit cliques chained by one light edge between consecutive cliques."""
    edges = []
    for c in range(num_cliques):
        base = c * size
        edges.extend((base + a, base + b, 1.0) for a, b in itertools.combinations(range(size), 2))
        if c + 1 < num_cliques:
            edges.append((base + size - 1, base + size, link_weight))
    return WeightedGraph.from_edges(num_cliques * size, edges)
