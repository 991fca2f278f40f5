"""Resistance-ratio and clique-union experiments behind the sparsifier lower bounds."""

import argparse
import math

from flowmetrics.families import clique_minus_edge, hypercube_graph
from flowmetrics.graph import GraphError
from flowmetrics.sparsify import (expander_clique_sparsifier, resistance_ratio, symmetric_ratio_grid,
                                  union_removal_sensitivity)


def main(args) -> None:
    cube = resistance_ratio(hypercube_graph(3))
    print(f"Q3: ratio {cube.ratio:.6f}  bound {cube.bound:.6f}")
    for n in (4, 5, 8, 12):
        r = resistance_ratio(clique_minus_edge(n))
        print(f"K{n}-e: ratio {r.ratio:.9f}  bound {r.bound:.9f}")
    grid = symmetric_ratio_grid()
    print(f"symmetric family: {grid['points']} points, min margin {grid['min_margin']:.4f}, "
          f"verdict {grid['verdict']}")
    for eps in args.eps:
        try:
            rep = expander_clique_sparsifier(args.n, eps, seed=args.seed)
        except GraphError as exc:
            print(f"expander n={args.n} eps={eps}: skipped ({exc})")
            continue
        print(f"expander n={args.n} eps={eps}: degree {rep.degree}, {rep.edge_count} edges, "
              f"max rel err {rep.max_rel_error:.4f}, ratio {rep.ratio.ratio:.4f} (bound {rep.ratio.bound:.4f})")
    print("clique union: n eps size cliques min_change threshold")
    for n in (16, 32, 64):
        for eps in args.eps:
            for size in (None, 3, 4):
                r = union_removal_sensitivity(n, eps, size=size)
                ch = "inf" if math.isinf(r.min_change) else f"{r.min_change:.4f}"
                print(f"  {n:3d} {eps:.2f} {r.size:2d} {r.cliques:3d} {ch} {r.threshold:.4f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--eps", type=float, nargs="+", default=[0.25, 0.5])
    ap.add_argument("--seed", type=int, default=0)
    main(ap.parse_args())
