"""Foster sums on cycles and random graphs as p varies, against the [n-1, m] bracket."""

import argparse
import csv
import sys

import numpy as np

from flowmetrics.families import cycle_graph, random_connected_graph
from flowmetrics.props import foster_sum

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--p", type=float, nargs="+", default=[1.0, 1.25, 1.5, 2, 3, 5, 10, 100, 1000])
    a = ap.parse_args()
    graphs = {"cycle": cycle_graph(a.n),
              "random": random_connected_graph(a.n, np.random.default_rng(a.seed), density=0.5)}
    w = csv.writer(sys.stdout)
    w.writerow(["graph", "n", "m", "p", "sum", "lower", "upper", "verdict"])
    for name, g in graphs.items():
        for p in a.p:
            r = foster_sum(g, p, solve_tol=1e-6 if p > 20 else 1e-8)
            w.writerow([name, g.n, g.m, p, f"{r.sum:.8f}", f"{r.lower_bound:g}", f"{r.upper_bound:g}", r.verdict])
