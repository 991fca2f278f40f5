"""Sparsify K_n over a grid of (p, eps, seed) and record size and worst pair error."""

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field

from flowmetrics.families import complete_graph
from flowmetrics.sparsify import build_sparsifier, pair_distances, pair_list, verify_sparsifier


@dataclass
class SweepConfig:
    n: int = 30
    ps: list[float] = field(default_factory=lambda: [1.5, 2.0, 3.0])
    epss: list[float] = field(default_factory=lambda: [0.25, 0.5])
    seeds: int = 5
    oversample: float = 1.0


def run(cfg: SweepConfig, out) -> None:
    g = complete_graph(cfg.n)
    plist = pair_list(cfg.n, "all")
    w = csv.writer(out)
    w.writerow(["n", "p", "eps", "seed", "method", "edges", "attempts", "max_rel_error", "within_eps", "seconds"])
    for p in cfg.ps:
        ref = pair_distances(g, plist, p)
        for eps in cfg.epss:
            for seed in range(cfg.seeds):
                t0 = time.perf_counter()
                res = build_sparsifier(g, p, eps, seed=seed, oversample=cfg.oversample)
                err = verify_sparsifier(g, res.graph_after, p, pairs="all", reference=ref).max_rel_error
                w.writerow([cfg.n, p, eps, seed, res.method, res.edge_count, res.attempts,
                            f"{err:.6f}", err <= eps, f"{time.perf_counter() - t0:.2f}"])
                out.flush()


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--p", type=float, nargs="+", default=[1.5, 2.0, 3.0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.25, 0.5])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--oversample", type=float, default=1.0)
    a = ap.parse_args()
    run(SweepConfig(a.n, a.p, a.eps, a.seeds, a.oversample), sys.stdout)
