"""Y-Delta obstruction: forced triangle weights from G1 and G2 across p."""

import argparse
import csv
import sys

import numpy as np

from flowmetrics.transforms import wye_delta_obstruction

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pmin", type=float, default=1.1)
    ap.add_argument("--pmax", type=float, default=10.0)
    ap.add_argument("--steps", type=int, default=25)
    a = ap.parse_args()
    ps = sorted(set(np.round(np.geomspace(a.pmin, a.pmax, a.steps), 4)) | {2.0, 3.0})
    w = csv.writer(sys.stdout)
    w.writerow(["p", "alpha1", "alpha2", "gap", "solver_alpha1", "solver_alpha2", "consistent"])
    for p in ps:
        r = wye_delta_obstruction(float(p))
        w.writerow([p, f"{r.alpha1:.9f}", f"{r.alpha2:.9f}", f"{r.gap:.9f}",
                    f"{r.solver_alpha1:.9f}", f"{r.solver_alpha2:.9f}", r.consistent])
