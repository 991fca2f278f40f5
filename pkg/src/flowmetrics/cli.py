"""Command-line front end.  Every subcommand prints one JSON document (or CSV/text)
carrying a top-level "schema" field.

Exit codes: 0 success or verdict true, 1 verdict false, 2 usage or input error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

from .graph import INF_P_THRESHOLD, DemandPair, GraphError, PNormParam, read_graph, serialize_graph, write_graph
from .props import all_pairs, check_monotonicity, check_p_strong, commute_check, foster_sum
from .solve import DEFAULT_TOL, SolverError, d_p
from .sparsify import (build_sparsifier, degree_condition_check, expander_clique_sparsifier,
                       resistance_ratio, symmetric_family, symmetric_ratio_grid,
                       union_removal_sensitivity, verify_sparsifier)
from .families import clique_minus_edge, complete_graph
from .transforms import merge_parallel, reduce_degree2, star_mesh_cut_system, wye_delta_obstruction, wye_delta_p2

SCHEMA_VERSION = 1
DIGITS = 12
MAX_SEED = 2 ** 64 - 1

SCHEMAS = {
    "dist": "s, t, p, primal, dual, rel_gap, kkt_residual, iterations, method",
    "all-pairs": "n, p, gap_bound, values (n x n); --format csv prints the matrix only",
    "foster": "p, q, sum, lower_bound, upper_bound, max_edge_term, form, verdict",
    "p-strong": "p, exponent, triples_violated, violations [{x, y, z, excess}], verdict",
    "monotonicity": "s, t, p [list], values, nonincreasing, sandwich, powered, verdict, details",
    "commute": "hitting, commute, resistance (n x n), total_weight, mismatch, verdict",
    "reduce": "rule, removed_vertices, removed_edges, created [{u, v, w}], vertex_map, n_after, m_after, graph",
    "obstruction": "p, alpha1, alpha2, gap, d_g1, d_g1_replaced, d_g2, d_g2_replaced, solver_alpha1, "
                   "solver_alpha2, sensitivity, consistent",
    "star-mesh": "k, feasible, weights [{u, v, w}], residual, worst_bipartition, worst_violation",
    "sparsify": "edge_count, n, seed, eps, p, method, oversample, draws, attempts, kept_edges, "
                "score_sum, oversampling, graph",
    "verify": "p, max_rel_error, worst_pair, pairs_checked, tol, verdict",
    "experiment": "name plus the experiment's report fields and a verdict",
}


@dataclass
class RunConfig:
    command: str
    graph: str | None = None
    other: str | None = None
    p: PNormParam | None = None
    eps: float | None = None
    tol: float = DEFAULT_TOL
    seed: int = 0
    format: str = "json"
    pair: tuple[int, int] | None = None
    pairs: str | None = None
    extra: dict = field(default_factory=dict)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output helpers

def _round(x):
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{DIGITS}g}")
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if hasattr(x, "tolist"):
        return _round(x.tolist())
    if hasattr(x, "item"):
        return _round(x.item())
    return str(x)


def _emit(cmd: str, payload: dict, fmt: str, csv_text: str | None = None) -> None:
    doc = {"schema": f"flowmetrics.{cmd}/v{SCHEMA_VERSION}"}
    doc.update(_round(payload))
    if fmt == "json":
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    elif fmt == "csv":
        if csv_text is not None:
            sys.stdout.write(csv_text)
        else:
            sys.stdout.write("key,value\n")
            for k, v in doc.items():
                if not isinstance(v, (dict, list)):
                    sys.stdout.write(f"{k},{v}\n")
    else:
        for k, v in doc.items():
            sys.stdout.write(f"{k}: {json.dumps(v) if isinstance(v, (dict, list)) else v}\n")


# ---------------------------------------------------------------- argument types

def parse_p(text: str) -> PNormParam:
    try:
        value = math.inf if text.strip().lower() in {"inf", "infinity"} else float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid p {text!r}") from None
    if math.isnan(value) or value < 1:
        raise argparse.ArgumentTypeError(f"p must lie in [1, inf], got {text!r}")
    if math.isfinite(value) and value > INF_P_THRESHOLD:
        print(f"warning: p = {text} exceeds {INF_P_THRESHOLD:g}; treating it as inf", file=sys.stderr)
    return PNormParam(value)


def parse_tol(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid tolerance {text!r}") from None
    if not 0 < value <= 1e-2:
        raise argparse.ArgumentTypeError("tol must lie in (0, 1e-2]")
    return value


def parse_seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def parse_eps(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid eps {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("eps must lie in (0, 1)")
    return value


def parse_pairs(text: str) -> str:
    if text != "all":
        try:
            if int(text) < 1:
                raise ValueError
        except ValueError:
            raise argparse.ArgumentTypeError("--pairs takes 'all' or a positive count") from None
    return text


# ---------------------------------------------------------------- subcommands

def _need_graph(cfg: RunConfig):
    if cfg.graph is None:
        raise UsageError("--graph is required")
    return read_graph(cfg.graph)


def _need_p(cfg: RunConfig) -> PNormParam:
    if cfg.p is None:
        raise UsageError("--p is required")
    return cfg.p


def _pair(cfg: RunConfig, n: int) -> DemandPair:
    if cfg.pair is None:
        raise UsageError("--pair S T is required")
    if max(cfg.pair) >= n:
        raise UsageError(f"pair {cfg.pair} out of range for n={n}")
    return DemandPair(*cfg.pair)


def cmd_dist(cfg: RunConfig) -> int:
    g = _need_graph(cfg)
    d = _pair(cfg, g.n)
    rep = d_p(g, d, _need_p(cfg), cfg.tol)
    out = {"s": d.source, "t": d.target}
    out.update(rep.to_dict())
    out["method"] = rep.method
    _emit("dist", out, cfg.format)
    return 0


def cmd_all_pairs(cfg: RunConfig) -> int:
    g = _need_graph(cfg)
    D = all_pairs(g, _need_p(cfg), cfg.tol)
    _emit("all-pairs", D.to_dict(), cfg.format, D.to_csv(DIGITS))
    return 0


def cmd_foster(cfg: RunConfig) -> int:
    g = _need_graph(cfg)
    rep = foster_sum(g, _need_p(cfg), solve_tol=cfg.tol)
    _emit("foster", rep.to_dict(), cfg.format)
    return 0 if rep.verdict else 1


def cmd_p_strong(cfg: RunConfig) -> int:
    g = _need_graph(cfg)
    p = _need_p(cfg)
    exponent = cfg.extra.get("exponent") or p
    D = all_pairs(g, p, cfg.tol)
    viol = check_p_strong(D, tol=cfg.extra.get("check_tol", 1e-6), exponent=exponent)
    _emit("p-strong", {"p": str(p), "exponent": str(exponent), "triples_violated": len(viol),
                       "violations": [v.to_dict() for v in viol[:20]], "verdict": not viol},
          cfg.format)
    return 0 if not viol else 1


def cmd_monotonicity(cfg: RunConfig) -> int:
    g = _need_graph(cfg)
    d = _pair(cfg, g.n)
    p_list = cfg.extra.get("p_list") or [PNormParam(x) for x in (1, 1.5, 2, 3, 5, math.inf)]
    rep = check_monotonicity(g, d, p_list, solve_tol=cfg.tol)
    out = {"s": d.source, "t": d.target}
    out.update(rep.to_dict())
    _emit("monotonicity", out, cfg.format)
    return 0 if rep.verdict else 1


def cmd_commute(cfg: RunConfig) -> int:
    g = _need_graph(cfg)
    rep = commute_check(g, tol=cfg.extra.get("check_tol", 1e-8))
    _emit("commute", rep.to_dict(), cfg.format)
    return 0 if rep.verdict else 1


def cmd_reduce(cfg: RunConfig) -> int:
    g = _need_graph(cfg)
    rule = cfg.extra["rule"]
    if rule == "deg2":
        if cfg.extra.get("vertex") is None:
            raise UsageError("--vertex is required for deg2")
        res = reduce_degree2(g, cfg.extra["vertex"], _need_p(cfg))
    elif rule == "parallel":
        if not cfg.extra.get("edges"):
            raise UsageError("--edges E1 E2 is required for parallel")
        e1, e2 = cfg.extra["edges"]
        if max(e1, e2) >= g.m:
            raise UsageError(f"edge index out of range for m={g.m}")
        res = merge_parallel(g, e1, e2, _need_p(cfg))
    else:
        if cfg.p is not None and cfg.p.p != 2:
            raise UsageError("wye-delta preserves d_p only at p = 2")
        if cfg.extra.get("vertex") is None:
            raise UsageError("--vertex is required for wye-delta")
        res = wye_delta_p2(g, cfg.extra["vertex"])
    out = res.to_dict()
    out["graph"] = serialize_graph(res.graph_after)
    if cfg.extra.get("output"):
        write_graph(res.graph_after, cfg.extra["output"], comment=f"reduce --rule {rule}")
    _emit("reduce", out, cfg.format)
    return 0


def cmd_obstruction(cfg: RunConfig) -> int:
    rep = wye_delta_obstruction(_need_p(cfg))
    _emit("obstruction", rep.to_dict(), cfg.format)
    return 0 if rep.consistent else 1


def cmd_star_mesh(cfg: RunConfig) -> int:
    rep = star_mesh_cut_system(cfg.extra["k"])
    _emit("star-mesh", rep.to_dict(), cfg.format)
    return 0 if rep.feasible else 1


def cmd_sparsify(cfg: RunConfig) -> int:
    g = _need_graph(cfg)
    if cfg.eps is None:
        raise UsageError("--eps is required")
    res = build_sparsifier(g, _need_p(cfg), cfg.eps, cfg.seed, cfg.extra.get("oversample", 1.0),
                           cfg.extra.get("mode"))
    out = res.to_dict()
    out["graph"] = serialize_graph(res.graph_after)
    if cfg.extra.get("output"):
        write_graph(res.graph_after, cfg.extra["output"],
                    comment=f"sparsifier p={res.p} eps={res.eps} seed={res.seed} "
                            f"oversample={res.oversample}")
    _emit("sparsify", out, cfg.format)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    g = _need_graph(cfg)
    if cfg.other is None:
        raise UsageError("--other is required")
    h = read_graph(cfg.other)
    pairs = cfg.pairs if cfg.pairs in (None, "all") else int(cfg.pairs)
    rep = verify_sparsifier(g, h, _need_p(cfg), pairs=pairs, tol=cfg.eps, seed=cfg.seed,
                            solve_tol=cfg.tol)
    _emit("verify", rep.to_dict(), cfg.format)
    return 0 if rep.verdict else 1


def cmd_experiment(cfg: RunConfig) -> int:
    name = cfg.extra["name"]
    n = cfg.extra.get("n")
    if name == "clique-ratio":
        g = read_graph(cfg.graph) if cfg.graph else clique_minus_edge(n or 5)
        ratio = resistance_ratio(g)
        cond = degree_condition_check(g)
        out = {"ratio": ratio.to_dict(), "degree_conditions": cond.to_dict(),
               "clique_ratio": resistance_ratio(complete_graph(g.n)).ratio,
               "verdict": ratio.verdict and cond.verdict}
    elif name == "symmetric-family":
        rep = symmetric_family(n or 5, cfg.extra.get("alpha", 1.0), cfg.extra.get("beta", 1.0))
        grid = symmetric_ratio_grid()
        out = {"family": rep.to_dict(), "grid": grid, "verdict": rep.verdict and grid["verdict"]}
    elif name == "expander-sparsifier":
        rep = expander_clique_sparsifier(n or 64, cfg.eps or 0.5, cfg.seed)
        out = rep.to_dict()
    else:
        rep = union_removal_sensitivity(n or 40, cfg.eps or 0.25, size=cfg.extra.get("size"))
        out = rep.to_dict()
    out = {"name": name, **out}
    _emit("experiment", out, cfg.format)
    return 0 if out["verdict"] else 1


COMMANDS = {
    "dist": cmd_dist, "all-pairs": cmd_all_pairs, "foster": cmd_foster, "p-strong": cmd_p_strong,
    "monotonicity": cmd_monotonicity, "commute": cmd_commute, "reduce": cmd_reduce,
    "obstruction": cmd_obstruction, "star-mesh": cmd_star_mesh, "sparsify": cmd_sparsify,
    "verify": cmd_verify, "experiment": cmd_experiment,
}

HELP = {
    "dist": "d_p between one pair with its primal/dual certificate",
    "all-pairs": "d_p matrix over every pair",
    "foster": "sum of (w d_p)^q over edges against its bracket",
    "p-strong": "search for triples violating d(x,y)^e <= d(x,z)^e + d(z,y)^e",
    "monotonicity": "d_p across a list of p values for one pair",
    "commute": "commute times against 2 w(E) R_eff (conductances w)",
    "reduce": "apply one d_p-preserving local reduction",
    "obstruction": "Y-Delta weights forced by two gadgets; exit 1 when they differ",
    "star-mesh": "cut system for a local k-star-mesh transform at p = inf; exit 1 when infeasible",
    "sparsify": "d_p sparsifier by score sampling (Gomory-Hu tree for large p)",
    "verify": "max relative d_p error of --other against --graph",
    "experiment": "resistance lower-bound experiments",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowmetrics", description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, helptext in HELP.items():
        sp = sub.add_parser(name, help=helptext, description=helptext, allow_abbrev=False,
                            epilog=f"JSON output: schema 'flowmetrics.{name}/v{SCHEMA_VERSION}' "
                                   f"with fields: {SCHEMAS[name]}",
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        fmt = sp.add_mutually_exclusive_group()
        fmt.add_argument("--format", choices=["json", "csv", "text"], default="json")
        fmt.add_argument("--json", dest="format", action="store_const", const="json",
                         help="shorthand for --format json (the default)")
        sp.add_argument("--tol", type=parse_tol, default=DEFAULT_TOL, help="solver tolerance")
        sp.add_argument("--seed", type=parse_seed, default=0)
        if name not in ("obstruction", "star-mesh"):
            sp.add_argument("--graph", help="edge-list file")
        if name in ("dist", "all-pairs", "foster", "p-strong", "reduce", "sparsify", "verify",
                    "obstruction"):
            sp.add_argument("--p", type=parse_p, required=name not in ("reduce",),
                            help="norm exponent in [1, inf]; 'inf' accepted")
        if name in ("dist", "monotonicity"):
            sp.add_argument("--pair", type=int, nargs=2, metavar=("S", "T"))
        if name == "p-strong":
            sp.add_argument("--exponent", type=parse_p, help="exponent to test (default p)")
        if name == "monotonicity":
            sp.add_argument("--p-list", type=parse_p, nargs="+")
        if name == "reduce":
            sp.add_argument("--rule", choices=["deg2", "parallel", "wye-delta"], required=True)
            sp.add_argument("--vertex", type=int)
            sp.add_argument("--edges", type=int, nargs=2, metavar=("E1", "E2"))
            sp.add_argument("--output", help="write the reduced graph here")
        if name == "star-mesh":
            sp.add_argument("--k", type=int, required=True)
        if name in ("sparsify", "verify", "experiment"):
            sp.add_argument("--eps", type=parse_eps)
        if name == "sparsify":
            sp.add_argument("--oversample", type=float, default=1.0)
            sp.add_argument("--mode", choices=["exact-q2", "lewis-iterative"])
            sp.add_argument("--output", help="write the sparsifier here")
        if name == "verify":
            sp.add_argument("--other", required=True, help="candidate sparsifier")
            sp.add_argument("--pairs", type=parse_pairs, help="'all' or a sample size")
        if name == "experiment":
            sp.add_argument("name", choices=["clique-ratio", "symmetric-family",
                                             "expander-sparsifier", "lower-bound-union"])
            sp.add_argument("--n", type=int)
            sp.add_argument("--alpha", type=float, default=1.0)
            sp.add_argument("--beta", type=float, default=1.0)
            sp.add_argument("--size", type=int, help="clique size for lower-bound-union")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    extra = {k: v for k, v in vars(ns).items()
             if k not in {"command", "graph", "other", "p", "eps", "tol", "seed", "format",
                          "pair", "pairs"} and v is not None}
    return RunConfig(ns.command, getattr(ns, "graph", None), getattr(ns, "other", None),
                     getattr(ns, "p", None), getattr(ns, "eps", None), ns.tol, ns.seed, ns.format,
                     tuple(ns.pair) if getattr(ns, "pair", None) else None,
                     getattr(ns, "pairs", None), extra)


def run(cfg: RunConfig) -> int:
    try:
        return COMMANDS[cfg.command](cfg)
    except SolverError as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return 3
    except (UsageError, GraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
