"""p-norm flow distances on weighted graphs: solvers, metric checks, transforms, sparsifiers."""

from .graph import DemandPair, GraphError, ParseError, PNormParam, WeightedGraph, parse_graph
from .solve import SolveReport, SolverError, d_p, distance

__all__ = [
    "DemandPair",
    "GraphError",
    "ParseError",
    "PNormParam",
    "WeightedGraph",
    "parse_graph",
    "SolveReport",
    "SolverError",
    "d_p",
    "distance",
]
