import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flowmetrics.graph import (DemandPair, GraphError, ParseError, PNormParam, WeightedGraph,
                               divergence, parse_graph, potential_differences, serialize_graph)
from flowmetrics.families import path_graph

from strategies import graphs


def test_parse_basic():
    g = parse_graph("# a comment\n3 2\n0 1 1.5\n\n1 2 2\n")
    assert g.n == 3 and g.m == 2
    assert g.edges == [(0, 1, 1.5), (1, 2, 2.0)]


@pytest.mark.parametrize("text, line", [
    ("3 2\n0 1 1\n", 2),            # too few edges
    ("3 1\n0 1 1\n1 2 1\n", 3),     # too many edges
    ("3 2\n0 1 1\n1 5 1\n", 3),     # vertex out of range
    ("3 2\n0 1 1\n1 1 1\n", 3),     # self-loop
    ("3 2\n0 1 -1\n1 2 1\n", 2),    # non-positive weight
    ("3 2\n0 1 nan\n1 2 1\n", 2),
    ("3 2\n0 1 x\n1 2 1\n", 2),
    ("3\n", 1),                     # bad header
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_graph(text)
    assert info.value.line == line


def test_parse_rejects_disconnected_and_empty():
    with pytest.raises(ParseError, match="disconnected"):
        parse_graph("4 2\n0 1 1\n2 3 1\n")
    with pytest.raises(ParseError):
        parse_graph("# nothing\n")


def test_single_vertex_graph_is_allowed():
    g = parse_graph("1 0\n")
    assert g.n == 1 and g.m == 0


@given(graphs())
def test_serialize_round_trip(g):
    assert parse_graph(serialize_graph(g, comment="x")) == g


def test_incidence_orientation():
    g = WeightedGraph.from_edges(3, [(0, 1, 1.0), (2, 1, 1.0)])
    B = g.incidence().toarray()
    assert B.tolist() == [[1, -1, 0], [0, -1, 1]]
    phi = np.array([3.0, 1.0, 0.0])
    assert potential_differences(g, phi).tolist() == [2.0, -1.0]


def test_unit_flow_divergence():
    g = path_graph(3)
    f = np.array([1.0, 1.0])
    assert divergence(g, f).tolist() == DemandPair(0, 2).vector(3).tolist()


@given(graphs())
def test_laplacian_matches_incidence(g):
    B = g.incidence().toarray()
    c = g.weights ** 2
    assert np.allclose(g.laplacian(c), B.T @ np.diag(c) @ B)


@given(graphs(), st.data())
def test_divergence_sums_to_zero(g, data):
    f = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=g.m, max_size=g.m)))
    assert abs(divergence(g, f).sum()) < 1e-9


def test_pnorm_param():
    assert PNormParam(2).q == 2
    assert PNormParam(3).q == pytest.approx(1.5)
    assert PNormParam(1).q == math.inf
    assert PNormParam.parse("inf").q == 1
    assert PNormParam(2e6).is_inf
    assert str(PNormParam.parse("Infinity")) == "inf"
    with pytest.raises(GraphError):
        PNormParam(0.5)


def test_graph_validation():
    with pytest.raises(GraphError):
        WeightedGraph.from_edges(3, [(0, 1, 1.0)])
    with pytest.raises(GraphError):
        WeightedGraph.from_edges(2, [(0, 1, 0.0)])
    with pytest.raises(GraphError):
        DemandPair(1, 1)
    g = path_graph(3)
    with pytest.raises(ValueError):
        g.weights[0] = 2.0


def test_merged_sums_parallel_weights():
    g = WeightedGraph.from_edges(2, [(0, 1, 1.0), (1, 0, 2.0)])
    assert g.merged().edges == [(0, 1, 3.0)]
