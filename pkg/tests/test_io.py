import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from topoinfer.graph import Graph
from topoinfer.io import (format_dense, format_edge_list, parse_dense, parse_edge_list, read_dense,
                          read_json, write_dense, write_json)


class TestDense:
    def test_header(self):
        assert format_dense(np.eye(2)).splitlines()[0] == "2 2"

    @given(arrays(float, st.tuples(st.integers(1, 5), st.integers(1, 5)),
                  elements=st.floats(-1e6, 1e6, allow_nan=False)))
    def test_round_trip_exact(self, m):
        np.testing.assert_array_equal(parse_dense(format_dense(m)), m)

    def test_bad_body(self):
        with pytest.raises(ValueError):
            parse_dense("2 2\n1 2\n")

    def test_file(self, tmp_path):
        write_dense(tmp_path / "m.txt", [[1.5, 2.0]])
        np.testing.assert_array_equal(read_dense(tmp_path / "m.txt"), [[1.5, 2.0]])


class TestEdgeList:
    def test_round_trip(self):
        g = Graph.from_edges(5, [(0, 3, 0.25), (1, 2)])
        text = format_edge_list(g)
        assert text.startswith("# nodes 5\n")
        back = parse_edge_list(text)
        np.testing.assert_array_equal(back.adjacency, g.adjacency)

    def test_isolated_nodes_kept(self):
        assert parse_edge_list("# nodes 4\n0 1 1.0\n").n_nodes == 4


def test_json(tmp_path):
    write_json(tmp_path / "r.json", {"b": [1, 2], "a": 0.5})
    assert read_json(tmp_path / "r.json") == {"a": 0.5, "b": [1, 2]}
