"""
Plain-text formats.

Dense matrix: first line ``N M``, then N rows of M whitespace-separated
decimals. Edge list: a ``# nodes N`` header, then one ``i j w`` line per
edge with 0-based ``i < j``. Sidecars are JSON.
"""

import json
from pathlib import Path

import numpy as np

from .graph import Graph


def format_dense(matrix) -> str:
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in m]
    return "\n".join(lines) + "\n"


def parse_dense(text: str) -> np.ndarray:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise ValueError("dense matrix text must start with an 'N M' header")
    n, m = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != n or any(len(r) != m for r in body):
        raise ValueError(f"dense matrix body does not match header {n} x {m}")
    return np.array([[float(x) for x in r] for r in body]).reshape(n, m)


def write_dense(path, matrix) -> None:
    Path(path).write_text(format_dense(matrix))


def read_dense(path) -> np.ndarray:
    return parse_dense(Path(path).read_text())


def format_edge_list(graph: Graph, tol: float = 0.0) -> str:
    lines = [f"# nodes {graph.n_nodes}"]
    lines += [f"{i} {j} {w!r}" for i, j, w in graph.edges(tol)]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    n = None
    edges = []
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln:
            continue
        if ln.startswith("#"):
            parts = ln[1:].split()
            if len(parts) == 2 and parts[0] == "nodes":
                n = int(parts[1])
            continue
        parts = ln.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"bad edge line: {ln!r}")
        i, j = int(parts[0]), int(parts[1])
        if not i < j:
            raise ValueError(f"edge list requires i < j, got {ln!r}")
        edges.append((i, j, float(parts[2]) if len(parts) == 3 else 1.0))
    if n is None:
        raise ValueError("edge list is missing the '# nodes N' header")
    return Graph.from_edges(n, edges)


def write_edge_list(path, graph: Graph) -> None:
    Path(path).write_text(format_edge_list(graph))


def read_edge_list(path) -> Graph:
    return parse_edge_list(Path(path).read_text())


def write_json(path, record) -> None:
    Path(path).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
