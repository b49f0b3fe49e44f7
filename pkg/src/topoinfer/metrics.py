"""
Evaluation measures for recovered graphs.

All functions are pure. Edge sets are sets of unordered pairs ``(i, j)``
with ``i < j``.
"""

import csv
import io
from dataclasses import dataclass, asdict, field
from typing import Optional

import numpy as np

from .graph import Graph, EDGE_TOL

CSV_COLUMNS = ("seed", "method", "graph_model", "signal_model", "N", "M", "K", "mu",
               "rho", "e0", "ef", "precision", "recall", "f_measure", "threshold_used",
               "runtime_ms", "status")


def correlation_rho(l_true, l_est) -> float:
    """Pearson correlation between all N^2 entries of two matrices.

    Raises
    ------
    ValueError
        On shape mismatch or when either matrix is constant.
    """
    a = np.asarray(l_true, dtype=float).ravel()
    b = np.asarray(l_est, dtype=float).ravel()
    if np.shape(l_true) != np.shape(l_est):
        raise ValueError(f"shape mismatch: {np.shape(l_true)} vs {np.shape(l_est)}")
    a = a - a.mean()
    b = b - b.mean()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("correlation is undefined for a constant matrix")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def _as_matrix(a) -> np.ndarray:
    if isinstance(a, Graph):
        return np.asarray(a.adjacency)
    return np.asarray(a, dtype=float)


def binarization_threshold(a_est, offdiag: bool = True) -> float:
    """Half the mean of the off-diagonal entries (or of all N^2 entries)."""
    a = _as_matrix(a_est)
    n = a.shape[0]
    if offdiag:
        if n < 2:
            return 0.0
        total = a.sum() - np.trace(a)
        return float(total / (n * (n - 1)) / 2.0)
    return float(a.mean() / 2.0)


def binarize_adjacency(a_est, offdiag: bool = True) -> Graph:
    """Binary graph keeping entries strictly above :func:`binarization_threshold`."""
    a = _as_matrix(a_est)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {a.shape}")
    thr = binarization_threshold(a, offdiag)
    b = (a > thr).astype(float)
    np.fill_diagonal(b, 0.0)
    b = np.maximum(b, b.T)
    return Graph(b)


def recovery_errors(a_true, a_est, offdiag: bool = True):
    """``(e0, ef)``: l0 error of the binarised estimate and Frobenius error of the raw one.

    Both are divided by ``N(N-1)``.
    """
    t = _as_matrix(a_true)
    e = _as_matrix(a_est)
    if t.shape != e.shape:
        raise ValueError(f"shape mismatch: {t.shape} vs {e.shape}")
    n = t.shape[0]
    denom = n * (n - 1)
    if denom == 0:
        raise ValueError("need at least two nodes")
    tb = (t > 0).astype(float)
    np.fill_diagonal(tb, 0.0)
    eb = np.asarray(binarize_adjacency(e, offdiag).adjacency)
    e0 = float(np.count_nonzero(tb != eb)) / denom
    ef = float(np.linalg.norm(t - e)) / denom
    return e0, ef


def edge_set(graph, tol: float = EDGE_TOL) -> frozenset:
    """Unordered edge set ``{(i, j) : i < j, a_ij > tol}``."""
    a = _as_matrix(graph)
    iu, ju = np.triu_indices(a.shape[0], 1)
    keep = a[iu, ju] > tol
    return frozenset(zip(iu[keep].tolist(), ju[keep].tolist()))


def _normalise(edges) -> frozenset:
    out = set()
    for e in edges:
        i, j = int(e[0]), int(e[1])
        if i == j:
            continue
        out.add((min(i, j), max(i, j)))
    return frozenset(out)


def precision_recall_f(e_ground, e_recovered):
    """Edge precision, recall and their harmonic mean.

    An empty recovered set has precision 0.

    Raises
    ------
    ValueError
        If the ground-truth set is empty.
    """
    g = _normalise(e_ground)
    r = _normalise(e_recovered)
    if not g:
        raise ValueError("ground-truth edge set is empty")
    hit = len(g & r)
    precision = hit / len(r) if r else 0.0
    recall = hit / len(g)
    denom = precision + recall
    f = 2.0 * precision * recall / denom if denom > 0 else 0.0
    return precision, recall, f


@dataclass(frozen=True)
class MetricsReport:
    rho: float
    e0: float
    ef: float
    precision: float
    recall: float
    f_measure: float
    threshold_used: float
    meta: dict = field(default_factory=dict, compare=False)

    def row(self, **extra) -> dict:
        """CSV row in :data:`CSV_COLUMNS` order; missing fields are empty."""
        values = {k: v for k, v in asdict(self).items() if k != "meta"}
        values.update(self.meta)
        values.update(extra)
        return {c: values.get(c, "") for c in CSV_COLUMNS}


def evaluate(l_true, l_est, offdiag: bool = True, **meta) -> MetricsReport:
    """All measures for an estimated Laplacian against the true one.

    Adjacencies are read off as ``max(0, -L_ij)``.
    """
    lt = np.asarray(l_true, dtype=float)
    le = np.asarray(l_est, dtype=float)
    a_true = np.maximum(-lt, 0.0)
    a_est = np.maximum(-le, 0.0)
    np.fill_diagonal(a_true, 0.0)
    np.fill_diagonal(a_est, 0.0)
    rho = correlation_rho(lt, le)
    e0, ef = recovery_errors(a_true, a_est, offdiag)
    thr = binarization_threshold(a_est, offdiag)
    p, r, f = precision_recall_f(edge_set(a_true), edge_set(binarize_adjacency(a_est, offdiag)))
    return MetricsReport(rho, e0, ef, p, r, f, thr, dict(meta))


def format_value(v) -> str:
    """Deterministic text for a CSV cell."""
    if v is None or v == "":
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def reports_to_csv(rows, columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c, "")) for c in columns])
    return buf.getvalue()


def read_csv(text: str) -> list:
    return list(csv.DictReader(io.StringIO(text)))


def summarize(values) -> tuple:
    """``(mean, stderr)``; stderr is ``None`` for fewer than two values."""
    v = np.asarray([x for x in values if x is not None and np.isfinite(x)], dtype=float)
    if v.size == 0:
        return float("nan"), None
    if v.size < 2:
        return float(v.mean()), None
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


def optional_float(v) -> Optional[float]:
    return None if v in (None, "") else float(v)
