"""
Graphs, combinatorial Laplacians and graph Fourier transforms.

All containers are frozen dataclasses holding read-only numpy arrays, so they
can be shared freely between threads. Operations are pure functions.

Edge weights of an N-node graph are frequently handled as a vector ``w`` of
length N(N-1)/2 ordered like ``np.triu_indices(N, 1)``; :func:`weights_to_laplacian`
and :func:`laplacian_to_weights` convert between the two views.
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.sparse import csgraph

DEFAULT_TOL = 1e-8
EDGE_TOL = 1e-12
DEGENERATE_GAP = 1e-10


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Graph:
    """Weighted undirected graph without self-loops.

    Parameters
    ----------
    adjacency : (N, N) array_like
        Symmetric, nonnegative weight matrix with zero diagonal.
    """

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("adjacency has non-finite entries")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        if np.any(a < 0):
            raise ValueError("adjacency weights must be nonnegative")
        object.__setattr__(self, "adjacency", _frozen(a))

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edges(self, tol: float = EDGE_TOL):
        """List of ``(i, j, w)`` with ``i < j`` and ``w > tol``."""
        iu, ju = np.triu_indices(self.n_nodes, 1)
        w = self.adjacency[iu, ju]
        keep = w > tol
        return [(int(i), int(j), float(x)) for i, j, x in zip(iu[keep], ju[keep], w[keep])]

    def n_edges(self, tol: float = EDGE_TOL) -> int:
        return len(self.edges(tol))

    def n_components(self, tol: float = EDGE_TOL) -> int:
        """Connected components counted on edges with weight above ``tol``."""
        n, _ = csgraph.connected_components(self.adjacency > tol, directed=False)
        return int(n)

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[Sequence]):
        """Build from ``(i, j)`` or ``(i, j, w)`` tuples (0-based)."""
        a = np.zeros((n_nodes, n_nodes))
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            w = float(e[2]) if len(e) > 2 else 1.0
            a[i, j] = a[j, i] = w
        return cls(a)

    @classmethod
    def from_weights(cls, w, n_nodes: Optional[int] = None):
        """Build from an upper-triangle weight vector (negatives clipped to zero)."""
        w = np.maximum(np.asarray(w, dtype=float), 0.0)
        n = n_nodes if n_nodes is not None else n_nodes_from_pairs(w.size)
        a = np.zeros((n, n))
        iu, ju = np.triu_indices(n, 1)
        a[iu, ju] = w
        return cls(a + a.T)


@dataclass(frozen=True)
class LaplacianCheck:
    """Outcome of :func:`validate_laplacian`; residuals are maximum violations."""

    valid: bool
    symmetry: float
    row_sum: float
    sign: float
    psd: float
    tol: float

    def __bool__(self):
        return self.valid


@dataclass(frozen=True)
class LaplacianMatrix:
    """Member of the set of combinatorial Laplacians, checked at construction."""

    matrix: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        check = validate_laplacian(self.matrix, self.tol)
        if not check.valid:
            raise ValueError(
                "not a combinatorial Laplacian: "
                f"symmetry={check.symmetry:.3g}, row_sum={check.row_sum:.3g}, "
                f"sign={check.sign:.3g}, psd={check.psd:.3g} (tol={self.tol:g})"
            )
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def adjacency(self) -> Graph:
        """Graph with weights ``max(0, -L_ij)`` off the diagonal."""
        a = np.maximum(-np.asarray(self.matrix), 0.0)
        a = 0.5 * (a + a.T)
        np.fill_diagonal(a, 0.0)
        return Graph(a)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and the matching orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        u = np.asarray(self.eigenvectors, dtype=float)
        if u.ndim != 2 or u.shape[0] != u.shape[1] or lam.shape != (u.shape[0],):
            raise ValueError("eigenvectors must be N x N and eigenvalues length N")
        object.__setattr__(self, "eigenvalues", _frozen(lam))
        object.__setattr__(self, "eigenvectors", _frozen(u))

    @property
    def n_nodes(self) -> int:
        return self.eigenvalues.size

    def basis(self, support) -> np.ndarray:
        """Columns of the eigenbasis selected by ``support``."""
        return self.eigenvectors[:, _support_indices(support, self.n_nodes)]


@dataclass(frozen=True)
class SignalMatrix:
    """N x M matrix whose columns are graph signals."""

    data: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.data, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if y.ndim != 2 or y.size == 0:
            raise ValueError(f"signals must be a non-empty N x M matrix, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise ValueError("signals contain non-finite values")
        object.__setattr__(self, "data", _frozen(y))

    @property
    def n_nodes(self) -> int:
        return self.data.shape[0]

    @property
    def n_signals(self) -> int:
        return self.data.shape[1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)


@dataclass(frozen=True)
class SupportSet:
    """Sorted set of spectral indices with at least one element."""

    indices: tuple = field()
    n_nodes: Optional[int] = None

    def __post_init__(self):
        idx = [int(i) for i in np.atleast_1d(np.asarray(self.indices, dtype=int))]
        if len(idx) == 0:
            raise ValueError("support must contain at least one index")
        if len(set(idx)) != len(idx):
            raise ValueError(f"support indices must be unique: {idx}")
        if min(idx) < 0 or (self.n_nodes is not None and max(idx) >= self.n_nodes):
            raise ValueError(f"support index out of range for N={self.n_nodes}: {idx}")
        object.__setattr__(self, "indices", tuple(sorted(idx)))

    @property
    def bandwidth(self) -> int:
        return len(self.indices)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    @classmethod
    def leading(cls, k: int, n_nodes: Optional[int] = None):
        return cls(tuple(range(k)), n_nodes)


def _support_indices(support, n: int) -> np.ndarray:
    if not isinstance(support, SupportSet):
        support = SupportSet(tuple(np.atleast_1d(support)), n)
    elif support.n_nodes is None or support.n_nodes != n:
        support = SupportSet(support.indices, n)
    return np.asarray(support.indices, dtype=int)


def n_nodes_from_pairs(n_pairs: int) -> int:
    n = int(round((1 + np.sqrt(1 + 8 * n_pairs)) / 2))
    if n * (n - 1) // 2 != n_pairs:
        raise ValueError(f"{n_pairs} is not a triangular number of node pairs")
    return n


def incidence_matrix(n: int) -> np.ndarray:
    """Signed N x N(N-1)/2 incidence matrix of the complete graph (``e_i - e_j`` per pair)."""
    iu, ju = np.triu_indices(n, 1)
    e = np.zeros((n, iu.size))
    cols = np.arange(iu.size)
    e[iu, cols] = 1.0
    e[ju, cols] = -1.0
    return e


def weights_to_laplacian(w, n: Optional[int] = None) -> np.ndarray:
    """Laplacian ``D - A`` of the upper-triangle weight vector ``w``."""
    w = np.asarray(w, dtype=float)
    n = n if n is not None else n_nodes_from_pairs(w.size)
    a = np.zeros((n, n))
    iu, ju = np.triu_indices(n, 1)
    a[iu, ju] = w
    a = a + a.T
    return np.diag(a.sum(axis=1)) - a


def laplacian_to_weights(lap) -> np.ndarray:
    """Upper-triangle weights ``-L_ij`` (no clipping)."""
    lap = np.asarray(lap, dtype=float)
    iu, ju = np.triu_indices(lap.shape[0], 1)
    return -lap[iu, ju]


def laplacian_from_adjacency(graph: Graph) -> LaplacianMatrix:
    """Combinatorial Laplacian ``L = D - A``."""
    a = np.asarray(graph.adjacency)
    return LaplacianMatrix(np.diag(a.sum(axis=1)) - a, tol=DEFAULT_TOL)


def validate_laplacian(matrix, tol: float = DEFAULT_TOL) -> LaplacianCheck:
    """Check membership in the set of combinatorial Laplacians.

    Returns the maximum violation of symmetry, zero row sums, nonpositive
    off-diagonals and positive semidefiniteness; ``valid`` is true when all
    four are within ``tol``.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    n = m.shape[0]
    symmetry = float(np.max(np.abs(m - m.T))) if n else 0.0
    row_sum = float(np.max(np.abs(m.sum(axis=1)))) if n else 0.0
    off = m[~np.eye(n, dtype=bool)]
    sign = float(max(0.0, off.max())) if off.size else 0.0
    lam_min = np.linalg.eigvalsh(0.5 * (m + m.T))[0] if n else 0.0
    psd = float(max(0.0, -lam_min))
    valid = max(symmetry, row_sum, sign, psd) <= tol
    return LaplacianCheck(bool(valid), symmetry, row_sum, sign, psd, float(tol))


def _canonical_signs(u: np.ndarray) -> np.ndarray:
    u = u.copy()
    for k in range(u.shape[1]):
        i = int(np.argmax(np.abs(u[:, k])))
        if u[i, k] < 0:
            u[:, k] = -u[:, k]
    return u


def spectral_decomposition(lap) -> SpectralDecomposition:
    """Eigendecomposition with a deterministic sign and ordering convention.

    Eigenvalues are ascending. Each eigenvector is flipped so that its
    largest-magnitude entry (first one on ties) is positive, and within a
    cluster of eigenvalues closer than ``1e-10`` the vectors are ordered
    lexicographically, largest first.
    """
    m = np.asarray(lap, dtype=float)
    try:
        lam, u = np.linalg.eigh(0.5 * (m + m.T))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"symmetric eigensolver failed on {m.shape} matrix "
            f"(finite={np.all(np.isfinite(m))}, norm={np.linalg.norm(m):.3g})"
        ) from exc
    u = _canonical_signs(u)
    # round away magnitudes below the eigensolver noise floor before comparing
    scale = max(1.0, float(np.abs(lam).max(initial=0.0)))
    key = np.round(u, 10)
    order = []
    start = 0
    n = lam.size
    while start < n:
        stop = start + 1
        while stop < n and lam[stop] - lam[stop - 1] < DEGENERATE_GAP * scale:
            stop += 1
        block = list(range(start, stop))
        block.sort(key=lambda k: tuple(-key[:, k]))
        order.extend(block)
        start = stop
    order = np.asarray(order)
    lam = np.where(np.abs(lam) < 1e-12 * scale, 0.0, lam)
    return SpectralDecomposition(lam[order], u[:, order])


def _check_basis(basis, n_rows: int, tol: float = 1e-8) -> np.ndarray:
    u = np.asarray(basis, dtype=float)
    if u.ndim != 2 or u.shape[0] != n_rows:
        raise ValueError(f"basis has shape {u.shape}, expected {n_rows} rows")
    err = np.linalg.norm(u.T @ u - np.eye(u.shape[1]))
    if err > tol * max(1, u.shape[1]):
        raise ValueError(f"basis columns are not orthonormal (||U'U - I||_F = {err:.3g})")
    return u


def gft(signals, basis) -> np.ndarray:
    """Graph Fourier coefficients ``U^T Y``."""
    y = np.asarray(signals, dtype=float)
    u = _check_basis(basis, y.shape[0])
    return u.T @ y


def igft(coefficients, basis) -> np.ndarray:
    """Inverse transform ``U S``."""
    s = np.asarray(coefficients, dtype=float)
    u = _check_basis(basis, np.asarray(basis).shape[0])
    if s.shape[0] != u.shape[1]:
        raise ValueError(f"coefficients have {s.shape[0]} rows, basis has {u.shape[1]} columns")
    return u @ s


def bandlimiting_projector(basis, support) -> np.ndarray:
    """Orthogonal projector onto the span of the selected basis columns."""
    u = _check_basis(basis, np.asarray(basis).shape[0])
    idx = _support_indices(support, u.shape[1])
    uk = u[:, idx]
    return uk @ uk.T
