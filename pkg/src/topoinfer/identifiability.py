"""
When does the feasible set pin down the Laplacian?

With the leading K eigenvectors ``U_K`` known exactly, the conditions

    L U_K = U_K diag(lambda),  L 1 = 0,  L_ij = L_ji <= 0,  tr(L) = p

are linear in ``x = [-z; lambda_bar]``, where ``z`` is the strict lower
triangle of ``L`` (column-major) and ``lambda_bar`` the K-1 eigenvalues
other than the zero one. This module builds that system ``F x = b``
through a duplication matrix, and reports rank-based and LP-based
uniqueness verdicts together with the sparsity bound that uniqueness
implies.

The ordering ``z`` coincides with ``numpy.triu_indices(N, 1)`` applied to
the upper triangle, so ``-z`` equals the edge-weight vector used by
:mod:`topoinfer.recovery`.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize, sparse

MAX_NODES = 200


def duplication_matrix(n: int, as_sparse: bool = False):
    """Map ``vec(L) = M z`` from the strict lower triangle to the full Laplacian.

    Built in three steps: the classical duplication matrix for the lower
    triangle including the diagonal, removal of the diagonal columns, and
    replacement of each diagonal row by the negated sum of the other rows of
    its column block (zero row sums).

    Parameters
    ----------
    n : int
        Number of nodes, ``n >= 2``.
    as_sparse : bool
        Return a ``scipy.sparse.csr_matrix`` instead of a dense array.
    """
    if n < 2:
        raise ValueError(f"duplication matrix needs N >= 2, got {n}")
    if n > MAX_NODES:
        raise ValueError(f"N={n} exceeds the supported maximum of {MAX_NODES}")
    # 1-based indices below follow the usual vec/vech conventions
    rows, cols = [], []
    for j in range(1, n + 1):
        for i in range(j, n + 1):
            c = (j - 1) * (2 * n - j) // 2 + i
            rows.append((j - 1) * n + i)
            cols.append(c)
            if i != j:
                rows.append((i - 1) * n + j)
                cols.append(c)
    diag_cols = {(k - 1) * n + k - (k - 1) * k // 2 for k in range(1, n + 1)}
    keep = sorted(set(range(1, n * (n + 1) // 2 + 1)) - diag_cols)
    new_index = {c: t for t, c in enumerate(keep)}
    r0, c0 = [], []
    for r, c in zip(rows, cols):
        if c in new_index:
            r0.append(r - 1)
            c0.append(new_index[c])
    m = sparse.coo_matrix((np.ones(len(r0)), (r0, c0)), shape=(n * n, len(keep))).tocsr()
    m = m.tolil()
    for k in range(1, n + 1):
        block = m[n * (k - 1):n * k, :]
        m[k + n * (k - 1) - 1, :] = -np.asarray(block.sum(axis=0))
    m = m.tocsr()
    m.eliminate_zeros()
    return m if as_sparse else m.toarray()


def vech_strict(lap) -> np.ndarray:
    """Strict lower triangle of ``lap``, column by column."""
    lap = np.asarray(lap, dtype=float)
    jj, ii = np.triu_indices(lap.shape[0], 1)
    return lap[ii, jj]


@dataclass(frozen=True)
class IdentifiabilitySystem:
    """The linear system ``F x = b`` with ``x = [-z; lambda_bar] >= 0``.

    The trace row of ``F`` is ``2 * 1'`` so that ``b[-1]`` is the trace
    itself (each off-diagonal weight appears twice on the diagonal).
    """

    f_matrix: np.ndarray
    b_vector: np.ndarray
    duplication: object = field(repr=False)
    u_k: np.ndarray = field(repr=False)
    trace_target: float = 0.0

    @property
    def n_nodes(self) -> int:
        return self.u_k.shape[0]

    @property
    def bandwidth(self) -> int:
        return self.u_k.shape[1]

    @property
    def shape(self):
        return self.f_matrix.shape

    @property
    def n_pairs(self) -> int:
        n = self.n_nodes
        return n * (n - 1) // 2

    def split(self, x):
        """``(weights, lambda_bar)`` from a stacked solution vector."""
        x = np.asarray(x, dtype=float)
        return x[:self.n_pairs], x[self.n_pairs:]

    def laplacian(self, x) -> np.ndarray:
        n = self.n_nodes
        w, _ = self.split(x)
        return (self.duplication @ (-w)).reshape(n, n, order="F")

    def residual(self, x) -> float:
        return float(np.max(np.abs(self.f_matrix @ np.asarray(x, dtype=float) - self.b_vector)))


def _check_u(u_k, tol: float = 1e-8) -> np.ndarray:
    u = np.asarray(u_k, dtype=float)
    if u.ndim != 2 or u.shape[1] < 1 or u.shape[1] > u.shape[0]:
        raise ValueError(f"u_k must be N x K with 1 <= K <= N, got shape {u.shape}")
    if u.shape[0] > MAX_NODES:
        raise ValueError(f"N={u.shape[0]} exceeds the supported maximum of {MAX_NODES}")
    err = np.linalg.norm(u.T @ u - np.eye(u.shape[1]))
    if err > tol * max(1, u.shape[1]):
        raise ValueError(f"u_k columns are not orthonormal (error {err:.3g})")
    return u


def assemble_system(u_k, trace_target: Optional[float] = None, support=None,
                    const_tol: float = 1e-8) -> IdentifiabilitySystem:
    """Build ``F`` and ``b`` for the leading-K eigenvectors ``u_k``.

    ``u_k`` must have orthonormal columns sorted by increasing eigenvalue,
    the first one constant. ``support``, if given, must be ``0..K-1``;
    other index sets are rejected.
    """
    u = _check_u(u_k)
    n, k = u.shape
    if n < 2:
        raise ValueError("need at least two nodes")
    if support is not None and tuple(int(i) for i in support) != tuple(range(k)):
        raise ValueError("only the leading support 0..K-1 is supported")
    first = u[:, 0]
    if np.max(np.abs(np.abs(first) - 1.0 / np.sqrt(n))) > const_tol or np.ptp(first) > const_tol:
        raise ValueError("the first column of u_k must be the constant eigenvector")
    p = float(n if trace_target is None else trace_target)
    if p <= 0:
        raise ValueError("trace_target must be > 0")
    m_dup = duplication_matrix(n, as_sparse=True)
    # B = (U_K' kron I_N) M, Q = (I_K kron U_K) sum_k e_k kron E_k
    b_mat = np.asarray((sparse.kron(sparse.csr_matrix(u.T), sparse.identity(n, format="csr")) @ m_dup).todense())
    q_mat = np.zeros((k * n, k))
    for j in range(k):
        q_mat[j * n:(j + 1) * n, j] = u[:, j]
    n_pairs = n * (n - 1) // 2
    top = np.hstack([-b_mat, -q_mat[:, 1:]])
    bottom = np.concatenate([np.full(n_pairs, 2.0), np.zeros(k - 1)])[None, :]
    f = np.vstack([top, bottom])
    b = np.zeros(k * n + 1)
    b[-1] = p
    return IdentifiabilitySystem(f, b, m_dup, u, p)


def planted_solution(system: IdentifiabilitySystem, lap) -> np.ndarray:
    """``x0 = [-vech(L); lambda_bar]`` for a Laplacian whose leading eigenvectors are ``u_k``."""
    lap = np.asarray(lap, dtype=float)
    lam = np.diag(system.u_k.T @ lap @ system.u_k)
    return np.concatenate([-vech_strict(lap), lam[1:]])


def regime_boundary(n: int) -> float:
    """``N/2 - 2/(N-1)``: below it F has fewer rows than columns."""
    return n / 2.0 - 2.0 / (n - 1)


@dataclass(frozen=True)
class IdentifiabilityVerdict:
    rank: int
    regime: str
    singleton: bool
    rank_bounds: tuple
    sparsity_bound: Optional[int]
    bandwidth_bound_ok: Optional[bool]
    shape: tuple
    nullity: int
    notes: tuple = ()

    def as_dict(self) -> dict:
        return dict(rank=self.rank, regime=self.regime, singleton=self.singleton,
                    rank_bounds=list(self.rank_bounds), sparsity_bound=self.sparsity_bound,
                    bandwidth_bound_ok=self.bandwidth_bound_ok, shape=list(self.shape),
                    nullity=self.nullity, notes=list(self.notes))


def sparsity_bound(n: int, k: int, c: int) -> int:
    """Largest ``||A||_0`` (ordered nonzeros) compatible with uniqueness: ``K(N-2) + 2c``."""
    if k < 1:
        raise ValueError("K must be >= 1")
    if not 1 <= c <= n:
        raise ValueError(f"component count must satisfy 1 <= c <= N={n}, got {c}")
    return k * (n - 2) + 2 * c


def bandwidth_condition(n: int, k: int, c: int, adjacency_nnz: int):
    """``(ok, s)`` with ``s = K - c + ||A||_0 / 2`` and ``ok = K >= 2 s / N``."""
    s = k - c + adjacency_nnz / 2.0
    return bool(k >= 2.0 * s / n), s


def rank_analysis(system: IdentifiabilitySystem, svd_tol: float = 1e-10,
                  n_components: Optional[int] = None,
                  adjacency_nnz: Optional[int] = None) -> IdentifiabilityVerdict:
    """Numerical rank of ``F`` and the rank-based singleton verdict.

    The rank counts singular values above ``svd_tol * s_max * max(m, n)``.
    The singleton flag is raised when ``F`` has full rank in the square
    case, or full column rank in the overdetermined case. The sparsity and
    bandwidth bounds are filled in when the component count (and, for the
    latter, the adjacency's nonzero count) are supplied.
    """
    f = system.f_matrix
    m, n = f.shape
    nodes, k = system.n_nodes, system.bandwidth
    sv = np.linalg.svd(f, compute_uv=False)
    rank = int(np.sum(sv > svd_tol * sv[0] * max(m, n))) if sv.size and sv[0] > 0 else 0
    if m < n:
        regime = "underdetermined"
    elif m == n:
        regime = "square"
    else:
        regime = "overdetermined"
    notes = []
    if regime == "square":
        singleton = rank == m
    elif regime == "overdetermined":
        singleton = rank == n
    else:
        singleton = False
        notes.append("K below the boundary: the rank criterion cannot certify uniqueness")
    if m != n and float(k) == regime_boundary(nodes):
        notes.append("K on the boundary but m != n")
    bounds = (k - 1, m) if m <= n else (k - 1, n)
    sb = ok = None
    if n_components is not None:
        sb = sparsity_bound(nodes, k, n_components)
        if adjacency_nnz is not None:
            ok, _ = bandwidth_condition(nodes, k, n_components, adjacency_nnz)
    return IdentifiabilityVerdict(rank, regime, bool(singleton), bounds, sb, ok, (m, n), n - rank, tuple(notes))


def ordering_matrix(system: IdentifiabilitySystem) -> np.ndarray:
    """Rows ``lambda_{i+1} - lambda_i`` over ``lambda_bar`` (nonnegativity of lambda_2 is a bound)."""
    k = system.bandwidth
    n = system.f_matrix.shape[1]
    rows = []
    for i in range(k - 2):
        r = np.zeros(n)
        r[system.n_pairs + i] = -1.0
        r[system.n_pairs + i + 1] = 1.0
        rows.append(r)
    return np.array(rows).reshape(len(rows), n)


def check_ordering(system: IdentifiabilitySystem, x, tol: float = 1e-9) -> bool:
    """Whether ``lambda_bar`` is nonnegative and nondecreasing."""
    _, lam = system.split(x)
    if lam.size == 0:
        return True
    return bool(lam[0] >= -tol and np.all(np.diff(lam) >= -tol))


def feasible_point(system: IdentifiabilitySystem, ordered: bool = True) -> Optional[np.ndarray]:
    """Some ``x >= 0`` with ``F x = b`` (and ordered eigenvalues), via an LP."""
    f = system.f_matrix
    n = f.shape[1]
    d = ordering_matrix(system) if ordered else np.zeros((0, n))
    res = optimize.linprog(np.zeros(n), A_ub=-d if d.size else None, b_ub=np.zeros(d.shape[0]) if d.size else None,
                           A_eq=f, b_eq=system.b_vector, bounds=[(0, None)] * n, method="highs")
    return res.x if res.status == 0 else None


def nonnegative_singleton(system: IdentifiabilitySystem, x0=None, ordered: bool = True,
                          tol: float = 1e-9):
    """Whether ``{x >= 0 : F x = b}`` (with ordered eigenvalues) is a single point.

    Decided through the cone of feasible directions at a feasible point
    ``x0``: the set is a singleton iff the only direction ``d`` with
    ``F d = 0`` that keeps every active inequality satisfied is zero. The
    cone is tested by an LP over the unit box plus a rank check of the
    active equalities.

    Returns
    -------
    singleton : bool or None
        ``None`` when the set is empty.
    x0 : ndarray or None
    """
    f = system.f_matrix
    n = f.shape[1]
    if x0 is None:
        x0 = feasible_point(system, ordered)
        if x0 is None:
            return None, None
    x0 = np.asarray(x0, dtype=float)
    scale = max(1.0, np.abs(x0).max())
    active = np.flatnonzero(x0 <= tol * scale)
    d_rows = ordering_matrix(system) if ordered else np.zeros((0, n))
    if d_rows.shape[0]:
        act_rows = d_rows[np.abs(d_rows @ x0) <= tol * scale]
    else:
        act_rows = d_rows
    # lineality: directions with every active constraint tight
    stacked = np.vstack([f, np.eye(n)[active], act_rows])
    sv = np.linalg.svd(stacked, compute_uv=False)
    rank = int(np.sum(sv > 1e-10 * sv[0] * max(stacked.shape)))
    if rank < n:
        return False, x0
    if active.size == 0 and act_rows.shape[0] == 0:
        return True, x0
    # maximise the total slack a direction can open on the active constraints
    sel = np.zeros(n)
    sel[active] = 1.0
    cost = -(sel + act_rows.sum(axis=0))
    a_ub = None
    b_ub = None
    if act_rows.shape[0]:
        a_ub = -act_rows
        b_ub = np.zeros(act_rows.shape[0])
    bounds = [(0.0, 1.0) if i in set(active.tolist()) else (-1.0, 1.0) for i in range(n)]
    res = optimize.linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=f, b_eq=np.zeros(f.shape[0]),
                           bounds=bounds, method="highs")
    if res.status != 0:
        return None, x0
    return bool(-res.fun <= 1e-9), x0
