"""
Joint learning of an orthonormal sparsifying transform and block-sparse
coefficients.

Given signals ``Y`` (N x M), :func:`learn_transform` alternates

* an S-step, keeping the K rows of ``U^T Y`` with the largest l2 norm
  (:func:`block_sparse_projection`), and
* a U-step, the closed-form maximiser of ``tr(U^T Y S^T)`` over orthonormal
  ``U`` whose first column is the constant vector ``1/sqrt(N)``
  (:func:`u_step`).

Both steps are exact, so the sparsification error ``||U^T Y - S||_F^2`` never
increases.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .graph import SupportSet


@dataclass(frozen=True)
class TransformLearnConfig:
    bandwidth: int
    max_iterations: int = 500
    rel_tol: float = 1e-6
    init: str = "householder"
    seed: Optional[int] = None
    rank_tol_factor: float = 1e-12
    restarts: int = 1

    def __post_init__(self):
        if self.bandwidth < 1:
            raise ValueError("bandwidth must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.rel_tol <= 0 or self.rank_tol_factor <= 0:
            raise ValueError("tolerances must be positive")
        if self.init not in ("householder", "random"):
            raise ValueError(f"init must be 'householder' or 'random', got {self.init!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class TransformEstimate:
    """Result of :func:`learn_transform`.

    ``objective_trace`` holds the sparsification error after every half-step
    (S-step, U-step, S-step, ...).
    """

    u_hat: np.ndarray
    s_hat: np.ndarray
    support: SupportSet
    objective_trace: tuple = field(default=())
    iterations: int = 0
    converged: bool = False
    restarts_run: int = 1

    @property
    def u_k(self) -> np.ndarray:
        return self.u_hat[:, list(self.support.indices)]

    @property
    def s_k(self) -> np.ndarray:
        return self.s_hat[list(self.support.indices)]

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else float("nan")


def householder_basis(n: int) -> np.ndarray:
    """Orthonormal basis whose first column is exactly ``1/sqrt(n)``.

    Uses the Householder reflection that maps ``e_1`` onto the normalised
    constant vector.
    """
    b = 1.0 / np.sqrt(n)
    v = -np.full(n, b)
    v[0] += 1.0
    vv = v @ v
    h = np.eye(n) if vv == 0 else np.eye(n) - 2.0 * np.outer(v, v) / vv
    h[:, 0] = b
    return h


def random_feasible_basis(n: int, rng) -> np.ndarray:
    """Uniformly rotated feasible basis (first column constant)."""
    rng = np.random.default_rng(rng)
    h = householder_basis(n)
    if n == 1:
        return h
    q, r = np.linalg.qr(rng.standard_normal((n - 1, n - 1)))
    q = q * np.sign(np.diag(r))
    out = h.copy()
    out[:, 1:] = h[:, 1:] @ q
    return out


def sparsification_error(u, y, s) -> float:
    """``||U^T Y - S||_F^2``."""
    return float(np.sum((np.asarray(u).T @ np.asarray(y) - np.asarray(s)) ** 2))


def block_sparse_projection(coeffs, bandwidth: int):
    """Best K-row-sparse approximation of ``coeffs``.

    Rows are ranked by l2 norm; ties go to the lower row index.

    Returns
    -------
    s : ndarray
        ``coeffs`` on the kept rows and zero elsewhere.
    support : SupportSet
    """
    t = np.asarray(coeffs, dtype=float)
    n = t.shape[0]
    if not 1 <= bandwidth <= n:
        raise ValueError(f"bandwidth must satisfy 1 <= K <= N={n}, got {bandwidth}")
    norms = np.sum(t * t, axis=1)
    keep = np.sort(np.argsort(-norms, kind="stable")[:bandwidth])
    s = np.zeros_like(t)
    s[keep] = t[keep]
    return s, SupportSet(tuple(keep), n)


def u_step(y, s, rank_tol_factor: float = 1e-12) -> np.ndarray:
    """Closed-form transform update.

    Maximises ``tr(U^T Y S^T)`` subject to ``U^T U = I`` and
    ``U[:, 0] = 1/sqrt(N)``. With ``Z`` the last N-1 columns of ``Y S^T`` and
    ``P Z = X Sigma V^T`` its SVD after removing the mean of each column, the
    optimum is ``[1/sqrt(N), X^- V^T]`` where ``X^-`` completes the
    rank-r left factor with an orthonormal basis of the null space of
    ``[1^T; X_r^T]``.
    """
    y = np.asarray(y, dtype=float)
    s = np.asarray(s, dtype=float)
    n = y.shape[0]
    if s.shape != y.shape:
        raise ValueError(f"S has shape {s.shape}, Y has shape {y.shape}")
    if n == 1:
        return np.ones((1, 1))
    ybar = y @ s.T
    z = ybar[:, 1:]
    zp = z - z.mean(axis=0, keepdims=True)
    x, sv, vt = np.linalg.svd(zp, full_matrices=True)
    thresh = rank_tol_factor * (sv[0] if sv.size else 0.0) * max(n, y.shape[1])
    r = int(np.sum(sv > thresh)) if sv.size and sv[0] > 0 else 0
    if r == 0:
        return householder_basis(n)
    xr = x[:, :r]
    # null space of [1^T; X_r^T], of dimension N - 1 - r
    bmat = np.vstack([np.ones((1, n)), xr.T])
    _, bs, bvt = np.linalg.svd(bmat, full_matrices=True)
    xs = bvt[r + 1:].T
    x_minus = np.hstack([xr, xs])
    u = np.empty((n, n))
    u[:, 0] = 1.0 / np.sqrt(n)
    u[:, 1:] = x_minus @ vt
    return u


def _initial_basis(n: int, init: str, rng) -> np.ndarray:
    if init == "householder":
        return householder_basis(n)
    return random_feasible_basis(n, rng)


def _learn_once(y, config: TransformLearnConfig, u0) -> TransformEstimate:
    u = u0
    trace = []
    s = support = None
    converged = False
    it = 0
    scale = float(np.sum(y * y))
    for it in range(1, config.max_iterations + 1):
        s, support = block_sparse_projection(u.T @ y, config.bandwidth)
        trace.append(sparsification_error(u, y, s))
        prev = trace[-3] if len(trace) >= 3 else None
        u_new = u_step(y, s, config.rank_tol_factor)
        obj_u = sparsification_error(u_new, y, s)
        # the U-step is a global maximiser; keep the old basis on round-off ties
        if obj_u > trace[-1]:
            obj_u = trace[-1]
        else:
            u = u_new
        trace.append(obj_u)
        if obj_u <= 1e-28 * max(scale, 1e-300):
            converged = True
            break
        if prev is not None and prev - obj_u <= config.rel_tol * max(prev, 1e-300):
            converged = True
            break
    # final S-step so that (u, s) is a consistent pair
    s, support = block_sparse_projection(u.T @ y, config.bandwidth)
    final = sparsification_error(u, y, s)
    if final <= trace[-1]:
        trace.append(final)
    return TransformEstimate(u, s, support, tuple(trace), it, converged)


def learn_transform(y, config: TransformLearnConfig) -> TransformEstimate:
    """Alternating minimisation of ``||U^T Y - S||_F^2`` over feasible ``U`` and K-row-sparse ``S``.

    With ``config.restarts > 1`` the extra runs start from random feasible
    bases and the lowest final objective wins.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[1] < 1:
        raise ValueError(f"Y must be an N x M matrix with M >= 1, got shape {y.shape}")
    n = y.shape[0]
    if config.bandwidth > n:
        raise ValueError(f"bandwidth {config.bandwidth} exceeds N={n}")
    rng = np.random.default_rng(config.seed)
    best = None
    for r in range(config.restarts):
        init = config.init if r == 0 else "random"
        est = _learn_once(y, config, _initial_basis(n, init, rng))
        if best is None or est.objective < best.objective:
            best = est
    return replace(best, restarts_run=config.restarts)


def _quantize(values, alphabet: np.ndarray) -> np.ndarray:
    idx = np.abs(values[..., None] - alphabet).argmin(axis=-1)
    return alphabet[idx]


def _procrustes(source, target) -> np.ndarray:
    """Orthonormal ``H`` minimising ``||H source - target||_F``."""
    a, _, bt = np.linalg.svd(target @ source.T)
    return a @ bt


def derotate_discrete(estimate: TransformEstimate, alphabet: Sequence[float], max_iter: int = 200,
                      seed: Optional[int] = None, restarts: int = 20, tol: float = 1e-12):
    """Undo the residual in-band rotation using a known discrete alphabet.

    Alternates nearest-symbol quantisation of ``H S_K`` with an orthogonal
    Procrustes fit of ``H``. The first start is ``H = I``; further starts
    are random rotations and the one with the smallest quantisation error is
    kept. The returned estimate carries ``U_K H^T`` and ``H S_K`` on the
    support rows, so its first column is no longer forced to be constant.

    Returns
    -------
    estimate : TransformEstimate
        ``converged`` is false when no start reached a fixed point within
        ``max_iter`` iterations.
    h : ndarray
        The K x K rotation.
    errors : list of float
        Quantisation error per iteration of the winning start.
    """
    alphabet = np.unique(np.asarray(list(alphabet), dtype=float))
    if alphabet.size < 2:
        raise ValueError("alphabet must contain at least two distinct values")
    sk = estimate.s_k
    k = sk.shape[0]
    rng = np.random.default_rng(seed)
    best = None
    for r in range(max(1, restarts)):
        if r == 0:
            h = np.eye(k)
        else:
            q, rr = np.linalg.qr(rng.standard_normal((k, k)))
            h = q * np.sign(np.diag(rr))
        errors = []
        converged = False
        for _ in range(max_iter):
            rotated = h @ sk
            target = _quantize(rotated, alphabet)
            errors.append(float(np.sum((rotated - target) ** 2)))
            h_new = _procrustes(sk, target)
            if np.sum((h_new @ sk - target) ** 2) > errors[-1]:
                h_new = h
            if len(errors) > 1 and errors[-2] - errors[-1] <= tol * max(errors[-2], 1.0):
                converged = True
            if np.allclose(h_new, h, atol=1e-14, rtol=0):
                converged = True
            h = h_new
            if converged:
                break
        final = float(np.sum((h @ sk - _quantize(h @ sk, alphabet)) ** 2))
        if not errors or final <= errors[-1]:
            errors.append(final)
        if best is None or errors[-1] < best[2][-1]:
            best = (h, converged, errors)
    h, converged, errors = best
    idx = list(estimate.support.indices)
    u = estimate.u_hat.copy()
    s = estimate.s_hat.copy()
    u[:, idx] = estimate.u_k @ h.T
    s[idx] = h @ sk
    out = replace(estimate, u_hat=u, s_hat=s, converged=bool(converged))
    return out, h, errors
