"""
Convex Laplacian recovery from a (partial) estimated eigenbasis.

The Laplacian is parametrised by its nonnegative edge weights ``w``
(upper-triangle order), which makes symmetry, zero row sums, nonpositive
off-diagonals and positive semidefiniteness structural. What remains is

    minimize    1/2 w'Pw + q'w + c ||R w||_2
    subject to  A w = b,  w >= 0

where ``A w = b`` carries the trace and the eigen-subspace constraint
``(I - U_K U_K') L U_K = 0``. Since ``U_K' U_K = I`` the latter is exactly
``L U_K = U_K C_K`` with ``C_K = U_K' L U_K``, which is PSD whenever ``L``
is. :func:`solve` handles four variants:

``tv_gl``
    l1 total variation of ``Y`` plus ``mu ||L||_F^2`` over the feasible set.
``esa_gl``
    ``tr(S_K' C_K S_K) + mu ||L||_F`` over the feasible set.
``dong``
    ``tr(Y' L Y) + mu ||L||_F^2`` with the trace constraint only.
``kalofolias``
    ``tr(A Z) - alpha 1'log(A 1) + beta ||A||_F^2`` over adjacency matrices,
    solved by a primal-dual splitting.

The first three run an ADMM with the affine set eliminated through a
null-space basis; nonnegativity and the Frobenius-norm term are split off
and handled by their closed-form proximal maps.
"""

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg, optimize

from .graph import (Graph, LaplacianMatrix, incidence_matrix, weights_to_laplacian,
                    laplacian_to_weights)

VARIANTS = ("tv_gl", "esa_gl", "dong", "kalofolias")


@dataclass(frozen=True)
class RecoveryProblem:
    """Inputs of one recovery run.

    ``u_k`` is required by ``tv_gl`` and ``esa_gl``; ``y`` by ``tv_gl``,
    ``dong`` and ``kalofolias``; ``s_hat_k`` by ``esa_gl``. The trace target
    defaults to N. ``esa_squared`` switches the ESA-GL penalty to
    ``mu ||L||_F^2``.
    """

    variant: str
    u_k: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    s_hat_k: Optional[np.ndarray] = None
    mu: float = 1.0
    trace_target: Optional[float] = None
    alpha: float = 1.0
    beta: float = 1.0
    esa_squared: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        need = {
            "tv_gl": ("u_k", "y"),
            "esa_gl": ("u_k", "s_hat_k"),
            "dong": ("y",),
            "kalofolias": ("y",),
        }[self.variant]
        for name in need:
            if getattr(self, name) is None:
                raise ValueError(f"variant {self.variant!r} requires {name}")
        for name in ("u_k", "y", "s_hat_k"):
            v = getattr(self, name)
            if v is not None:
                v = np.array(v, dtype=float)
                if v.ndim == 1:
                    v = v[:, None]
                v.setflags(write=False)
                object.__setattr__(self, name, v)
        if self.u_k is not None:
            err = np.linalg.norm(self.u_k.T @ self.u_k - np.eye(self.u_k.shape[1]))
            if err > 1e-8 * max(1, self.u_k.shape[1]):
                raise ValueError(f"u_k columns are not orthonormal (error {err:.3g})")
        if self.variant == "esa_gl" and self.s_hat_k.shape[0] != self.u_k.shape[1]:
            raise ValueError("s_hat_k must have one row per column of u_k")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.trace_target is not None and self.trace_target <= 0:
            raise ValueError("trace_target must be > 0")
        if self.variant == "kalofolias" and (self.alpha <= 0 or self.beta <= 0):
            raise ValueError("alpha and beta must be > 0")

    @property
    def n_nodes(self) -> int:
        src = self.u_k if self.u_k is not None else self.y
        return src.shape[0]

    @property
    def trace(self) -> float:
        return float(self.trace_target) if self.trace_target is not None else float(self.n_nodes)


@dataclass(frozen=True)
class SolverConfig:
    penalty: float = 1.0
    max_iterations: int = 5000
    primal_tol: float = 1e-6
    dual_tol: float = 1e-6
    adaptive: bool = True
    relaxation: float = 1.6
    psd_eig_floor: float = 0.0
    polish: bool = True
    polish_start: int = 200
    seed: Optional[int] = None

    def __post_init__(self):
        if self.penalty <= 0 or self.primal_tol <= 0 or self.dual_tol <= 0:
            raise ValueError("penalty and tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.polish_start < 1:
            raise ValueError("polish_start must be >= 1")
        if not 0 < self.relaxation < 2:
            raise ValueError("relaxation must lie in (0, 2)")


@dataclass(frozen=True)
class ResidualReport:
    subspace: float
    trace: float
    row_sum: float
    sign: float
    psd: float

    def max(self) -> float:
        return max(self.subspace, self.trace, self.row_sum, self.sign, self.psd)

    def as_dict(self) -> dict:
        return dict(subspace=self.subspace, trace=self.trace, row_sum=self.row_sum,
                    sign=self.sign, psd=self.psd)


@dataclass(frozen=True)
class RecoveredGraph:
    laplacian: LaplacianMatrix
    c_k: Optional[np.ndarray]
    adjacency: Graph
    residuals: ResidualReport
    objective_value: float
    status: str
    iterations: int = 0
    runtime_ms: float = 0.0
    weights: np.ndarray = field(default=None, repr=False)

    def diagnostics(self) -> dict:
        return dict(objective_value=self.objective_value, status=self.status,
                    iterations=self.iterations, residuals=self.residuals.as_dict())


def total_variation(matrix, y) -> float:
    """l1 total variation ``sum_m sum_{i != j} a_ij |Y_im - Y_jm|``.

    ``matrix`` may be an adjacency or a Laplacian; off-diagonal weights are
    taken as ``|M_ij|``, so both give the same value. Every undirected edge
    is counted twice.
    """
    m = np.asarray(matrix, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if m.shape != (y.shape[0], y.shape[0]):
        raise ValueError(f"matrix {m.shape} does not match {y.shape[0]} nodes")
    a = np.abs(m)
    np.fill_diagonal(a, 0.0)
    diff = np.abs(y[:, None, :] - y[None, :, :]).sum(axis=2)
    return float(np.sum(a * diff))


def feasibility_residuals(lap, u_k=None, trace_target: Optional[float] = None) -> ResidualReport:
    """Constraint violations of ``lap`` for the feasible set of ``u_k``.

    ``subspace`` is ``||L U_K - U_K C_K||_F`` with ``C_K = U_K' L U_K``;
    ``psd`` is the negative part of the smallest eigenvalue of ``C_K``.
    Without ``u_k`` both are zero; without ``trace_target`` the trace
    residual is zero.
    """
    lap = np.asarray(lap, dtype=float)
    n = lap.shape[0]
    off = lap[~np.eye(n, dtype=bool)]
    sign = float(max(0.0, off.max())) if off.size else 0.0
    row_sum = float(np.max(np.abs(lap.sum(axis=1))))
    trace = abs(float(np.trace(lap)) - trace_target) if trace_target is not None else 0.0
    subspace = psd = 0.0
    if u_k is not None:
        u = np.asarray(u_k, dtype=float)
        c = u.T @ lap @ u
        subspace = float(np.linalg.norm(lap @ u - u @ c))
        psd = float(max(0.0, -np.linalg.eigvalsh(0.5 * (c + c.T))[0]))
    return ResidualReport(subspace, trace, row_sum, sign, psd)


# ---------------------------------------------------------------------------
# problem data in the edge-weight parametrisation


def frobenius_gram(n: int) -> np.ndarray:
    """``H`` with ``||weights_to_laplacian(w)||_F^2 = w' H w``."""
    e = np.abs(incidence_matrix(n))
    return e.T @ e + 2.0 * np.eye(e.shape[1])


def pairwise_sq_distances(y) -> np.ndarray:
    """``||y_i - y_j||^2`` per node pair, upper-triangle order."""
    y = np.asarray(y, dtype=float)
    iu, ju = np.triu_indices(y.shape[0], 1)
    d = y[iu] - y[ju]
    return np.sum(d * d, axis=1)


def pairwise_abs_distances(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    iu, ju = np.triu_indices(y.shape[0], 1)
    return np.sum(np.abs(y[iu] - y[ju]), axis=1)


def subspace_constraint_matrix(u_k) -> np.ndarray:
    """Rows of ``vec((I - U U') L(w) U) = G w`` (node-major, then column)."""
    u = np.asarray(u_k, dtype=float)
    n = u.shape[0]
    e = incidence_matrix(n)
    h = u.T @ e
    g = e - u @ h
    return np.einsum("ne,ke->nke", g, h).reshape(n * u.shape[1], e.shape[1])


@dataclass
class _Program:
    p_mat: Optional[np.ndarray]
    q: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    norm_weight: float = 0.0
    r_mat: Optional[np.ndarray] = None
    consistency: float = 0.0
    h_mat: Optional[np.ndarray] = None

    def objective(self, w) -> float:
        val = float(self.q @ w)
        if self.p_mat is not None:
            val += 0.5 * float(w @ self.p_mat @ w)
        if self.norm_weight:
            val += self.norm_weight * float(np.linalg.norm(self.r_mat @ w))
        return val


def build_program(problem: RecoveryProblem) -> _Program:
    """Edge-weight form of a ``tv_gl``, ``esa_gl`` or ``dong`` problem."""
    n = problem.n_nodes
    n_pairs = n * (n - 1) // 2
    gram = frobenius_gram(n)
    trace_row = np.full((1, n_pairs), 2.0)
    p_mat = None
    norm_weight = 0.0
    r_mat = None
    if problem.variant == "tv_gl":
        q = 2.0 * pairwise_abs_distances(problem.y)
        p_mat = 2.0 * problem.mu * gram
    elif problem.variant == "dong":
        q = pairwise_sq_distances(problem.y)
        p_mat = 2.0 * problem.mu * gram
    elif problem.variant == "esa_gl":
        q = pairwise_sq_distances(problem.u_k @ problem.s_hat_k)
        if problem.esa_squared:
            p_mat = 2.0 * problem.mu * gram
        elif problem.mu > 0:
            norm_weight = problem.mu
            r_mat = np.linalg.cholesky(gram).T
    else:
        raise ValueError(f"variant {problem.variant!r} is not an edge-weight QP")
    rows = [trace_row]
    rhs = [np.array([problem.trace])]
    if problem.variant in ("tv_gl", "esa_gl"):
        g = subspace_constraint_matrix(problem.u_k)
        rows.append(g)
        rhs.append(np.zeros(g.shape[0]))
    a_eq, b_eq = np.vstack(rows), np.concatenate(rhs)
    # the subspace rows are highly redundant; keep an orthonormal row basis
    u, sv, vt = np.linalg.svd(a_eq, full_matrices=False)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    b_red = (u[:, :rank].T @ b_eq) / sv[:rank]
    a_red = vt[:rank]
    consistency = float(np.linalg.norm(a_eq @ (a_red.T @ b_red) - b_eq))
    h_mat = gram if r_mat is not None else None
    return _Program(p_mat, q, a_red, b_red, norm_weight, r_mat, consistency, h_mat)


def _affine_reduction(a_eq, b_eq, rel_tol: float = 1e-10):
    """Particular solution, orthonormal null-space basis and consistency residual."""
    u, sv, vt = np.linalg.svd(a_eq, full_matrices=True)
    rank = int(np.sum(sv > rel_tol * sv[0])) if sv.size and sv[0] > 0 else 0
    x_p = vt[:rank].T @ ((u[:, :rank].T @ b_eq) / sv[:rank])
    null = vt[rank:].T
    resid = float(np.linalg.norm(a_eq @ x_p - b_eq))
    return x_p, null, resid


def _kkt_solve(p_ff, a_f, rhs_top, rhs_bot):
    """Least-squares solution of ``[[P, A'], [A, 0]] [x; lam] = [top; bot]``.

    The right-hand sides may carry several columns; the returned residual
    is the largest relative one.
    """
    nf = p_ff.shape[0]
    kkt = np.block([[p_ff, a_f.T], [a_f, np.zeros((a_f.shape[0], a_f.shape[0]))]])
    rhs = np.concatenate([rhs_top, rhs_bot])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", linalg.LinAlgWarning)
            sol = linalg.solve(kkt, rhs, assume_a="sym", check_finite=False)
    except (linalg.LinAlgError, linalg.LinAlgWarning):
        # singular when the free columns of A are rank deficient
        sol = linalg.lstsq(kkt, rhs, cond=1e-12, lapack_driver="gelsy")[0]
    resid = np.linalg.norm(kkt @ sol - rhs, axis=0) / np.maximum(1.0, np.linalg.norm(rhs, axis=0))
    return sol[:nf], sol[nf:], float(np.max(resid))


def _face_solve(prog: _Program, free: np.ndarray, tol: float = 1e-9):
    """Minimiser over ``{A w = b, w_i = 0 for i not in free}`` ignoring signs.

    Returns ``(w, lam)`` or ``None`` when the face system is inconsistent
    or has no bounded minimiser.
    """
    n = prog.q.size
    if not free.any():
        return None
    a_f = prog.a_eq[:, free]
    q_f = prog.q[free]
    if prog.r_mat is not None and prog.norm_weight > 0:
        # stationarity  q + mu H w / ||R w|| + A'lam = 0  is linear in v = w / ||R w||
        h_ff = prog.h_mat[np.ix_(free, free)]
        m = prog.norm_weight * h_ff
        top = np.column_stack([-q_f, np.zeros_like(q_f)])
        bot = np.column_stack([np.zeros_like(prog.b_eq), prog.b_eq])
        v2, l2, res = _kkt_solve(m, a_f, top, bot)
        if res > tol:
            return None
        va, vb = v2[:, 0], v2[:, 1]
        la, lb = l2[:, 0], l2[:, 1]
        qa, qc, qd = vb @ h_ff @ vb, va @ h_ff @ vb, va @ h_ff @ va - 1.0
        if qa <= 0:
            return None
        disc = qc * qc - qa * qd
        if disc < 0:
            return None
        sc = (-qc + np.sqrt(disc)) / qa
        if sc <= 0:
            return None
        w = np.zeros(n)
        w[free] = (va + sc * vb) / sc
        return w, la + sc * lb
    p_ff = prog.p_mat[np.ix_(free, free)] if prog.p_mat is not None else np.zeros((free.sum(),) * 2)
    wf, lam, res = _kkt_solve(p_ff, a_f, -q_f, prog.b_eq)
    if res > tol:
        return None
    w = np.zeros(n)
    w[free] = wf
    return w, lam


def _gradient(prog: _Program, w, lam) -> np.ndarray:
    grad = prog.q + prog.a_eq.T @ lam
    if prog.p_mat is not None:
        grad = grad + prog.p_mat @ w
    if prog.r_mat is not None and prog.norm_weight > 0:
        hw = prog.h_mat @ w
        grad = grad + prog.norm_weight * hw / np.sqrt(w @ hw)
    return grad


def _best_fixed_gradient(a_eq, free, grad_fixed, tol: float = 0.0) -> np.ndarray:
    """Fixed-coordinate gradient under the multiplier that maximises its minimum.

    When the free columns of ``A`` are rank deficient the multiplier is only
    determined up to ``null(A_F')``; shifting it there leaves the free
    stationarity intact and changes ``grad_fixed`` by ``A_fixed' nu``.
    """
    if grad_fixed.min() >= -tol:
        return grad_fixed
    u, sv, _ = np.linalg.svd(a_eq[:, free], full_matrices=True)
    rank = int(np.sum(sv > 1e-10 * sv[0])) if sv.size and sv[0] > 0 else 0
    basis = u[:, rank:]
    k = basis.shape[1]
    if k == 0:
        return grad_fixed
    b = a_eq[:, ~free].T @ basis
    # maximise t subject to grad_fixed + b nu >= t, t <= 0
    cost = np.zeros(k + 1)
    cost[-1] = -1.0
    a_ub = np.hstack([-b, np.ones((b.shape[0], 1))])
    res = optimize.linprog(cost, A_ub=a_ub, b_ub=grad_fixed,
                           bounds=[(None, None)] * k + [(None, 0.0)], method="highs")
    if res.status != 0:
        return grad_fixed
    return grad_fixed + b @ res.x[:k]


def _nearest_feasible(prog: _Program, guess) -> Optional[np.ndarray]:
    """Feasible ``w`` closest to ``guess`` in l1 (a small LP), or ``None``."""
    n = guess.size
    m = prog.a_eq.shape[0]
    eye = np.eye(n)
    cost = np.concatenate([np.zeros(n), np.ones(n)])
    a_ub = np.block([[eye, -eye], [-eye, -eye]])
    b_ub = np.concatenate([guess, -guess])
    a_eq = np.hstack([prog.a_eq, np.zeros((m, n))])
    res = optimize.linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=prog.b_eq,
                           bounds=[(0, None)] * n + [(None, None)] * n, method="highs")
    if res.status != 0:
        return None
    w = np.maximum(res.x[:n], 0.0)
    w[w < 1e-12 * max(1.0, w.max())] = 0.0
    return w


def _newton_face_step(prog: _Program, w, free):
    """One damped Newton step of ``q'w + mu ||R w||`` on the face, capped at ``w >= 0``.

    Returns ``(w_new, hit, lam)``. ``hit`` is the index that reached zero;
    ``lam`` is set (and ``w_new is w``) when ``w`` is already stationary on
    the face. ``w_new`` is ``None`` when the step fails.
    """
    hmat = prog.h_mat
    hw = hmat @ w
    t = np.sqrt(w @ hw)
    mu = prog.norm_weight
    grad = prog.q + mu * hw / t
    hess = mu * (hmat / t - np.outer(hw, hw) / t**3)
    d_f, lam, res = _kkt_solve(hess[np.ix_(free, free)], prog.a_eq[:, free], -grad[free],
                               np.zeros(prog.a_eq.shape[0]))
    if res > 1e-8:
        return None, None, None
    d = np.zeros_like(w)
    d[free] = d_f
    slope = grad @ d
    f0 = prog.objective(w)
    if slope >= -1e-12 * max(1.0, abs(f0)):
        return w, None, lam
    neg = free & (d < 0)
    a_max = np.min(w[neg] / -d[neg]) if neg.any() else np.inf
    a = min(1.0, a_max)
    for _ in range(60):
        if prog.objective(w + a * d) <= f0 + 1e-4 * a * slope:
            break
        a *= 0.5
    else:
        return w, None, lam
    hit = None
    if a == a_max:
        hit = np.flatnonzero(neg)[np.argmin(w[neg] / -d[neg])]
    return np.maximum(w + a * d, 0.0), hit, None


def _active_set_refine(prog: _Program, guess, max_steps: int = 2000, tol: float = 1e-7):
    """Primal active-set iterations on ``w >= 0`` warm-started near ``guess``.

    Each face subproblem is solved exactly (or, for the Frobenius-norm
    objective when the face has no bounded minimiser, by damped Newton
    steps), and a point is returned only with a KKT certificate. Returns
    ``None`` if none is reached within ``max_steps`` face solves.
    """
    w = _nearest_feasible(prog, np.maximum(guess, 0.0))
    if w is None:
        return None
    free = w > 0
    has_norm = prog.r_mat is not None and prog.norm_weight > 0
    for _ in range(max_steps):
        sol = _face_solve(prog, free, tol)
        if sol is None:
            if not has_norm:
                return None
            w_new, hit, lam = _newton_face_step(prog, w, free)
            if w_new is None:
                return None
            if lam is None:
                w = w_new
                if hit is not None:
                    free[hit] = False
                    w[hit] = 0.0
                continue
        else:
            target, lam = sol
            step = target - w
            dec = free & (step < 0) & (target < 0)
            if dec.any():
                # move towards the face minimiser until a weight hits zero
                ratios = w[dec] / -step[dec]
                j = np.flatnonzero(dec)[np.argmin(ratios)]
                w = w + ratios.min() * step
                w[j] = 0.0
                free[j] = False
                w[~free] = 0.0
                continue
            w = target
        grad = _gradient(prog, w, lam)
        g_scale = max(1.0, np.abs(prog.q).max(), np.abs(grad - prog.q).max())
        if np.abs(grad[free]).max() > 1e-6 * g_scale:
            return None
        fixed = ~free
        if not fixed.any():
            return w
        g_fixed = _best_fixed_gradient(prog.a_eq, free, grad[fixed], 1e-7 * g_scale)
        if g_fixed.min() >= -1e-7 * g_scale:
            w[free] = np.maximum(w[free], 0.0)
            return w
        free[np.flatnonzero(fixed)[np.argmin(g_fixed)]] = True
    return None


def _admm(prog: _Program, config: SolverConfig, extra_check):
    """Scaled-form ADMM on the reduced variable ``xi`` with ``w = x_p + N xi``.

    With ``config.polish`` the iterate is handed to an active-set refinement
    at iterations ``polish_start * 4**j`` and at the end; a refined point is
    returned as soon as it carries a KKT certificate.
    """
    x_p, null, _ = _affine_reduction(prog.a_eq, prog.b_eq)
    scale_b = max(1.0, float(np.linalg.norm(prog.b_eq)))
    if prog.consistency > 1e-8 * scale_b:
        return None, "infeasible", 0
    n = x_p.size
    d = null.shape[1]
    if d == 0:
        w = x_p.copy()
        return w, ("converged" if w.min() >= -config.primal_tol else "infeasible"), 0

    has_norm = prog.r_mat is not None and prog.norm_weight > 0
    ntpn = null.T @ prog.p_mat @ null if prog.p_mat is not None else np.zeros((d, d))
    lin = null.T @ (prog.q + (prog.p_mat @ x_p if prog.p_mat is not None else 0.0))
    if has_norm:
        rn = prog.r_mat @ null
        rx = prog.r_mat @ x_p
        ntrtrn = rn.T @ rn
    rng = np.random.default_rng(config.seed)

    rho = config.penalty
    factors = {}

    def factor(rho):
        key = float(rho)
        if key not in factors:
            m = ntpn + rho * np.eye(d)
            if has_norm:
                m = m + rho * ntrtrn
            factors[key] = linalg.cho_factor(m)
        return factors[key]

    # state: z (w >= 0 copy), u (scaled dual); v, t for the norm split
    if config.seed is None:
        z = np.maximum(x_p, 0.0)
        u = np.zeros(n)
    else:
        z = rng.random(n) * (2.0 * abs(prog.b_eq[0]) / n)
        u = 0.1 * rng.standard_normal(n)
    if has_norm:
        v = prog.r_mat @ z
        t = np.zeros(v.size)
    alpha = config.relaxation
    status = "max_iter"
    tried = set()
    next_polish = config.polish_start
    it = 0
    for it in range(1, config.max_iterations + 1):
        rhs = -lin + rho * (null.T @ (z - u - x_p))
        if has_norm:
            rhs += rho * (rn.T @ (v - t - rx))
        xi = linalg.cho_solve(factor(rho), rhs)
        x = x_p + null @ xi
        x_hat = alpha * x + (1 - alpha) * z
        z_old = z
        z = np.maximum(x_hat + u, 0.0)
        u = u + x_hat - z
        r_sq = np.sum((x - z) ** 2)
        s_vec = z - z_old
        if has_norm:
            rw = prog.r_mat @ x
            rw_hat = alpha * rw + (1 - alpha) * v
            v_old = v
            arg = rw_hat + t
            nrm = np.linalg.norm(arg)
            shrink = prog.norm_weight / rho
            v = arg * max(0.0, 1.0 - shrink / nrm) if nrm > 0 else np.zeros_like(arg)
            t = t + rw_hat - v
            r_sq += np.sum((rw - v) ** 2)
            dual_vec = null.T @ (s_vec + prog.r_mat.T @ (v - v_old))
            dual_scale = np.linalg.norm(null.T @ (u + prog.r_mat.T @ t))
            primal_scale = max(np.linalg.norm(x), np.linalg.norm(z), np.linalg.norm(rw), np.linalg.norm(v))
        else:
            dual_vec = null.T @ s_vec
            dual_scale = np.linalg.norm(null.T @ u)
            primal_scale = max(np.linalg.norm(x), np.linalg.norm(z))
        r_norm = np.sqrt(r_sq)
        s_norm = rho * np.linalg.norm(dual_vec)
        eps_pri = config.primal_tol * max(1.0, primal_scale)
        eps_dual = config.dual_tol * max(1.0, rho * dual_scale, np.linalg.norm(lin))
        if config.polish and it == next_polish:
            next_polish *= 4
            # active where the slack is smaller than the multiplier
            free = z > -rho * u
            key = np.packbits(free).tobytes()
            if key not in tried:
                tried.add(key)
                w = _active_set_refine(prog, np.where(free, z, 0.0))
                if w is not None and extra_check(w):
                    return w, "converged", it
        if r_norm <= eps_pri and s_norm <= eps_dual and extra_check(z):
            status = "converged"
            break
        if config.adaptive and it % 10 == 0:
            rp, rd = r_norm / eps_pri, s_norm / eps_dual
            if rp > 10 * rd and rho < 1e8:
                rho *= 2.0
                u /= 2.0
                if has_norm:
                    t /= 2.0
            elif rd > 10 * rp and rho > 1e-8:
                rho /= 2.0
                u *= 2.0
                if has_norm:
                    t *= 2.0
    if config.polish and np.packbits(z > -rho * u).tobytes() not in tried:
        w = _active_set_refine(prog, np.where(z > -rho * u, z, 0.0))
        if w is not None and extra_check(w):
            return w, "converged", it
    return z, status, it


def _solve_qp(problem: RecoveryProblem, config: SolverConfig):
    prog = build_program(problem)
    n = problem.n_nodes
    u_k = problem.u_k if problem.variant in ("tv_gl", "esa_gl") else None
    limit = 10.0 * config.primal_tol

    def extra_check(w):
        lap = weights_to_laplacian(w, n)
        return feasibility_residuals(lap, u_k, problem.trace).max() <= limit

    w, status, iters = _admm(prog, config, extra_check)
    if w is None:
        return None, float("nan"), status, iters
    return w, prog.objective(w), status, iters


def _solve_kalofolias(problem: RecoveryProblem, config: SolverConfig):
    """Forward-backward-forward primal-dual iteration on ``(w, degrees)``."""
    y = problem.y
    n = y.shape[0]
    z = pairwise_sq_distances(y)
    e = np.abs(incidence_matrix(n))
    alpha, beta = problem.alpha, problem.beta
    # gradient of 2*beta*||w||^2 and 2 z'w (factor 2: each pair appears twice in A)
    lip = 4.0 * beta
    op_norm = np.sqrt(2.0 * (n - 1))
    gamma = 0.9 / (lip + op_norm)
    rng = np.random.default_rng(config.seed)
    w = np.full(z.size, 1.0) if config.seed is None else rng.random(z.size) + 0.5
    v = e @ w
    status = "max_iter"
    it = 0
    for it in range(1, config.max_iterations + 1):
        yw = w - gamma * (lip * w + e.T @ v)
        yv = v + gamma * (e @ w)
        pw = np.maximum(0.0, yw - 2.0 * gamma * z)
        pv = 0.5 * (yv - np.sqrt(yv * yv + 4.0 * alpha * gamma))
        qw = pw - gamma * (lip * pw + e.T @ pv)
        qv = pv + gamma * (e @ pw)
        w_new = w - yw + qw
        v = v - yv + qv
        change = np.linalg.norm(w_new - w)
        w = w_new
        if change <= config.primal_tol * max(1.0, np.linalg.norm(w)):
            status = "converged"
            break
    w = np.maximum(w, 0.0)
    deg = np.maximum(e @ w, 1e-8)
    obj = float(2.0 * z @ w - alpha * np.sum(np.log(deg)) + 2.0 * beta * w @ w)
    return w, obj, status, it


def solve(problem: RecoveryProblem, config: Optional[SolverConfig] = None) -> RecoveredGraph:
    """Solve a recovery problem; see the module docstring for the variants.

    ``status`` is ``converged``, ``max_iter`` (best iterate returned) or
    ``infeasible`` (the affine constraints have no solution, e.g. when
    ``u_k`` spans no invariant subspace of any Laplacian with the requested
    trace).
    """
    config = config or SolverConfig()
    start = time.perf_counter()
    n = problem.n_nodes
    if problem.variant == "kalofolias":
        w, obj, status, iters = _solve_kalofolias(problem, config)
    else:
        w, obj, status, iters = _solve_qp(problem, config)
    elapsed = 1e3 * (time.perf_counter() - start)
    if w is None:
        w = np.zeros(n * (n - 1) // 2)
    lap = weights_to_laplacian(w, n)
    u_k = problem.u_k if problem.variant in ("tv_gl", "esa_gl") else None
    trace_target = None if problem.variant == "kalofolias" else problem.trace
    resid = feasibility_residuals(lap, u_k, trace_target)
    c_k = u_k.T @ lap @ u_k if u_k is not None else None
    return RecoveredGraph(
        laplacian=LaplacianMatrix(lap, 1e-6),
        c_k=c_k,
        adjacency=Graph.from_weights(w, n),
        residuals=resid,
        objective_value=float(obj),
        status=status,
        iterations=int(iters),
        runtime_ms=elapsed,
        weights=w,
    )


def objective_value(problem: RecoveryProblem, lap) -> float:
    """Objective of ``problem`` evaluated at a Laplacian (or adjacency for Kalofolias)."""
    lap = np.asarray(lap, dtype=float)
    w = laplacian_to_weights(lap)
    if problem.variant == "kalofolias":
        n = lap.shape[0]
        e = np.abs(incidence_matrix(n))
        z = pairwise_sq_distances(problem.y)
        deg = np.maximum(e @ w, 1e-8)
        return float(2.0 * z @ w - problem.alpha * np.sum(np.log(deg)) + 2.0 * problem.beta * w @ w)
    fro2 = float(np.sum(lap * lap))
    if problem.variant == "tv_gl":
        return total_variation(lap, problem.y) + problem.mu * fro2
    if problem.variant == "dong":
        return float(np.trace(problem.y.T @ lap @ problem.y)) + problem.mu * fro2
    c = problem.u_k.T @ lap @ problem.u_k
    smooth = float(np.trace(problem.s_hat_k.T @ c @ problem.s_hat_k))
    return smooth + problem.mu * (fro2 if problem.esa_squared else np.sqrt(fro2))
