"""
Slow dense reference solver for the ``tv_gl``, ``esa_gl`` and ``dong``
programs.

This is a log-barrier interior-point method written directly in the
half-vectorised variable ``x = -vech(L) >= 0`` with ``vec(L) = -M x``
(``M`` from :func:`topoinfer.identifiability.duplication_matrix``). All
problem data are built from Kronecker products and ``vec`` identities:

* ``tr(Y' L Y) = vec(Y Y')' vec(L)``
* l1 total variation ``= vec(T)' M x`` with ``T_ij = ||y_i - y_j||_1``
* ``||L||_F^2 = x' M'M x``
* subspace rows ``(U_K' kron (I - U_K U_K')) vec(L) = 0``
* trace ``= sum of the diagonal entries of vec(L)``

It shares no code with :mod:`topoinfer.recovery` beyond the problem
container and is meant for cross-checking at N <= 10 only.
"""

from dataclasses import dataclass

import numpy as np

from .identifiability import duplication_matrix


@dataclass(frozen=True)
class OracleResult:
    laplacian: np.ndarray
    objective_value: float
    gap: float
    newton_steps: int


def _program(problem):
    y = problem.y
    u = problem.u_k
    n = problem.n_nodes
    m_dup = duplication_matrix(n)
    if problem.variant == "tv_gl":
        t = np.abs(y[:, None, :] - y[None, :, :]).sum(axis=2)
        c = m_dup.T @ t.ravel(order="F")
    elif problem.variant == "dong":
        c = -m_dup.T @ (y @ y.T).ravel(order="F")
    elif problem.variant == "esa_gl":
        yh = u @ problem.s_hat_k
        c = -m_dup.T @ (yh @ yh.T).ravel(order="F")
    else:
        raise ValueError(f"the oracle does not handle {problem.variant!r}")
    squared = problem.variant != "esa_gl" or problem.esa_squared
    diag_sel = np.zeros(n * n)
    diag_sel[np.arange(n) * (n + 1)] = 1.0
    rows = [-(diag_sel @ m_dup)[None, :]]
    rhs = [np.array([problem.trace])]
    if problem.variant != "dong":
        proj = np.eye(n) - u @ u.T
        rows.append(-np.kron(u.T, proj) @ m_dup)
        rhs.append(np.zeros(n * u.shape[1]))
    return c, m_dup, np.vstack(rows), np.concatenate(rhs), squared


def solve_oracle(problem, tol: float = 1e-10, max_newton: int = 200) -> OracleResult:
    """Barrier method with equality constraints eliminated by an SVD null-space basis.

    The complete graph with trace ``p`` lies in the interior of every
    feasible set handled here and serves as the starting point. For the
    plain Frobenius penalty an epigraph variable ``s >= ||M x||`` is
    added with the second-order-cone barrier ``-log(s^2 - ||M x||^2)``.
    """
    c, m_dup, a_eq, b_eq, squared = _program(problem)
    n = problem.n_nodes
    n_x = c.size
    mu = float(problem.mu)
    x0 = np.full(n_x, problem.trace / (n * (n - 1)))
    if np.linalg.norm(a_eq @ x0 - b_eq) > 1e-9 * max(1.0, problem.trace):
        raise ValueError("complete graph is not feasible; u_k must contain the constant vector")
    _, sv, vt = np.linalg.svd(a_eq)
    rank = int(np.sum(sv > 1e-10 * sv[0] * max(a_eq.shape)))
    basis = vt[rank:].T
    gram = m_dup.T @ m_dup
    cone = (not squared) and mu > 0
    if cone:
        # variables (y, s) with x = x0 + basis y
        dim = basis.shape[1] + 1
        z = np.zeros(dim)
        z[-1] = np.sqrt(x0 @ gram @ x0) + 1.0
    else:
        dim = basis.shape[1]
        z = np.zeros(dim)

    def unpack(v):
        if cone:
            return x0 + basis @ v[:-1], v[-1]
        return x0 + basis @ v, None

    def objective(v):
        x, s = unpack(v)
        val = c @ x
        if cone:
            val += mu * s
        elif mu > 0:
            val += mu * (x @ gram @ x)
        return val

    def barrier(v):
        x, s = unpack(v)
        if np.any(x <= 0):
            return np.inf
        val = -np.sum(np.log(x))
        if cone:
            gap = s * s - x @ gram @ x
            if gap <= 0 or s <= 0:
                return np.inf
            val -= np.log(gap)
        return val

    def derivatives(v, tau):
        x, s = unpack(v)
        g_x = tau * c - 1.0 / x
        h_x = np.diag(1.0 / x**2)
        if not cone:
            if mu > 0:
                g_x = g_x + tau * 2.0 * mu * gram @ x
                h_x = h_x + tau * 2.0 * mu * gram
            return basis.T @ g_x, basis.T @ h_x @ basis
        gx = gram @ x
        gap = s * s - x @ gx
        # gradient/Hessian of -log(s^2 - x'Gx)
        gb_x = 2.0 * gx / gap
        gb_s = -2.0 * s / gap
        grad_full = np.concatenate([g_x + gb_x, [tau * mu + gb_s]])
        hb = np.zeros((n_x + 1, n_x + 1))
        hb[:n_x, :n_x] = 2.0 * gram / gap + np.outer(gb_x, gb_x)
        hb[:n_x, n_x] = hb[n_x, :n_x] = gb_x * gb_s
        hb[n_x, n_x] = -2.0 / gap + gb_s * gb_s
        hb[:n_x, :n_x] += h_x
        jac = np.zeros((n_x + 1, dim))
        jac[:n_x, :-1] = basis
        jac[n_x, -1] = 1.0
        return jac.T @ grad_full, jac.T @ hb @ jac

    n_ineq = n_x + (2 if cone else 0)
    tau = 1.0
    steps = 0
    while True:
        for _ in range(max_newton):
            g, h = derivatives(z, tau)
            try:
                d = -np.linalg.solve(h, g)
            except np.linalg.LinAlgError:
                d = -np.linalg.lstsq(h, g, rcond=None)[0]
            dec = -g @ d
            steps += 1
            if dec / 2.0 <= 1e-13:
                break
            f0 = tau * objective(z) + barrier(z)
            a = 1.0
            while a > 1e-16:
                cand = z + a * d
                fb = barrier(cand)
                if np.isfinite(fb) and tau * objective(cand) + fb <= f0 - 0.25 * a * dec:
                    break
                a *= 0.5
            else:
                break
            z = z + a * d
        gap = n_ineq / tau
        if gap <= tol * max(1.0, abs(objective(z))):
            break
        tau *= 20.0
    x, _ = unpack(z)
    lap = -(m_dup @ x).reshape(n, n, order="F")
    fro2 = float(np.sum(lap * lap))
    value = float(c @ x) + (mu * np.sqrt(fro2) if cone else mu * fro2)
    return OracleResult(lap, value, n_ineq / tau, steps)
