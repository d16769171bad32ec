"""Small dense primal-dual interior-point solver for one PSD block plus an LP block.

Solves

    minimize    <C, X> + c . x
    subject to  <A_i, X> + a_i . x = b_i,   i = 1..m
                X >= 0 (n x n real symmetric),  x >= 0

with the HKM search direction and Mehrotra predictor-corrector steps from
an infeasible start. Sizes here are tiny (n <= 128, m <= 100), so every
step is dense linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SdpError(RuntimeError):
    """The interior-point iteration stopped before reaching tolerance."""

    def __init__(self, message, primal_residual, dual_residual, gap, iterations):
        super().__init__(f"{message} (primal {primal_residual:.2e}, dual {dual_residual:.2e}, "
                         f"gap {gap:.2e}, {iterations} iterations)")
        self.primal_residual = primal_residual
        self.dual_residual = dual_residual
        self.gap = gap
        self.iterations = iterations


@dataclass
class SdpResult:
    X: np.ndarray
    x: np.ndarray
    y: np.ndarray
    S: np.ndarray
    s: np.ndarray
    primal_objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    iterations: int


def _sym(m):
    return 0.5 * (m + m.T)


def _max_step(X, dX):
    """Largest alpha with X + alpha dX PSD (X positive definite)."""
    try:
        chol = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    inv = np.linalg.inv(chol)
    lam = np.linalg.eigvalsh(_sym(inv @ dX @ inv.T)).min()
    return np.inf if lam >= 0 else -1.0 / lam


def _max_step_lp(x, dx):
    neg = dx < 0
    return np.inf if not np.any(neg) else float(np.min(-x[neg] / dx[neg]))


def solve_sdp(C, A, b, c=None, a=None, tol=1e-9, max_iter=100, accept=1e-5, stall=5):
    """Solve the block problem described in the module docstring.

    ``A`` is ``(m, n, n)``, ``a`` is ``(m, p)``. Iteration stops once primal
    and dual residuals and the relative gap are all below ``tol``. Near
    degenerate (low-rank) optima round-off can pin a residual slightly above
    ``tol``; when the worst residual has not improved for ``stall``
    iterations, or ``max_iter`` runs out, the best iterate is returned if it
    is within ``accept``, otherwise :class:`SdpError` is raised.
    """
    C = _sym(np.asarray(C, float))
    A = np.asarray(A, float)
    A = 0.5 * (A + A.transpose(0, 2, 1))
    b = np.asarray(b, float)
    m, n, _ = A.shape
    c = np.zeros(0) if c is None else np.asarray(c, float)
    a = np.zeros((m, 0)) if a is None else np.asarray(a, float)
    p = c.size

    X, S = np.eye(n), np.eye(n)
    x, s = np.ones(p), np.ones(p)
    y = np.zeros(m)
    norm_b = 1 + np.linalg.norm(b)
    norm_c = 1 + np.sqrt(np.linalg.norm(C) ** 2 + np.linalg.norm(c) ** 2)
    A_flat = A.reshape(m, -1)

    def op(Xm, xv):
        return A_flat @ Xm.ravel() + a @ xv

    def adj(yv):
        return np.tensordot(yv, A, axes=1), a.T @ yv

    pres = dres = gap = np.inf
    best, best_err, since = None, np.inf, 0
    for it in range(1, max_iter + 1):
        rp = b - op(X, x)
        AtY, aty = adj(y)
        Rd = C - AtY - S
        rd = c - aty - s
        pobj = float(np.sum(C * X) + c @ x)
        dobj = float(b @ y)
        pres = np.linalg.norm(rp) / norm_b
        dres = np.sqrt(np.linalg.norm(Rd) ** 2 + np.linalg.norm(rd) ** 2) / norm_c
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        if pres < tol and dres < tol and gap < tol:
            return SdpResult(X, x, y, S, s, pobj, dobj, pres, dres, it)
        err = max(pres, dres, gap)
        if not np.isfinite(err) or max(np.abs(X).max(), np.abs(S).max()) > 1e12:
            break   # diverging iterates: infeasible or unbounded
        if err < 0.5 * best_err:
            since = 0
        else:
            since += 1
        if err < best_err:
            best_err = err
            best = SdpResult(X, x, y, S, s, pobj, dobj, pres, dres, it)
        if since >= stall and best_err < accept:
            return best

        mu = (np.sum(X * S) + x @ s) / (n + p)
        S_inv = np.linalg.inv(S)
        S_inv = _sym(S_inv)
        XA = np.einsum("ab,mbc->mac", X, A)
        XAS = XA @ S_inv
        M = np.einsum("iab,jba->ij", A, XAS)
        if p:
            M += (a * (x / s)) @ a.T
        M = _sym(M)
        XRdS = _sym(X @ Rd @ S_inv)

        def direction(sigma_mu, corr_X, corr_x):
            H = _sym(sigma_mu * S_inv - X - corr_X @ S_inv)
            hl = (sigma_mu - x * s - corr_x) / s if p else np.zeros(0)
            rhs = rp - op(H - XRdS, hl - (x / s) * rd if p else hl)
            try:
                dy = np.linalg.solve(M, rhs)
            except np.linalg.LinAlgError:
                dy = np.linalg.lstsq(M, rhs, rcond=None)[0]
            AtdY, atdy = adj(dy)
            dS = Rd - AtdY
            ds = rd - atdy
            dX = H - _sym(X @ dS @ S_inv)
            dx = hl - (x / s) * ds if p else hl
            return dX, dx, dy, dS, ds

        zero_X = np.zeros_like(X)
        dX, dx, dy, dS, ds = direction(0.0, zero_X, np.zeros(p))
        ap = min(1.0, _max_step(X, dX), _max_step_lp(x, dx))
        ad = min(1.0, _max_step(S, dS), _max_step_lp(s, ds))
        mu_aff = (np.sum((X + ap * dX) * (S + ad * dS)) + (x + ap * dx) @ (s + ad * ds)) / (n + p)
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
        dX, dx, dy, dS, ds = direction(sigma * mu, dX @ dS, dx * ds)
        ap = min(1.0, 0.98 * _max_step(X, dX), 0.98 * _max_step_lp(x, dx))
        ad = min(1.0, 0.98 * _max_step(S, dS), 0.98 * _max_step_lp(s, ds))
        finite = all(np.all(np.isfinite(v)) for v in (dX, dx, dy, dS, ds))
        if not finite or (ap <= 0 and ad <= 0):
            break
        X = _sym(X + ap * dX)
        x = x + ap * dx
        y = y + ad * dy
        S = _sym(S + ad * dS)
        s = s + ad * ds

    if best is not None and best_err < accept:
        return best
    raise SdpError("interior-point iteration did not converge", pres, dres, gap, it)
