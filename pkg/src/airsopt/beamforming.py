"""Max-min passive beamforming per array axis via lifting and a rank-one penalty.

For one axis (x or y) with responses ``f_l`` and weights ``alpha_l`` we
maximize ``min_l alpha_l |f_l^H theta|^2`` over unit-modulus ``theta``.
Lifting ``W = theta theta^H`` makes the gains linear in ``W`` through the
autocorrelation vector; the rank-one requirement becomes the penalty
``rho (||W||_* - ||W||_2)``, whose concave part is linearized at the
previous iterate. Each linearized problem is a small Hermitian SDP solved
by :mod:`airsopt.sdp` after the usual real 2x2 block embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from airsopt.channel import PhaseProfile, aperture_gains, composite_responses, min_snr
from airsopt.geometry import link_angles
from airsopt.scenario import Pose, Scenario
from airsopt.sdp import solve_sdp


class NoServiceableUserError(ValueError):
    """Every user has zero effective aperture gain at this pose."""


@dataclass(frozen=True)
class ScaConfig:
    penalty: float = 10.0
    max_iter: int = 50
    tol: float = 1e-5
    sdp_tol: float = 1e-9
    sdp_accept: float = 1e-5
    refine_rounds: int = 1

    def __post_init__(self):
        if not self.penalty > 0:
            raise ValueError("penalty must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class ScaInfo:
    """Diagnostics of one axis solve. ``eps_extract`` is the relative loss from W to theta."""

    W: np.ndarray
    delta: float
    objective: float
    penalty_residual: float
    iterations: int
    min_gain: float
    eps_extract: float
    objectives: list = field(default_factory=list)


def autocorrelation(W) -> np.ndarray:
    """r_1 = tr W and r_n = 2 * sum_k W[k+n-1, k] for n >= 2 (linear in W)."""
    W = np.asarray(W)
    n = W.shape[0]
    r = np.empty(n, dtype=complex)
    r[0] = np.trace(W)
    for d in range(1, n):
        r[d] = 2 * np.trace(W, offset=-d)
    return r


def autocorrelation_gain(f, W) -> float:
    """Re(f^H r(W)); equals |f^H theta|^2 for W = theta theta^H and Vandermonde f."""
    return float(np.real(np.vdot(f, autocorrelation(W))))


def gain_matrix(f) -> np.ndarray:
    """Hermitian A with Re tr(A^H W) = Re(f^H r(W)) for every Hermitian W."""
    f = np.asarray(f, dtype=complex)
    n = f.size
    K = np.zeros((n, n), dtype=complex)
    K[np.diag_indices(n)] = np.conj(f[0])
    for d in range(1, n):
        idx = np.arange(n - d)
        K[idx + d, idx] = 2 * np.conj(f[d])
    return 0.5 * (np.conj(K) + K.T)


def realify(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


def unrealify(Z) -> np.ndarray:
    """Hermitian matrix from a real embedding, averaging the redundant blocks."""
    n = Z.shape[0] // 2
    re = 0.5 * (Z[:n, :n] + Z[n:, n:])
    im = 0.5 * (Z[n:, :n] - Z[:n, n:])
    W = re + 1j * im
    return 0.5 * (W + W.conj().T)


def user_weights(scenario: Scenario, pose: Pose) -> np.ndarray:
    """alpha_l = sqrt((F_l / |q - w_l|^2) / sum_k F_k / |q - w_k|^2); infeasible users get 0."""
    link = link_angles(scenario, pose.q, pose.psi)
    f_ag, feasible = aperture_gains(scenario, link)
    ratio = np.where(feasible, np.maximum(f_ag, 0.0), 0.0) / link.dist_users**2
    total = ratio.sum()
    if not total > 0:
        raise NoServiceableUserError("no user has positive effective aperture gain")
    return np.sqrt(ratio / total)


def _normalized(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    norm = np.linalg.norm(w)
    if not norm > 0:
        raise NoServiceableUserError("all user weights are zero")
    return w / norm


def _top_eigvec(W):
    vals, vecs = np.linalg.eigh(W)
    return vals, vecs[:, -1]


def penalty_residual(W) -> float:
    """||W||_* - ||W||_2 (zero iff W is rank one)."""
    sv = np.linalg.svd(W, compute_uv=False)
    return float(sv.sum() - sv.max())


def sca_subproblem(Wk, responses, weights, cfg: ScaConfig):
    """One linearized step; returns ``(W, delta)``.

    The spectral-norm subgradient at ``Wk`` is ``s s^H`` with ``s`` its top
    eigenvector, or the first basis vector when ``Wk`` is zero. Since
    ``W[n, n] = 1`` fixes ``||W||_* = tr W = n``, the step is the linear SDP
    ``max delta + rho s^H W s`` subject to ``W >= 0``, unit diagonal and
    ``alpha_l Re(f_l^H r(W)) >= delta``.
    """
    responses = np.atleast_2d(np.asarray(responses, dtype=complex))
    weights = np.asarray(weights, dtype=float)
    n_users, n = responses.shape
    Wk = np.asarray(Wk, dtype=complex)
    vals, s = _top_eigvec(Wk)
    if not vals[-1] > 1e-12:
        s = np.zeros(n, complex)
        s[0] = 1.0

    size = 2 * n
    A = np.zeros((n + n_users, size, size))
    for i in range(n):
        A[i, i, i] = A[i, i + n, i + n] = 0.5
    for l in range(n_users):
        A[n + l] = 0.5 * weights[l] * realify(gain_matrix(responses[l]))
    b = np.concatenate([np.ones(n), np.zeros(n_users)])
    # LP block: (delta, t_1..t_L) with alpha_l <A_l, W> - delta - t_l = 0
    a = np.zeros((n + n_users, 1 + n_users))
    a[n:, 0] = -1.0
    a[n:, 1:] = -np.eye(n_users)
    c = np.zeros(1 + n_users)
    c[0] = -1.0
    C = -0.5 * cfg.penalty * realify(np.outer(s, np.conj(s)))

    res = solve_sdp(C, A, b, c=c, a=a, tol=cfg.sdp_tol, accept=cfg.sdp_accept)
    W = unrealify(res.X)
    d = np.sqrt(np.clip(np.real(np.diag(W)), 1e-300, None))
    W = W / np.outer(d, d)
    gains = np.array([autocorrelation_gain(responses[l], W) for l in range(n_users)])
    delta = float(np.min(weights * gains))
    return W, delta


def _penalized(W, delta, rho):
    return delta - rho * penalty_residual(W)


def sca_solve(responses, weights, cfg: ScaConfig):
    """Iterate :func:`sca_subproblem` from W = 0 and extract a unit-modulus vector.

    Returns ``(theta, info)``; ``theta`` is the phase of the dominant
    eigenvector of the final W, referenced so that ``theta[0] = 1``.
    """
    responses = np.atleast_2d(np.asarray(responses, dtype=complex))
    weights = np.asarray(weights, dtype=float)
    n = responses.shape[1]
    Wk = np.zeros((n, n), complex)
    objectives = []
    W, delta = Wk, 0.0
    for it in range(1, cfg.max_iter + 1):
        W, delta = sca_subproblem(Wk, responses, weights, cfg)
        objectives.append(_penalized(W, delta, cfg.penalty))
        if len(objectives) > 1 and abs(objectives[-1] - objectives[-2]) < cfg.tol:
            break
        Wk = W
    _, v = _top_eigvec(W)
    mags = np.abs(v)
    theta = np.where(mags > 0, v / np.where(mags > 0, mags, 1), 1.0)
    theta = theta * np.conj(theta[0])
    gains = np.abs(responses.conj() @ theta) ** 2
    min_gain = float(np.min(weights * gains))
    eps = 1.0 - min_gain / delta if delta > 0 else 0.0
    info = ScaInfo(W=W, delta=delta, objective=objectives[-1], penalty_residual=penalty_residual(W),
                   iterations=it, min_gain=min_gain, eps_extract=eps, objectives=objectives)
    return theta, info


def _axis_data(scenario: Scenario, pose: Pose):
    link = link_angles(scenario, pose.q, pose.psi)
    fx, fy = composite_responses(link, scenario.params)
    f_ag, feasible = aperture_gains(scenario, link)
    scale = np.where(feasible, np.maximum(f_ag, 0.0), 0.0) / link.dist_users**2
    return fx, fy, scale


def _axis_step(responses, weights, cfg):
    active = weights > 0
    theta, info = sca_solve(responses[active], weights[active], cfg)
    return theta, info


def optimize_phases(scenario: Scenario, pose: Pose, cfg: ScaConfig = ScaConfig(),
                    incumbent: PhaseProfile | None = None):
    """Passive beamforming for a fixed pose, alternating between the two axes.

    The first pass solves both axes independently with the normalized
    weights of :func:`user_weights`. Each refinement round then re-solves
    the x-axis with the y-axis gains folded into the weights and vice versa.
    A candidate replaces the current profile only if the minimum SNR does
    not drop, and ``incumbent`` (the previous profile) competes with the
    first pass. Returns ``(profile, history)`` with the min SNR after every
    accepted or rejected half-step.
    """
    fx, fy, scale = _axis_data(scenario, pose)
    alpha = user_weights(scenario, pose)
    tx, _ = _axis_step(fx, alpha, cfg)
    ty, _ = _axis_step(fy, alpha, cfg)
    best = PhaseProfile(tx, ty)
    best_val = min_snr(scenario, pose, best)
    if incumbent is not None:
        inc_val = min_snr(scenario, pose, incumbent)
        if inc_val > best_val:
            best, best_val = incumbent, inc_val
    history = [best_val]
    for _ in range(cfg.refine_rounds):
        gy = np.abs(fy.conj() @ best.theta_y) ** 2
        tx, _ = _axis_step(fx, _normalized(scale * gy), cfg)
        cand = PhaseProfile(tx, best.theta_y)
        val = min_snr(scenario, pose, cand)
        if val >= best_val:
            best, best_val = cand, val
        history.append(best_val)
        gx = np.abs(fx.conj() @ best.theta_x) ** 2
        ty, _ = _axis_step(fy, _normalized(scale * gx), cfg)
        cand = PhaseProfile(best.theta_x, ty)
        val = min_snr(scenario, pose, cand)
        if val >= best_val:
            best, best_val = cand, val
        history.append(best_val)
    return best, history


def init_phases(scenario: Scenario, pose: Pose, cfg: ScaConfig = ScaConfig()) -> PhaseProfile:
    """Equal-weight max-min beamforming gain, each axis solved independently."""
    link = link_angles(scenario, pose.q, pose.psi)
    fx, fy = composite_responses(link, scenario.params)
    equal = np.full(scenario.n_users, 1.0 / np.sqrt(scenario.n_users))
    tx, _ = sca_solve(fx, equal, cfg)
    ty, _ = sca_solve(fy, equal, cfg)
    return PhaseProfile(tx, ty)
