"""Array responses, aperture/beamforming gains and the analytic per-user SNR.

The BS beamformer is never built for SNR evaluation: with maximum-ratio
transmission its contribution is the constant factor M, folded into
``SystemParams.snr_scale``. Global propagation phases cancel in every
``|.|^2`` and are only kept by :func:`channel_matrices`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from airsopt.geometry import LinkGeometry, link_angles
from airsopt.scenario import Pose, Scenario, SystemParams, linear_to_db

CHUNK = 8192


@dataclass(frozen=True, eq=False)
class SteeringPair:
    x: np.ndarray
    y: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return np.kron(self.x, self.y)


@dataclass(frozen=True, eq=False)
class CompositeResponse:
    """Per-axis factors of f = a_2 (.) conj(a_I) = f_x (x) f_y."""

    f_x: np.ndarray
    f_y: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return np.kron(self.f_x, self.f_y)


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    """Factorized unit-modulus reflection vector theta = theta_x (x) theta_y."""

    theta_x: np.ndarray
    theta_y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta_x", np.asarray(self.theta_x, dtype=complex).ravel())
        object.__setattr__(self, "theta_y", np.asarray(self.theta_y, dtype=complex).ravel())

    @property
    def full(self) -> np.ndarray:
        return np.kron(self.theta_x, self.theta_y)

    @classmethod
    def ones(cls, nx: int, ny: int) -> "PhaseProfile":
        return cls(np.ones(nx, complex), np.ones(ny, complex))

    @classmethod
    def from_phases(cls, phase_x, phase_y) -> "PhaseProfile":
        return cls(np.exp(1j * np.asarray(phase_x, float)), np.exp(1j * np.asarray(phase_y, float)))

    def is_unit_modulus(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(np.abs(self.theta_x) - 1) <= tol)
                    and np.all(np.abs(np.abs(self.theta_y) - 1) <= tol))


@dataclass(frozen=True, eq=False)
class SnrBreakdown:
    """SNR decomposition; fields are scalars for one user or arrays over users."""

    beta1: np.ndarray
    beta2: np.ndarray
    f_ag: np.ndarray
    g_bf: np.ndarray
    gamma: np.ndarray
    feasible: np.ndarray

    @property
    def gamma_db(self):
        return linear_to_db(self.gamma)


def _ula(n: int, spatial: np.ndarray, kappa: float) -> np.ndarray:
    """Entries exp(-j kappa k spatial), k = 0..n-1, broadcast over ``spatial``."""
    k = np.arange(n)
    return np.exp(-1j * kappa * np.asarray(spatial)[..., None] * k)


def bs_steering(phi_ba: float, params: SystemParams) -> np.ndarray:
    return _ula(params.m, np.cos(phi_ba), 2 * np.pi * params.d_tx / params.wavelength)


def _rx_spatial(link: LinkGeometry):
    s = np.sin(link.theta_ab_elev)
    return s * np.cos(link.theta_ab_azim), s * np.sin(link.theta_ab_azim)


def _tx_spatial(link: LinkGeometry):
    s = np.sin(link.phi_au_elev)
    return s * np.cos(link.phi_au_azim), s * np.sin(link.phi_au_azim)


def airs_rx_steering(link: LinkGeometry, params: SystemParams) -> SteeringPair:
    kappa = 2 * np.pi * params.d_rs / params.wavelength
    ux, uy = _rx_spatial(link)
    return SteeringPair(_ula(params.nx, ux, kappa), _ula(params.ny, uy, kappa))


def airs_tx_steering(link: LinkGeometry, user: int, params: SystemParams) -> SteeringPair:
    kappa = 2 * np.pi * params.d_rs / params.wavelength
    ux, uy = _tx_spatial(link)
    return SteeringPair(_ula(params.nx, ux[..., user], kappa), _ula(params.ny, uy[..., user], kappa))


def composite_response(link: LinkGeometry, user: int, params: SystemParams) -> CompositeResponse:
    rx = airs_rx_steering(link, params)
    tx = airs_tx_steering(link, user, params)
    return CompositeResponse(tx.x * np.conj(rx.x), tx.y * np.conj(rx.y))


def composite_responses(link: LinkGeometry, params: SystemParams):
    """Batched factors ``(f_x, f_y)`` with shapes ``(..., L, Nx)`` and ``(..., L, Ny)``."""
    kappa = 2 * np.pi * params.d_rs / params.wavelength
    bx, by = _rx_spatial(link)
    wx, wy = _tx_spatial(link)
    fx = _ula(params.nx, wx - bx[..., None], kappa)
    fy = _ula(params.ny, wy - by[..., None], kappa)
    return fx, fy


def channel_matrices(scenario: Scenario, pose: Pose):
    """Explicit H_BA (N x M) and h_AU,l^H (L x N) including global phases."""
    p = scenario.params
    link = link_angles(scenario, pose.q, pose.psi)
    a_i = airs_rx_steering(link, p).full
    a_b = bs_steering(link.phi_ba, p)
    h_ba = (np.sqrt(p.beta0) / link.dist_bs * np.exp(-2j * np.pi * link.dist_bs / p.wavelength)
            * np.outer(a_i, np.conj(a_b)))
    rows = []
    for user in range(scenario.n_users):
        a_2 = airs_tx_steering(link, user, p).full
        d = link.dist_users[user]
        rows.append(np.sqrt(p.beta0) / d * np.exp(-2j * np.pi * d / p.wavelength) * np.conj(a_2))
    return h_ba, np.array(rows)


def aperture_gains(scenario: Scenario, link: LinkGeometry):
    """Per-user F_AG and feasibility flags; isotropic scenarios give F_AG = 1."""
    cos1 = np.asarray(link.cos_phi1)[..., None]
    cos2 = np.asarray(link.cos_phi2)
    if scenario.isotropic:
        return np.ones_like(cos2), np.ones(cos2.shape, dtype=bool)
    return cos1 * cos2, (cos1 >= 0) & (cos2 >= 0)


def effective_aperture_gain(scenario: Scenario, pose: Pose, user: int) -> float:
    """cos(phi1) cos(phi2,l); the raw product is returned even when it signals infeasibility."""
    if scenario.isotropic:
        return 1.0
    link = link_angles(scenario, pose.q, pose.psi)
    return float(link.cos_phi1 * link.cos_phi2[user])


def passive_bf_gain(f: CompositeResponse, theta: PhaseProfile) -> float:
    """|f_x^H theta_x|^2 |f_y^H theta_y|^2 (= |f^H theta|^2)."""
    if f.f_x.shape != theta.theta_x.shape or f.f_y.shape != theta.theta_y.shape:
        raise ValueError(
            f"shape mismatch: response {f.f_x.shape}x{f.f_y.shape}, "
            f"phases {theta.theta_x.shape}x{theta.theta_y.shape}")
    gx = np.abs(np.vdot(f.f_x, theta.theta_x)) ** 2
    gy = np.abs(np.vdot(f.f_y, theta.theta_y)) ** 2
    return float(gx * gy)


def _evaluate(scenario: Scenario, q, psi, theta: PhaseProfile):
    p = scenario.params
    link = link_angles(scenario, q, psi)
    fx, fy = composite_responses(link, p)
    gx = np.abs(np.einsum("...n,n->...", np.conj(fx), theta.theta_x)) ** 2
    gy = np.abs(np.einsum("...n,n->...", np.conj(fy), theta.theta_y)) ** 2
    g_bf = gx * gy
    f_ag, feasible = aperture_gains(scenario, link)
    beta1 = p.beta0 / link.dist_bs**2
    beta2 = p.beta0 / link.dist_users**2
    gamma = p.p_bar * p.m * beta1[..., None] * beta2 * f_ag * g_bf
    gamma = np.where(feasible, gamma, 0.0)
    return SnrBreakdown(beta1=np.broadcast_to(beta1[..., None], beta2.shape), beta2=beta2,
                        f_ag=f_ag, g_bf=g_bf, gamma=gamma, feasible=feasible)


def snr_breakdown(scenario: Scenario, pose: Pose, theta: PhaseProfile) -> SnrBreakdown:
    """All users' SNR components for one pose (arrays of length L)."""
    return _evaluate(scenario, pose.q, pose.psi, theta)


def user_snr(scenario: Scenario, pose: Pose, theta: PhaseProfile, user: int) -> SnrBreakdown:
    full = snr_breakdown(scenario, pose, theta)
    return SnrBreakdown(*(np.asarray(getattr(full, name))[user] for name in
                          ("beta1", "beta2", "f_ag", "g_bf", "gamma", "feasible")))


def min_snr(scenario: Scenario, pose: Pose, theta: PhaseProfile) -> float:
    return float(np.min(snr_breakdown(scenario, pose, theta).gamma))


def evaluate_batch(scenario: Scenario, q, psi, theta: PhaseProfile) -> SnrBreakdown:
    """Breakdown for K poses (``q``, ``psi`` of shape ``(K, 3)``), evaluated in chunks."""
    q, psi = np.broadcast_arrays(np.atleast_2d(np.asarray(q, float)),
                                 np.atleast_2d(np.asarray(psi, float)))
    parts = [_evaluate(scenario, q[i:i + CHUNK], psi[i:i + CHUNK], theta)
             for i in range(0, len(q), CHUNK)]
    names = ("beta1", "beta2", "f_ag", "g_bf", "gamma", "feasible")
    return SnrBreakdown(*(np.concatenate([getattr(b, n) for b in parts]) for n in names))


def min_snr_batch(scenario: Scenario, q, psi, theta: PhaseProfile) -> np.ndarray:
    """Worst-user linear SNR for each of K poses; infeasible poses score 0."""
    return evaluate_batch(scenario, q, psi, theta).gamma.min(axis=-1)
