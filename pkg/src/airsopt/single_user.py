"""Single-user closed forms: in-phase reflection, 1D orientation and placement.

The user sits at ``(D, 0, 0)`` and the AIRS on the BS-user line
(``qy = 0``). Only the tilt ``psi_y`` about the local y-axis matters; any
3D orientation reduces to an equivalent 2D one and then to a better 1D one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from airsopt.channel import PhaseProfile, airs_rx_steering, airs_tx_steering
from airsopt.geometry import LinkGeometry, direction_cosines
from airsopt.scenario import SystemParams


@dataclass(frozen=True)
class SingleUserScenario:
    distance: float
    altitude: float
    q_lo: float
    q_hi: float
    params: SystemParams = SystemParams()

    def __post_init__(self):
        if self.distance < 0 or not self.altitude > 0:
            raise ValueError("need D >= 0 and H > 0")
        if self.q_hi < self.q_lo:
            raise ValueError("empty movement interval")

    @classmethod
    def default(cls, distance: float, altitude: float, params: SystemParams | None = None,
                span=(-0.2, 1.2)) -> "SingleUserScenario":
        return cls(distance, altitude, span[0] * distance, span[1] * distance, params or SystemParams())


def inphase_phases(link: LinkGeometry, params: SystemParams, user: int = 0) -> PhaseProfile:
    """Phases aligning every reflected path at the user: angle(a_2) - angle(a_I), per element."""
    rx = airs_rx_steering(link, params)
    tx = airs_tx_steering(link, user, params)
    return PhaseProfile(tx.x * np.conj(rx.x), tx.y * np.conj(rx.y))


def path_product(qx, s: SingleUserScenario):
    """[qx^2 + H^2][(qx - D)^2 + H^2], the end-to-end path loss denominator."""
    qx = np.asarray(qx, dtype=float)
    h2 = s.altitude**2
    return (qx**2 + h2) * ((qx - s.distance) ** 2 + h2)


def _peak(s: SingleUserScenario) -> float:
    p = s.params
    return p.snr_scale * p.n**2


def psi_angles(qx, s: SingleUserScenario):
    """(psi_1(qx), psi_2(qx)): elevation angles of the AIRS seen from BS and user."""
    qx = np.asarray(qx, dtype=float)
    h = s.altitude
    psi1 = np.arccos(np.clip(qx / np.hypot(qx, h), -1, 1))
    psi2 = np.arccos(np.clip((qx - s.distance) / np.hypot(qx - s.distance, h), -1, 1))
    return psi1, psi2


def aperture_gain_1d(qx, psi_y, s: SingleUserScenario):
    """sin(psi_y + psi_1) sin(psi_y + psi_2); negative factors yield 0 (infeasible)."""
    psi1, psi2 = psi_angles(qx, s)
    c1 = np.sin(psi_y + psi1)
    c2 = np.sin(psi_y + psi2)
    return np.where((c1 >= 0) & (c2 >= 0), c1 * c2, 0.0)


def snr_1d(qx, psi_y, s: SingleUserScenario):
    """Received SNR with in-phase reflection and 1D orientation; 0 when infeasible."""
    return _peak(s) * aperture_gain_1d(qx, psi_y, s) / path_product(qx, s)


def optimal_psi_y(qx, s: SingleUserScenario):
    """(pi - psi_1 - psi_2) / 2, written as a difference of two arccos terms.

    pi - psi_2 is the elevation seen from the user's side, so at qx = D/2 the
    two terms are computed from identical inputs and the tilt is exactly 0.
    """
    qx = np.asarray(qx, dtype=float)
    h = s.altitude
    rest = s.distance - qx
    far = np.arccos(np.clip(rest / np.hypot(rest, h), -1, 1))
    near = np.arccos(np.clip(qx / np.hypot(qx, h), -1, 1))
    return (far - near) / 2


def gamma_c(qx, s: SingleUserScenario):
    """SNR at the optimal tilt: peak * [1 + cos(psi_1 - psi_2)] / (2 * path product)."""
    psi1, psi2 = psi_angles(qx, s)
    return _peak(s) * (1 + np.cos(psi1 - psi2)) / (2 * path_product(qx, s))


def iso_optimal_qx(distance: float, altitude: float) -> tuple:
    """Minimizers of the path loss product; two symmetric roots once D/H > 2 (ascending)."""
    if distance < 0 or not altitude > 0:
        raise ValueError("need D >= 0 and H > 0")
    if distance <= 2 * altitude:
        return (distance / 2,)
    r = np.sqrt(distance**2 / 4 - altitude**2)
    return (distance / 2 - r, distance / 2 + r)


def qx_grid(s: SingleUserScenario, grid_step: float | None = None) -> np.ndarray:
    """Uniform grid over [q_lo, q_hi]; default step is the span / 1e4."""
    span = s.q_hi - s.q_lo
    if grid_step is None:
        grid_step = span / 1e4 if span > 0 else 1.0
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    count = int(np.floor(span / grid_step + 1e-9)) + 1
    grid = s.q_lo + grid_step * np.arange(count)
    if grid.size == 0:
        raise ValueError("empty grid")
    return grid


def solve_p4(s: SingleUserScenario, grid_step: float | None = None):
    """Exhaustive search of ``gamma_c`` over the movement interval.

    Returns ``(qx, psi_y, gamma)``; ties go to the smallest qx.
    """
    grid = qx_grid(s, grid_step)
    values = gamma_c(grid, s)
    best = int(np.argmax(values))
    qx = float(grid[best])
    return qx, float(optimal_psi_y(qx, s)), float(values[best])


def reduce_3d_to_2d(psi3d) -> tuple:
    """Equivalent (0, psi_y, psi_x) orientation with identical L1 and L3.

    ``cos psi_x = sqrt(L1^2 + L3^2)`` and ``psi_y = atan2(L1, L3)``, which is
    the principal arcsin branch for L3 >= 0 (always true in [-pi/2, pi/2]^3).
    When L1 = L3 = 0 the panel is edge-on and (0, 0, pi/2) is returned.
    """
    l1, _, l3 = direction_cosines(psi3d)
    rho = float(np.hypot(l1, l3))
    if rho == 0.0:
        return (0.0, 0.0, np.pi / 2)
    psi_x = float(np.arccos(min(rho, 1.0)))
    psi_y = float(np.arctan2(l1, l3))
    return (0.0, psi_y, psi_x)
