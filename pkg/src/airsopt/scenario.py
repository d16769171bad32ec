"""Scenario containers shared by every module.

The BS sits at the origin of the global frame, users lie on the ground
plane (z = 0) and the AIRS reference element flies at a fixed altitude.
All powers and gains are linear; conversions from dB/dBm happen here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


def db_to_linear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


def dbm_to_watts(dbm: float) -> float:
    return float(10.0 ** ((dbm - 30.0) / 10.0))


def linear_to_db(x):
    """10*log10 with -inf for non-positive input (no warnings)."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, -np.inf)
    pos = x > 0
    out[pos] = 10.0 * np.log10(x[pos])
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SystemParams:
    """Radio constants. Defaults are the evaluation settings (N = 16 x 16, M = 64)."""

    wavelength: float = 0.1
    d_tx: float = 0.05
    d_rs: float = 0.05
    m: int = 64
    nx: int = 16
    ny: int = 16
    beta0: float = 1e-4
    power: float = 0.1
    noise: float = 1e-14

    def __post_init__(self):
        for name in ("wavelength", "d_tx", "d_rs", "beta0", "power", "noise"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("m", "nx", "ny"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def n(self) -> int:
        return self.nx * self.ny

    @property
    def p_bar(self) -> float:
        """Transmit SNR P / sigma^2."""
        return self.power / self.noise

    @property
    def snr_scale(self) -> float:
        """P_bar * beta0^2 * M, the pose-independent SNR prefactor."""
        return self.p_bar * self.beta0**2 * self.m

    @classmethod
    def from_db(cls, beta0_db=-40.0, power_dbm=20.0, noise_dbm=-110.0, **kw) -> "SystemParams":
        return cls(beta0=db_to_linear(beta0_db), power=dbm_to_watts(power_dbm),
                   noise=dbm_to_watts(noise_dbm), **kw)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Users (L x 2 ground coordinates), altitude H and the movement region.

    ``region`` is ``(x_lo, x_hi, y_lo, y_hi)``; a zero-width y range pins
    ``qy`` (the single-user layout). ``isotropic`` replaces the aperture
    gain by 1 and disables the half-space constraints.
    """

    users: np.ndarray
    altitude: float
    region: tuple
    params: SystemParams = field(default_factory=SystemParams)
    isotropic: bool = False

    def __post_init__(self):
        users = np.atleast_2d(np.asarray(self.users, dtype=float))
        if users.shape[1] != 2 or users.shape[0] < 1:
            raise ValueError("users must be an (L, 2) array of ground coordinates")
        object.__setattr__(self, "users", users)
        if not self.altitude > 0:
            raise ValueError("altitude must be positive")
        x_lo, x_hi, y_lo, y_hi = map(float, self.region)
        if x_hi < x_lo or y_hi < y_lo:
            raise ValueError("region bounds are inverted")
        object.__setattr__(self, "region", (x_lo, x_hi, y_lo, y_hi))

    @property
    def n_users(self) -> int:
        return self.users.shape[0]

    @property
    def user_positions(self) -> np.ndarray:
        return np.column_stack([self.users, np.zeros(self.n_users)])

    def with_altitude(self, altitude: float) -> "Scenario":
        return replace(self, altitude=float(altitude))

    def with_isotropic(self, isotropic: bool = True) -> "Scenario":
        return replace(self, isotropic=isotropic)

    def position(self, qx: float, qy: float) -> np.ndarray:
        return np.array([qx, qy, self.altitude], dtype=float)


@dataclass(frozen=True, eq=False)
class Pose:
    """AIRS reference-element position ``q`` and Euler angles ``psi = (psi_z, psi_y, psi_x)``."""

    q: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(3)
        psi = np.asarray(self.psi, dtype=float).reshape(3)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(psi))):
            raise ValueError("pose components must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "psi", psi)

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return bool(np.array_equal(self.q, other.q) and np.array_equal(self.psi, other.psi))

    def __hash__(self):
        return hash((tuple(self.q), tuple(self.psi)))


SPARSE_USERS = ((330.0, 240.0), (650.0, 130.0), (440.0, 15.0))
DENSE_USERS = ((655.0, 130.0), (650.0, 135.0), (650.0, 130.0))
MULTI_USER_REGION = (-140.0, 790.0, -58.0, 298.0)


def sparse_setup(altitude: float = 100.0, params: SystemParams | None = None) -> Scenario:
    return Scenario(np.array(SPARSE_USERS), altitude, MULTI_USER_REGION, params or SystemParams())


def dense_setup(altitude: float = 100.0, params: SystemParams | None = None) -> Scenario:
    return Scenario(np.array(DENSE_USERS), altitude, MULTI_USER_REGION, params or SystemParams())


def single_user_scenario(distance: float, altitude: float, params: SystemParams | None = None,
                         span=(-0.2, 1.2), isotropic: bool = False) -> Scenario:
    """User at (D, 0), AIRS restricted to the BS-user line with qx in [span[0]*D, span[1]*D]."""
    lo, hi = span[0] * distance, span[1] * distance
    return Scenario(np.array([[distance, 0.0]]), altitude, (lo, hi, 0.0, 0.0),
                    params or SystemParams(), isotropic)
