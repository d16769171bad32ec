"""Euler-angle rotations, global/local frame transforms and link angles.

Every function accepts batched inputs: Euler angles and positions carry
their components on the last axis, so ``psi`` may be ``(3,)`` or
``(K, 3)`` and results broadcast accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from airsopt.scenario import Pose, Scenario

HALF_PI = np.pi / 2


class InvalidPoseError(ValueError):
    """The AIRS coincides with the BS or a user, so link angles are undefined."""


class EulerAngles(NamedTuple):
    psi_z: float
    psi_y: float
    psi_x: float


class DirectionCosines(NamedTuple):
    l1: float
    l2: float
    l3: float


def rotation_matrix(psi) -> np.ndarray:
    """Q(psi) = Qz(psi_z) Qy(psi_y) Qx(psi_x); shape ``(..., 3, 3)``."""
    psi = np.asarray(psi, dtype=float)
    cz, sz = np.cos(psi[..., 0]), np.sin(psi[..., 0])
    cy, sy = np.cos(psi[..., 1]), np.sin(psi[..., 1])
    cx, sx = np.cos(psi[..., 2]), np.sin(psi[..., 2])
    zero, one = np.zeros_like(cz), np.ones_like(cz)
    qz = np.stack([np.stack([cz, -sz, zero], -1),
                   np.stack([sz, cz, zero], -1),
                   np.stack([zero, zero, one], -1)], -2)
    qy = np.stack([np.stack([cy, zero, sy], -1),
                   np.stack([zero, one, zero], -1),
                   np.stack([-sy, zero, cy], -1)], -2)
    qx = np.stack([np.stack([one, zero, zero], -1),
                   np.stack([zero, cx, -sx], -1),
                   np.stack([zero, sx, cx], -1)], -2)
    return qz @ qy @ qx


def to_local(p, q, psi) -> np.ndarray:
    """Local coordinates Q(psi)^T (p - q) of global point(s) ``p``."""
    rot = rotation_matrix(psi)
    diff = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
    return np.einsum("...ji,...j->...i", rot, diff)


def direction_cosines(psi) -> np.ndarray:
    """(L1, L2, L3): the panel normal in global coordinates (third column of Q)."""
    psi = np.asarray(psi, dtype=float)
    cz, sz = np.cos(psi[..., 0]), np.sin(psi[..., 0])
    cy, sy = np.cos(psi[..., 1]), np.sin(psi[..., 1])
    cx, sx = np.cos(psi[..., 2]), np.sin(psi[..., 2])
    l1 = cz * sy * cx + sz * sx
    l2 = sz * sy * cx - cz * sx
    l3 = cy * cx
    return np.stack([l1, l2, l3], -1)


@dataclass(frozen=True, eq=False)
class LinkGeometry:
    """All link angles for one pose (or a batch of poses).

    Per-user arrays carry the user index on the last axis. ``cos_phi1`` and
    ``cos_phi2`` are the closed-form incidence/reflection cosines computed
    from the direction cosines; the angle fields come from local coordinates.
    Azimuths are quadrant-aware: the BS azimuth is that of the incident
    propagation direction ``-b_local`` (matching the elevation convention
    ``arccos(-b_z/|q|)``), the user azimuth that of ``w_local``.
    """

    phi_ba: np.ndarray
    theta_ab_elev: np.ndarray
    theta_ab_azim: np.ndarray
    phi_au_elev: np.ndarray
    phi_au_azim: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    cos_phi1: np.ndarray
    cos_phi2: np.ndarray
    dist_bs: np.ndarray
    dist_users: np.ndarray


def _arccos(x):
    return np.arccos(np.clip(x, -1.0, 1.0))


def link_angles(scenario: Scenario, q, psi) -> LinkGeometry:
    """Angles of departure/arrival at the BS and AIRS for pose(s) ``(q, psi)``.

    ``q`` has shape ``(..., 3)`` and ``psi`` broadcasts against it.
    Raises :class:`InvalidPoseError` when the AIRS sits on the BS or a user.
    """
    q = np.asarray(q, dtype=float)
    psi = np.asarray(psi, dtype=float)
    q, psi = np.broadcast_arrays(q, psi)
    users = scenario.user_positions                       # (L, 3)
    dist_bs = np.linalg.norm(q, axis=-1)                  # (...)
    dist_users = np.linalg.norm(q[..., None, :] - users, axis=-1)   # (..., L)
    if np.any(dist_bs <= 0) or np.any(dist_users <= 0):
        raise InvalidPoseError("AIRS coincides with the BS or a user")

    rot = rotation_matrix(psi)
    b_loc = np.einsum("...ji,...j->...i", rot, -q)
    w_loc = np.einsum("...ji,...lj->...li", rot, users - q[..., None, :])

    phi_ba = _arccos(q[..., 2] / dist_bs)
    theta_e = _arccos(-b_loc[..., 2] / dist_bs)
    theta_a = np.arctan2(-b_loc[..., 1], -b_loc[..., 0])
    phi_e = _arccos(w_loc[..., 2] / dist_users)
    phi_a = np.arctan2(w_loc[..., 1], w_loc[..., 0])

    normal = direction_cosines(psi)
    cos_phi1 = np.sum(q * normal, axis=-1) / dist_bs
    rel = q[..., None, :] - users                          # q - w_l
    cos_phi2 = np.sum(rel * normal[..., None, :], axis=-1) / dist_users
    return LinkGeometry(
        phi_ba=phi_ba, theta_ab_elev=theta_e, theta_ab_azim=theta_a,
        phi_au_elev=phi_e, phi_au_azim=phi_a,
        phi1=theta_e, phi2=np.pi - phi_e,
        cos_phi1=cos_phi1, cos_phi2=cos_phi2,
        dist_bs=dist_bs, dist_users=dist_users,
    )


def pose_link_angles(scenario: Scenario, pose: Pose) -> LinkGeometry:
    return link_angles(scenario, pose.q, pose.psi)


def feasibility_margins(scenario: Scenario, q, psi):
    """Left-hand sides of the half-space constraints: (BS margin, per-user margins)."""
    q = np.asarray(q, dtype=float)
    normal = direction_cosines(psi)
    bs = np.sum(q * normal, axis=-1)
    rel = q[..., None, :] - scenario.user_positions
    users = np.sum(rel * np.asarray(normal)[..., None, :], axis=-1)
    return bs, users


def reflection_feasible(scenario: Scenario, pose: Pose) -> bool:
    """True iff the BS and every user lie in the reflecting half-space (boundary included)."""
    bs, users = feasibility_margins(scenario, pose.q, pose.psi)
    return bool(bs >= 0 and np.all(users >= 0))
