"""Gibbs-sampling exploration over AIRS poses for fixed phase shifts.

Poses live on a lattice anchored at the starting pose: position steps of
``step_q`` inside the movement region and angle steps of ``step_psi``
inside ``[-pi/2, pi/2]``. Each step scores the 10 axis neighbours of the
current pose plus ``I - 10`` random lattice points, draws the next pose
from a softmax over the worst-user SNR in dB (visited poses are
penalized) and records it. The phase returns the best pose seen,
including the starting one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from airsopt.channel import PhaseProfile, min_snr_batch
from airsopt.scenario import Pose, Scenario, linear_to_db

HALF_PI = np.pi / 2
FLOOR_DB = -300.0
N_NEIGHBORS = 10
_EPS = 1e-9


@dataclass(frozen=True)
class GsConfig:
    iterations: int = 400
    candidates: int = 30
    mu: float = 20.0
    step_q: float = 5.0
    step_psi: float = np.pi / 180
    revisit_penalty_db: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations (T) must be >= 1")
        if self.candidates <= N_NEIGHBORS:
            raise ValueError("candidates (I) must exceed 10")
        if not (self.step_q > 0 and self.step_psi > 0):
            raise ValueError("step sizes must be positive")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class Candidate:
    """A lattice pose with its cached worst-user SNR in dB (-inf when infeasible)."""

    key: tuple
    q: np.ndarray
    psi: np.ndarray
    gamma_db: float

    @property
    def pose(self) -> Pose:
        return Pose(self.q, self.psi)


class Lattice:
    """Integer lattice ``anchor + k * step`` clipped to per-coordinate bounds.

    Coordinates are ``(qx, qy, psi_z, psi_y, psi_x)``. A bound pair with
    ``lo == hi`` equal to the anchor freezes that coordinate.
    """

    def __init__(self, anchor, step, lower, upper):
        self.anchor = np.asarray(anchor, float)
        self.step = np.asarray(step, float)
        self.lower = np.asarray(lower, float)
        self.upper = np.asarray(upper, float)
        if np.any(self.anchor < self.lower - _EPS) or np.any(self.anchor > self.upper + _EPS):
            raise ValueError("lattice anchor outside its bounds")
        self.k_lo = np.ceil((self.lower - self.anchor) / self.step - _EPS).astype(np.int64)
        self.k_hi = np.floor((self.upper - self.anchor) / self.step + _EPS).astype(np.int64)

    @classmethod
    def for_scenario(cls, scenario: Scenario, u0: Pose, cfg: GsConfig, move_psi: bool = True):
        x_lo, x_hi, y_lo, y_hi = scenario.region
        anchor = np.concatenate([u0.q[:2], u0.psi])
        lo = [x_lo, y_lo] + ([-HALF_PI] * 3 if move_psi else list(u0.psi))
        hi = [x_hi, y_hi] + ([HALF_PI] * 3 if move_psi else list(u0.psi))
        step = [cfg.step_q] * 2 + [cfg.step_psi] * 3
        return cls(anchor, step, lo, hi)

    @property
    def shape(self) -> np.ndarray:
        return self.k_hi - self.k_lo + 1

    def clamp(self, k) -> np.ndarray:
        """Nearest in-range lattice index (the truncation rule of the neighbour moves)."""
        return np.clip(np.asarray(k, np.int64), self.k_lo, self.k_hi)

    def coords(self, k) -> np.ndarray:
        values = self.anchor + np.asarray(k, float) * self.step
        return np.clip(values, self.lower, self.upper)


def _candidates(keys, lattice: Lattice, scenario: Scenario, theta: PhaseProfile, altitude):
    keys = np.asarray(keys, np.int64).reshape(-1, 5)
    coords = lattice.coords(keys)
    q = np.column_stack([coords[:, :2], np.full(len(coords), altitude)])
    psi = coords[:, 2:]
    gamma = min_snr_batch(scenario, q, psi, theta)
    gamma_db = linear_to_db(gamma)
    return [Candidate(tuple(int(v) for v in k), q[i], psi[i], float(np.atleast_1d(gamma_db)[i]))
            for i, k in enumerate(keys)]


@dataclass
class VisitedSet:
    """Append-only record of visited candidates with exact lattice-key membership."""

    items: list = field(default_factory=list)
    keys: set = field(default_factory=set)

    def add(self, cand: Candidate) -> None:
        self.items.append(cand)
        self.keys.add(cand.key)

    def __contains__(self, cand) -> bool:
        key = cand.key if isinstance(cand, Candidate) else tuple(cand)
        return key in self.keys

    def __len__(self) -> int:
        return len(self.items)


def neighbor_keys(key, lattice: Lattice) -> np.ndarray:
    """+/- one step on qx, qy, psi_z, psi_y, psi_x in that order, clamped to the bounds."""
    base = np.asarray(key, np.int64)
    out = []
    for axis in range(5):
        for sign in (1, -1):
            k = base.copy()
            k[axis] += sign
            out.append(lattice.clamp(k))
    return np.array(out)


def neighbor_set(u: Candidate, lattice: Lattice, scenario: Scenario, theta: PhaseProfile) -> list:
    return _candidates(neighbor_keys(u.key, lattice), lattice, scenario, theta, scenario.altitude)


def random_jump_keys(exclude: set, count: int, lattice: Lattice, rng) -> np.ndarray:
    """``count`` distinct uniform lattice points outside ``exclude`` (rejection sampling).

    Returns fewer points only when the lattice has no more free points.
    """
    free = int(np.prod(lattice.shape)) - len(exclude)
    count = max(0, min(count, free))
    taken = set(exclude)
    out = []
    while len(out) < count:
        k = lattice.k_lo + rng.integers(0, lattice.shape)
        key = tuple(int(v) for v in k)
        if key in taken:
            continue
        taken.add(key)
        out.append(k)
    return np.array(out, dtype=np.int64).reshape(-1, 5)


def random_jumps(u: Candidate, blocked: set, lattice: Lattice, scenario: Scenario,
                 theta: PhaseProfile, cfg: GsConfig, rng) -> list:
    keys = random_jump_keys(blocked | {u.key}, cfg.candidates - N_NEIGHBORS, lattice, rng)
    return _candidates(keys, lattice, scenario, theta, scenario.altitude)


def kernel_scores(candidates, visited: VisitedSet, cfg: GsConfig) -> np.ndarray:
    """Adjusted dB scores: infeasible floored, visited poses lowered by the revisit penalty."""
    scores = np.array([c.gamma_db for c in candidates], dtype=float)
    scores = np.where(np.isfinite(scores), scores, FLOOR_DB)
    seen = np.array([c in visited for c in candidates], dtype=bool)
    return scores - cfg.revisit_penalty_db * seen


def transition_probs(candidates, visited: VisitedSet, cfg: GsConfig) -> np.ndarray:
    """Softmax of ``mu`` times the adjusted dB scores, computed with max subtraction."""
    if not candidates:
        raise ValueError("no candidates")
    z = cfg.mu * kernel_scores(candidates, visited, cfg)
    w = np.exp(z - z.max())
    return w / w.sum()


def select_index(probs, p: float) -> int:
    """Inverse CDF: the first index whose cumulative probability exceeds ``p``."""
    cdf = np.cumsum(probs)
    i = int(np.searchsorted(cdf, p, side="right"))
    if i >= len(probs):
        i = int(np.flatnonzero(np.asarray(probs) > 0)[-1])
    return i


def gs_step(u: Candidate, visited: VisitedSet, lattice: Lattice, scenario: Scenario,
            theta: PhaseProfile, cfg: GsConfig, rng) -> Candidate:
    """One transition: neighbours plus jumps, softmax kernel, inverse-CDF draw."""
    neighbors = neighbor_set(u, lattice, scenario, theta)
    blocked = {c.key for c in neighbors}
    pool = neighbors + random_jumps(u, blocked, lattice, scenario, theta, cfg, rng)
    probs = transition_probs(pool, visited, cfg)
    chosen = pool[select_index(probs, rng.random())]
    visited.add(chosen)
    return chosen


@dataclass(frozen=True, eq=False)
class GsResult:
    best: Candidate
    start: Candidate
    visited: list
    gamma_db_trace: np.ndarray

    @property
    def improved(self) -> bool:
        return self.best is not self.start


def start_candidate(scenario: Scenario, u0: Pose, theta: PhaseProfile, lattice: Lattice) -> Candidate:
    return _candidates(np.zeros((1, 5)), lattice, scenario, theta, scenario.altitude)[0]


def gs_phase(scenario: Scenario, u0: Pose, theta: PhaseProfile, cfg: GsConfig, rng=None,
             move_psi: bool = True) -> GsResult:
    """Run ``cfg.iterations`` steps from ``u0`` and return the best pose in {u0} and the visited set.

    Ties keep the earliest entry, with ``u0`` first. ``move_psi=False``
    freezes the orientation at ``u0.psi`` and explores positions only.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    lattice = Lattice.for_scenario(scenario, u0, cfg, move_psi)
    start = start_candidate(scenario, u0, theta, lattice)
    visited = VisitedSet()
    u = start
    for _ in range(cfg.iterations):
        u = gs_step(u, visited, lattice, scenario, theta, cfg, rng)
    pool = [start] + visited.items
    trace = np.array([c.gamma_db for c in pool])
    best = pool[int(np.argmax(trace))]
    return GsResult(best=best, start=start, visited=visited.items, gamma_db_trace=trace)
