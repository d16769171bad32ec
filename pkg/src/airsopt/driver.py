"""Alternating optimisation with optional Gibbs exploration, initialisation and benchmarks.

One AO iteration runs location search, orientation search and passive
beamforming in turn, each with the other two blocks fixed, followed (when
enabled) by a Gibbs phase over the pose. The stages always move to what
their search returns, even when the worst-user SNR drops for the moment,
since the phases are re-tuned right after. With Gibbs enabled the run
also keeps the best solution seen and returns it, so its reported trace
never decreases; without Gibbs the last iterate is returned.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from airsopt.beamforming import ScaConfig, init_phases, optimize_phases
from airsopt.channel import PhaseProfile, aperture_gains, min_snr
from airsopt.geometry import link_angles
from airsopt.gibbs import GsConfig, gs_phase
from airsopt.scenario import Pose, Scenario, linear_to_db
from airsopt.search import (LocationGrid, OrientationGrid, optimize_location,
                            optimize_orientation, search_location, search_orientation)
from airsopt.single_user import (SingleUserScenario, inphase_phases, iso_optimal_qx,
                                 optimal_psi_y, qx_grid, snr_1d, solve_p4)

SINGLE_USER_SCHEMES = ("joint", "orientation_only", "location_only", "isotropic_bound")
MULTI_USER_SCHEMES = ("ao_gs", "ao_no_gs", "individual_optimization", "no_orientation")
SCHEMES = SINGLE_USER_SCHEMES + MULTI_USER_SCHEMES


class SchemeError(ValueError):
    """Unknown scheme, or a single-user scheme applied to a general layout."""


class AoError(RuntimeError):
    """A module error raised inside the AO loop, tagged with iteration and stage."""

    def __init__(self, iteration: int, stage: str, cause: Exception):
        super().__init__(f"AO iteration {iteration}, stage {stage}: {cause}")
        self.iteration = iteration
        self.stage = stage


@dataclass(frozen=True)
class AoConfig:
    iterations: int = 3
    location: LocationGrid = field(default_factory=LocationGrid)
    orientation: OrientationGrid = field(default_factory=OrientationGrid)
    sca: ScaConfig = field(default_factory=ScaConfig)
    gs: GsConfig = field(default_factory=GsConfig)
    gs_enabled: bool = True

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations (J) must be >= 1")


@dataclass(frozen=True, eq=False)
class TraceEntry:
    iteration: int
    stage: str
    gamma_db: float


@dataclass(frozen=True, eq=False)
class Solution:
    pose: Pose
    theta: PhaseProfile
    gamma_min: float
    scheme: str
    seed: int | None
    runtime_s: float
    trace: tuple = ()
    metadata: dict = field(default_factory=dict)

    @property
    def gamma_min_db(self) -> float:
        return float(linear_to_db(self.gamma_min))

    @property
    def trace_db(self) -> np.ndarray:
        return np.array([t.gamma_db for t in self.trace])


def _min_path_gain(scenario: Scenario, q) -> np.ndarray:
    q = np.atleast_2d(q)
    d_bs = np.sum(q**2, axis=-1)
    d_u = np.sum((q[:, None, :] - scenario.user_positions) ** 2, axis=-1)
    return 1.0 / (d_bs * d_u.max(axis=-1))


def init_location(scenario: Scenario, grid: LocationGrid) -> np.ndarray:
    """Position maximizing the worst end-to-end path gain 1 / (|q|^2 |q - w_l|^2)."""
    return search_location(scenario, lambda q: _min_path_gain(scenario, q), grid).point


def init_orientation(scenario: Scenario, q, grid: OrientationGrid) -> np.ndarray:
    """Euler angles maximizing the worst effective aperture gain (infeasible scores 0)."""
    q = np.asarray(q, float)

    def objective(psi):
        link = link_angles(scenario, q, psi)
        f_ag, feasible = aperture_gains(scenario, link)
        return np.where(feasible, f_ag, 0.0).min(axis=-1)

    return search_orientation(objective, grid).point


def initial_solution(scenario: Scenario, cfg: AoConfig, orient: bool = True):
    q = init_location(scenario, cfg.location)
    psi = init_orientation(scenario, q, cfg.orientation) if orient else np.zeros(3)
    pose = Pose(q, psi)
    return pose, init_phases(scenario, pose, cfg.sca)


def ao_run(scenario: Scenario, cfg: AoConfig = AoConfig(), seed: int | None = None,
           orient: bool = True, scheme: str | None = None) -> Solution:
    """AO for J full iterations from the benchmark initialisation.

    With Gibbs enabled the best solution over all stages is returned and
    the trace shows the best value so far; without it the trace follows
    the iterate and the last one is returned.

    ``orient=False`` freezes the orientation at zero (the no-orientation
    benchmark). ``seed`` defaults to ``cfg.gs.seed``; one generator feeds
    every Gibbs phase of the run.
    """
    start = time.perf_counter()
    seed = cfg.gs.seed if seed is None else int(seed)
    rng = np.random.default_rng(seed)
    keep_best = cfg.gs_enabled
    pose, theta = initial_solution(scenario, cfg, orient)
    value = min_snr(scenario, pose, theta)
    best = (pose, theta, value)
    trace = [TraceEntry(0, "init", float(linear_to_db(value)))]

    def advance(new_pose, new_theta, j, stage):
        nonlocal pose, theta, value, best
        pose, theta = new_pose, new_theta
        value = min_snr(scenario, pose, theta)
        if value > best[2]:
            best = (pose, theta, value)
        shown = best[2] if keep_best else value
        trace.append(TraceEntry(j, stage, float(linear_to_db(shown))))

    for j in range(1, cfg.iterations + 1):
        stage = "location"
        try:
            loc = optimize_location(scenario, pose.psi, theta, cfg.location, incumbent=pose.q)
            advance(Pose(loc.point, pose.psi), theta, j, stage)
            if orient:
                stage = "orientation"
                ori = optimize_orientation(scenario, pose.q, theta, cfg.orientation,
                                           incumbent=pose.psi)
                advance(Pose(pose.q, ori.point), theta, j, stage)
            stage = "phases"
            profile, _ = optimize_phases(scenario, pose, cfg.sca)
            advance(pose, profile, j, stage)
            if cfg.gs_enabled:
                stage = "gibbs"
                gs = gs_phase(scenario, pose, theta, cfg.gs, rng, move_psi=orient)
                advance(gs.best.pose, theta, j, stage)
        except Exception as exc:  # noqa: BLE001 - re-raised with context
            raise AoError(j, stage, exc) from exc

    if keep_best:
        pose, theta, value = best
    label = scheme or ("ao_gs" if cfg.gs_enabled else "ao_no_gs")
    meta = {"loop_guard": "j <= J", "ao_iterations": cfg.iterations,
            "gs_pool_includes_start": cfg.gs_enabled, "gs_enabled": cfg.gs_enabled,
            "returns": "best visited" if keep_best else "last iterate"}
    return Solution(pose, theta, value, label, seed if cfg.gs_enabled else None,
                    time.perf_counter() - start, tuple(trace), meta)


def _single_user(scenario: Scenario) -> SingleUserScenario:
    x_lo, x_hi, y_lo, y_hi = scenario.region
    if scenario.n_users != 1 or scenario.users[0, 1] != 0 or y_lo != 0 or y_hi != 0:
        raise SchemeError("single-user schemes need one user at (D, 0) and qy pinned to 0")
    return SingleUserScenario(float(scenario.users[0, 0]), scenario.altitude, x_lo, x_hi,
                              scenario.params)


def _inphase_solution(scenario: Scenario, qx: float, psi_y: float, scheme: str, start, meta=None):
    pose = Pose(scenario.position(qx, 0.0), (0.0, psi_y, 0.0))
    theta = inphase_phases(link_angles(scenario, pose.q, pose.psi), scenario.params)
    value = min_snr(scenario, pose, theta)
    return Solution(pose, theta, value, scheme, None, time.perf_counter() - start,
                    (TraceEntry(0, scheme, float(linear_to_db(value))),), meta or {})


def _clip_qx(qx: float, s: SingleUserScenario) -> float:
    return float(min(max(qx, s.q_lo), s.q_hi))


def run_benchmark(scenario: Scenario, scheme: str, cfg: AoConfig = AoConfig(),
                  seed: int | None = None) -> Solution:
    """Run one named scheme; all results are scored by the same SNR evaluation."""
    start = time.perf_counter()
    if scheme not in SCHEMES:
        raise SchemeError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
    if scheme in SINGLE_USER_SCHEMES:
        s = _single_user(scenario)
        if scheme == "joint":
            qx, psi_y, _ = solve_p4(s)
            return _inphase_solution(scenario, qx, psi_y, scheme, start)
        if scheme == "orientation_only":
            qx = _clip_qx(iso_optimal_qx(s.distance, s.altitude)[0], s)
            return _inphase_solution(scenario, qx, float(optimal_psi_y(qx, s)), scheme, start)
        if scheme == "location_only":
            grid = qx_grid(s)
            qx = float(grid[int(np.argmax(snr_1d(grid, 0.0, s)))])
            return _inphase_solution(scenario, qx, 0.0, scheme, start)
        iso = scenario.with_isotropic()
        qx = _clip_qx(iso_optimal_qx(s.distance, s.altitude)[0], s)
        return _inphase_solution(iso, qx, 0.0, scheme, start, {"isotropic": True})

    if scheme == "individual_optimization":
        pose, theta = initial_solution(scenario, cfg)
        value = min_snr(scenario, pose, theta)
        return Solution(pose, theta, value, scheme, None, time.perf_counter() - start,
                        (TraceEntry(0, "init", float(linear_to_db(value))),), {})
    if scheme == "ao_no_gs":
        cfg = AoConfig(cfg.iterations, cfg.location, cfg.orientation, cfg.sca, cfg.gs, False)
        return ao_run(scenario, cfg, seed, scheme=scheme)
    cfg = AoConfig(cfg.iterations, cfg.location, cfg.orientation, cfg.sca, cfg.gs, True)
    return ao_run(scenario, cfg, seed, orient=(scheme == "ao_gs"), scheme=scheme)
