"""Self-check suite behind ``airsopt verify``.

Each check returns a :class:`CheckResult` with the measured quantity and
the tolerance it was held to; tolerances come from the ``[verify]``
config section, so a corrupted tolerance surfaces as a named failure.
The two long multi-user checks run only with ``full=True``.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from airsopt.beamforming import ScaConfig, penalty_residual, sca_solve
from airsopt.channel import PhaseProfile, passive_bf_gain, CompositeResponse
from airsopt.config import ExperimentConfig
from airsopt.driver import AoConfig, ao_run, run_benchmark
from airsopt.geometry import direction_cosines, rotation_matrix
from airsopt.gibbs import GsConfig
from airsopt.report import results_csv
from airsopt.scenario import linear_to_db, single_user_scenario
from airsopt.search import LocationGrid, OrientationGrid
from airsopt.single_user import (SingleUserScenario, aperture_gain_1d, gamma_c, iso_optimal_qx,
                                 optimal_psi_y, path_product, reduce_3d_to_2d)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {"check": self.name, "passed": self.passed, "value": self.value,
                "tolerance": self.tolerance, "detail": self.detail,
                "seconds": round(self.seconds, 3)}


def _uniform_psi(rng, n):
    return rng.uniform(-np.pi / 2, np.pi / 2, (n, 3))


def check_rotation(cfg: ExperimentConfig, rng):
    tol = cfg.verify.orthonormal_tol
    psi = _uniform_psi(rng, 1000)
    q = rotation_matrix(psi)
    orth = np.abs(np.swapaxes(q, -1, -2) @ q - np.eye(3)).max()
    det = np.abs(np.linalg.det(q) - 1).max()
    l1, _, l3 = np.moveaxis(direction_cosines(psi), -1, 0)
    ok = orth <= tol and det <= tol and np.all(l1**2 + l3**2 <= 1 + tol)
    return ok, float(max(orth, det)), tol, "orthonormality, det and L1^2 + L3^2 <= 1"


def _fag_2d(psi, qx, s):
    """F_AG of a general orientation for a single user on the x-axis, 0 when infeasible."""
    l1, _, l3 = direction_cosines(psi)
    h, d = s.altitude, s.distance
    c1 = (qx * l1 + h * l3) / np.hypot(qx, h)
    c2 = ((qx - d) * l1 + h * l3) / np.hypot(qx - d, h)
    return np.where((c1 >= 0) & (c2 >= 0), c1 * c2, 0.0)


def check_reduction(cfg: ExperimentConfig, rng):
    tol = cfg.verify.reduction_tol
    worst = 0.0
    for _ in range(1000):
        psi = _uniform_psi(rng, 1)[0]
        d = rng.uniform(50, 1000)
        h = rng.uniform(20, 500)
        s = SingleUserScenario.default(d, h)
        qx = rng.uniform(s.q_lo, s.q_hi)
        reduced = np.array(reduce_3d_to_2d(psi))
        worst = max(worst, abs(float(_fag_2d(psi, qx, s)) - float(_fag_2d(reduced, qx, s))))
    return worst <= tol, worst, tol, "F_AG unchanged by the 3D -> 2D reduction"


def check_optimal_tilt(cfg: ExperimentConfig, rng):
    tol = cfg.verify.tilt_rel_tol
    worst = 0.0
    grid = np.linspace(-np.pi / 2, np.pi / 2, 10_000)
    for _ in range(cfg.verify.samples):
        d = rng.uniform(50, 1000)
        h = rng.uniform(20, 500)
        s = SingleUserScenario.default(d, h)
        qx = rng.uniform(s.q_lo, s.q_hi)
        best = float(aperture_gain_1d(qx, optimal_psi_y(qx, s), s))
        grid_best = float(aperture_gain_1d(qx, grid, s).max())
        worst = max(worst, (grid_best - best) / grid_best)
    s = SingleUserScenario.default(500.0, 100.0)
    centre = float(optimal_psi_y(250.0, s))
    offsets = np.linspace(1, 300, 50)
    # the tilt is odd about the midpoint (it tends to +pi/2 and -pi/2 at the two far ends)
    sym = np.abs(optimal_psi_y(250.0 + offsets, s) + optimal_psi_y(250.0 - offsets, s)).max()
    g_hi, g_lo = gamma_c(250.0 + offsets, s), gamma_c(250.0 - offsets, s)
    sym = max(sym, float((np.abs(g_hi - g_lo) / g_hi).max()))
    ok = worst <= tol and centre == 0.0 and sym <= cfg.verify.symmetry_tol
    return ok, worst, tol, f"grid excess {worst:.2e}, psi*(D/2) = {centre}, asymmetry {sym:.1e}"


def check_isotropic_location(cfg: ExperimentConfig, rng):
    worst = 0.0
    for _ in range(50):
        d = rng.uniform(50, 1000)
        h = rng.uniform(20, 500)
        s = SingleUserScenario(d, h, -0.2 * d, 1.2 * d)
        grid = np.linspace(s.q_lo, s.q_hi, 100_000)
        step = grid[1] - grid[0]
        best = grid[np.argmin(path_product(grid, s))]
        err = min(abs(best - r) for r in iso_optimal_qx(d, h)) / step
        worst = max(worst, err)
    return worst <= 1.0, worst, 1.0, "distance to the closed-form root, in grid steps"


def check_bf_gain(cfg: ExperimentConfig, rng):
    tol = cfg.verify.bf_gain_rel_tol
    nx = ny = 16
    fx = np.exp(1j * rng.uniform(-np.pi, np.pi) * np.arange(nx))
    fy = np.exp(1j * rng.uniform(-np.pi, np.pi) * np.arange(ny))
    f = CompositeResponse(fx, fy)
    phases = rng.uniform(-np.pi, np.pi, (10_000, nx + ny))
    gx = np.abs(np.exp(1j * phases[:, :nx]) @ np.conj(fx)) ** 2
    gy = np.abs(np.exp(1j * phases[:, nx:]) @ np.conj(fy)) ** 2
    peak = passive_bf_gain(f, PhaseProfile(fx, fy))
    n2 = float((nx * ny) ** 2)
    rel = abs(peak - n2) / n2
    db = round(float(linear_to_db(n2)), 1)
    ok = np.all(gx * gy <= n2 * (1 + 1e-12)) and rel <= tol and db == 48.2
    return ok, rel, tol, f"random max {float((gx * gy).max()):.1f} <= {n2:.0f}, {db} dB"


def check_sca(cfg: ExperimentConfig, rng):
    v = cfg.verify
    sca = ScaConfig(penalty=cfg.algorithm.penalty, max_iter=cfg.algorithm.sca_max_iter,
                    tol=cfg.algorithm.sca_tol, sdp_tol=cfg.algorithm.sdp_tol)
    f1 = np.exp(1j * rng.uniform(-np.pi, np.pi) * np.arange(16))[None]
    theta, info = sca_solve(f1, np.ones(1), sca)
    single = abs(float(np.abs(f1.conj() @ theta)[0] ** 2) - 256) / 256
    levels = np.exp(2j * np.pi * np.arange(16) / 16)
    cand = levels[np.array(list(itertools.product(range(16), repeat=4)))]
    worst_ratio, worst_psd, worst_diag, worst_res = np.inf, 0.0, 0.0, info.penalty_residual / 16
    for _ in range(20):
        f = np.exp(1j * rng.uniform(-np.pi, np.pi, (2, 1)) * np.arange(4))
        w = rng.uniform(0.2, 1.0, 2)
        w /= np.linalg.norm(w)
        brute = (w[:, None] * np.abs(f.conj() @ cand.T) ** 2).min(axis=0).max()
        _, inf2 = sca_solve(f, w, sca)
        worst_ratio = min(worst_ratio, inf2.min_gain / brute)
        worst_psd = max(worst_psd, -float(np.linalg.eigvalsh(inf2.W).min()))
        worst_diag = max(worst_diag, float(np.abs(np.diag(inf2.W) - 1).max()))
        worst_res = max(worst_res, penalty_residual(inf2.W) / 4)
    ok = (single <= v.sca_single_rel_tol and worst_ratio >= v.sca_brute_ratio
          and worst_psd <= v.sca_psd_tol and worst_diag <= v.sca_psd_tol and worst_res <= 1e-4)
    detail = (f"single-user rel err {single:.1e}; brute ratio {worst_ratio:.3f}; "
              f"min eig {-worst_psd:.1e}; diag err {worst_diag:.1e}; residual/Nx {worst_res:.1e}")
    return ok, worst_ratio, v.sca_brute_ratio, detail


def check_ordering(cfg: ExperimentConfig, rng):
    tol = cfg.verify.ordering_db_tol
    worst = np.inf
    order = ("isotropic_bound", "joint", "orientation_only", "location_only")
    for d in (200.0, 400.0, 600.0, 800.0, 1000.0):
        scenario = single_user_scenario(d, 100.0, cfg.system_params(), cfg.sweep.span)
        vals = [run_benchmark(scenario, s).gamma_min_db for s in order]
        worst = min(worst, min(a - b for a, b in zip(vals[:-1], vals[1:])))
    return worst >= -tol, worst, -tol, "smallest consecutive gap in dB along the scheme order"


def check_small_distance(cfg: ExperimentConfig, rng):
    tol = cfg.verify.small_d_gap_db
    d = cfg.verify.small_d_distance
    scenario = single_user_scenario(d, 100.0, cfg.system_params(), cfg.sweep.span)
    bound = run_benchmark(scenario, "isotropic_bound").gamma_min_db
    gaps = [bound - run_benchmark(scenario, s).gamma_min_db
            for s in ("joint", "orientation_only", "location_only")]
    return max(gaps) <= tol, max(gaps), tol, f"largest gap below the bound at D = {d:g} m"


def check_determinism(cfg: ExperimentConfig, rng):
    from airsopt.experiments import single_sweep_d
    runs = [results_csv(single_sweep_d(cfg, (300.0, 700.0))) for _ in range(2)]
    return runs[0] == runs[1], float(runs[0] == runs[1]), 1.0, "identical CSV on rerun"


def _reduced_ao(cfg: ExperimentConfig, gs_enabled=True) -> AoConfig:
    base = cfg.ao_config(gs_enabled)
    return AoConfig(cfg.algorithm.ao_iterations, LocationGrid((30, 30), (10, 10)),
                    OrientationGrid((20, 20, 20), (3, 3, 3)), base.sca,
                    GsConfig(100, base.gs.candidates, base.gs.mu, base.gs.step_q,
                             base.gs.step_psi, base.gs.revisit_penalty_db, cfg.seed), gs_enabled)


def check_monotone(cfg: ExperimentConfig, rng):
    sol = ao_run(cfg.multi_user_scenario(100.0), _reduced_ao(cfg), seed=cfg.seed)
    steps = np.diff(sol.trace_db)
    worst = float(steps.min()) if steps.size else 0.0
    return worst >= 0.0, worst, 0.0, "smallest step of the AO trace (dB)"


def check_superiority(cfg: ExperimentConfig, rng):
    worst = np.inf
    ao = cfg.ao_config()
    for h in (100.0, 200.0):
        scenario = cfg.multi_user_scenario(h)
        base = [run_benchmark(scenario, s, ao, seed=cfg.seed).gamma_min_db
                for s in ("ao_no_gs", "individual_optimization", "no_orientation")]
        best = run_benchmark(scenario, "ao_gs", ao, seed=cfg.seed).gamma_min_db
        worst = min(worst, best - max(base))
    return worst >= 0.0, worst, 0.0, f"{cfg.scenario.setup} setup: AO w/ GS minus best benchmark (dB)"


QUICK_CHECKS = (("rotation", check_rotation), ("reduction_3d_2d", check_reduction),
                ("optimal_tilt", check_optimal_tilt), ("isotropic_location", check_isotropic_location),
                ("bf_gain_bound", check_bf_gain), ("sca_solver", check_sca),
                ("scheme_ordering", check_ordering), ("small_distance_gap", check_small_distance),
                ("determinism", check_determinism))
FULL_CHECKS = (("ao_monotone", check_monotone), ("multi_user_superiority", check_superiority))
CHECK_NAMES = tuple(name for name, _ in QUICK_CHECKS + FULL_CHECKS)


def run_checks(cfg: ExperimentConfig, full: bool = False, only=None) -> list:
    checks = QUICK_CHECKS + (FULL_CHECKS if full else ())
    if only:
        unknown = set(only) - set(CHECK_NAMES)
        if unknown:
            raise ValueError(f"unknown check(s): {', '.join(sorted(unknown))}")
        checks = tuple(c for c in QUICK_CHECKS + FULL_CHECKS if c[0] in only)
    results = []
    for name, fn in checks:
        rng = np.random.default_rng(cfg.seed)
        start = time.perf_counter()
        ok, value, tol, detail = fn(cfg, rng)
        results.append(CheckResult(name, bool(ok), float(value), float(tol), detail,
                                   time.perf_counter() - start))
    return results
