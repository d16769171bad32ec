"""Sweep runners behind the CLI commands.

Sweep points are independent, so they may be dispatched to a thread pool;
results are collected in input order, which keeps the output identical
for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from airsopt.channel import evaluate_batch
from airsopt.config import ExperimentConfig
from airsopt.driver import MULTI_USER_SCHEMES, SINGLE_USER_SCHEMES, SchemeError, run_benchmark
from airsopt.report import ResultRow
from airsopt.scenario import linear_to_db
from airsopt.single_user import SingleUserScenario, gamma_c, optimal_psi_y


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def check_schemes(schemes, allowed) -> tuple:
    schemes = tuple(schemes) if schemes else tuple(allowed)
    bad = [s for s in schemes if s not in allowed]
    if bad:
        raise SchemeError(f"scheme(s) {', '.join(bad)} not valid here; choose from "
                          f"{', '.join(allowed)}")
    return schemes


def _fmt_num(x: float) -> str:
    return f"{x:g}"


def single_sweep_d(cfg: ExperimentConfig, distances=None, altitude=None, schemes=None,
                   threads: int = 1, timing: bool = False) -> list:
    """Single-user schemes at every BS-user distance; one row per (D, scheme)."""
    schemes = check_schemes(schemes, SINGLE_USER_SCHEMES)
    distances = cfg.sweep.distances if distances is None else tuple(distances)
    h = cfg.scenario.altitude if altitude is None else float(altitude)

    def run(d):
        scenario = cfg.single_user(d, h)
        sid = f"single-D{_fmt_num(d)}-H{_fmt_num(h)}"
        return [ResultRow.from_solution(sid, float(d), h, run_benchmark(scenario, s), timing)
                for s in schemes]

    return [row for rows in _map(run, distances, threads) for row in rows]


def single_sweep_h(cfg: ExperimentConfig, altitudes=None, distance=None, schemes=None,
                   threads: int = 1, timing: bool = False) -> list:
    """Single-user schemes at every altitude for a fixed distance."""
    schemes = check_schemes(schemes, SINGLE_USER_SCHEMES)
    altitudes = cfg.sweep.altitudes if altitudes is None else tuple(altitudes)
    d = cfg.sweep.distance if distance is None else float(distance)

    def run(h):
        scenario = cfg.single_user(d, h)
        sid = f"single-D{_fmt_num(d)}-H{_fmt_num(h)}"
        return [ResultRow.from_solution(sid, d, h, run_benchmark(scenario, s), timing)
                for s in schemes]

    return [row for rows in _map(run, altitudes, threads) for row in rows]


def psi_star_curve(cfg: ExperimentConfig, altitudes=None, distance=None) -> list:
    """Optimal tilt (degrees) and SNR (dB) versus qx for each altitude."""
    altitudes = cfg.sweep.altitudes if altitudes is None else tuple(altitudes)
    d = cfg.sweep.distance if distance is None else float(distance)
    rows = []
    for h in altitudes:
        s = SingleUserScenario.default(d, h, cfg.system_params(), cfg.sweep.span)
        qx = np.linspace(s.q_lo, s.q_hi, cfg.sweep.curve_points)
        psi = np.degrees(optimal_psi_y(qx, s))
        gam = linear_to_db(gamma_c(qx, s))
        sid = f"single-D{_fmt_num(d)}-H{_fmt_num(h)}"
        rows.extend((sid, float(h), float(x), float(p), float(g)) for x, p, g in zip(qx, psi, gam))
    return rows


def multi_optimize(cfg: ExperimentConfig, altitudes=None, schemes=None, threads: int = 1,
                   timing: bool = False):
    """Multi-user schemes across altitudes; returns ``(rows, [(scenario_id, H, Solution)])``."""
    schemes = check_schemes(schemes, MULTI_USER_SCHEMES)
    altitudes = cfg.sweep.multi_altitudes if altitudes is None else tuple(altitudes)
    setup = cfg.scenario.setup

    def run(h):
        scenario = cfg.multi_user_scenario(h)
        sid = f"{setup}-H{_fmt_num(h)}"
        out = []
        for s in schemes:
            sol = run_benchmark(scenario, s, cfg.ao_config(), seed=cfg.seed)
            out.append((ResultRow.from_solution(sid, setup, h, sol, timing), (sid, h, sol)))
        return out

    results = [item for items in _map(run, altitudes, threads) for item in items]
    return [r for r, _ in results], [s for _, s in results]


def field_map(cfg: ExperimentConfig, scenario_id: str, altitude: float, solution) -> list:
    """Worst-user SNR, aperture gain, beamforming gain and path gain over a position grid.

    Orientation and phases stay at the optimized values of ``solution``.
    """
    scenario = cfg.multi_user_scenario(altitude)
    x_lo, x_hi, y_lo, y_hi = scenario.region
    nx, ny = cfg.sweep.field_map_points
    xs = np.linspace(x_lo, x_hi, nx)
    ys = np.linspace(y_lo, y_hi, ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    q = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, float(altitude))])
    bd = evaluate_batch(scenario, q, solution.pose.psi, solution.theta)
    f_ag = np.where(bd.feasible, bd.f_ag, 0.0)
    path = bd.beta1 * bd.beta2
    rows = []
    for i in range(len(q)):
        rows.append((scenario_id, float(altitude), float(q[i, 0]), float(q[i, 1]),
                     float(linear_to_db(bd.gamma[i].min())), float(f_ag[i].min()),
                     float(bd.g_bf[i].min()), float(linear_to_db(path[i].min()))))
    return rows
