"""Two-level (coarse then fine) grid searches over AIRS location and orientation.

A box is tiled into equal cells; every cell centre is scored, the best
cell is re-tiled into sub-cells and the best sub-cell centre (or the
coarse centre itself) wins. Cells are enumerated 0-based in row-major
order, and every argmax breaks ties toward the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from airsopt.channel import PhaseProfile, min_snr_batch
from airsopt.geometry import EulerAngles
from airsopt.scenario import Scenario

HALF_PI = np.pi / 2
ANGLE_BOX = ((-HALF_PI, HALF_PI),) * 3


def _counts(value, dims: int, name: str) -> tuple:
    counts = (int(value),) * dims if np.isscalar(value) else tuple(int(v) for v in value)
    if len(counts) != dims or min(counts) < 1:
        raise ValueError(f"{name} needs {dims} counts, each >= 1")
    return counts


@dataclass(frozen=True)
class LocationGrid:
    """Coarse ``(Nx, Ny)`` tiling of the movement region and fine ``(Nx, Ny)`` tiling of one cell."""

    coarse: tuple = (100, 100)
    fine: tuple = (100, 100)

    def __post_init__(self):
        object.__setattr__(self, "coarse", _counts(self.coarse, 2, "coarse"))
        object.__setattr__(self, "fine", _counts(self.fine, 2, "fine"))


@dataclass(frozen=True)
class OrientationGrid:
    """Coarse and fine ``(Nz, Ny, Nx)`` tilings of ``[-pi/2, pi/2]^3``."""

    coarse: tuple = (60, 60, 60)
    fine: tuple = (3, 3, 3)

    def __post_init__(self):
        object.__setattr__(self, "coarse", _counts(self.coarse, 3, "coarse"))
        object.__setattr__(self, "fine", _counts(self.fine, 3, "fine"))


@dataclass(frozen=True, eq=False)
class SearchResult:
    """Winner of a hybrid search. ``infeasible`` means no sample scored above zero."""

    point: np.ndarray
    value: float
    coarse_index: int
    coarse_value: float
    evaluations: int
    infeasible: bool = False
    kept_incumbent: bool = False


def unravel(index: int, counts) -> tuple:
    """0-based row-major decomposition; the first axis varies slowest."""
    total = int(np.prod(counts))
    if not 0 <= index < total:
        raise IndexError(f"cell index {index} outside [0, {total})")
    return tuple(int(i) for i in np.unravel_index(index, tuple(counts)))


def cell_centers(box, counts) -> np.ndarray:
    """All cell centres of a uniform tiling, shape ``(prod(counts), d)`` in row-major order."""
    axes = []
    for (lo, hi), n in zip(box, counts):
        axes.append(lo + (hi - lo) * (2 * np.arange(n) + 1) / (2 * n))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def cell_center(index: int, counts, box=ANGLE_BOX) -> np.ndarray:
    """Centre of one cell; over the angle box this is ``(2n + 1 - N) pi / (2N)`` per axis."""
    idx = unravel(index, counts)
    return np.array([lo + (hi - lo) * (2 * i + 1) / (2 * n)
                     for (lo, hi), i, n in zip(box, idx, counts)])


def orientation_cell_center(index: int, counts) -> EulerAngles:
    return EulerAngles(*(float(v) for v in cell_center(index, counts, ANGLE_BOX)))


def cell_box(index: int, box, counts) -> tuple:
    idx = unravel(index, counts)
    out = []
    for (lo, hi), i, n in zip(box, idx, counts):
        width = (hi - lo) / n
        out.append((lo + i * width, lo + (i + 1) * width))
    return tuple(out)


def hybrid_search(objective, box, coarse, fine) -> SearchResult:
    """Maximize a batched ``objective((K, d)) -> (K,)`` with the two-level tiling.

    The fine stage scores the winning coarse centre first and then the
    sub-cell centres, so the result never falls below the coarse best.
    """
    centers = cell_centers(box, coarse)
    values = np.asarray(objective(centers), dtype=float)
    n_star = int(np.argmax(values))
    sub = cell_centers(cell_box(n_star, box, coarse), fine)
    pool = np.vstack([centers[n_star][None], sub])
    fine_values = np.asarray(objective(pool), dtype=float)
    m_star = int(np.argmax(fine_values))
    best = float(fine_values[m_star])
    return SearchResult(point=pool[m_star].copy(), value=best, coarse_index=n_star,
                        coarse_value=float(values[n_star]),
                        evaluations=len(centers) + len(pool), infeasible=not best > 0)


def region_box(scenario: Scenario) -> tuple:
    x_lo, x_hi, y_lo, y_hi = scenario.region
    return ((x_lo, x_hi), (y_lo, y_hi))


def region_center(scenario: Scenario) -> np.ndarray:
    x_lo, x_hi, y_lo, y_hi = scenario.region
    return scenario.position((x_lo + x_hi) / 2, (y_lo + y_hi) / 2)


def _positions(scenario: Scenario, xy: np.ndarray) -> np.ndarray:
    return np.column_stack([xy, np.full(len(xy), scenario.altitude)])


def _finalize(result: SearchResult, point, incumbent, score, keep_incumbent) -> SearchResult:
    """Swap in the incumbent when the grid found nothing feasible, or when asked to protect it."""
    if incumbent is None:
        return SearchResult(point, result.value, result.coarse_index, result.coarse_value,
                            result.evaluations, result.infeasible)
    inc_val = float(score(incumbent))
    if result.infeasible or (keep_incumbent and inc_val > result.value):
        return SearchResult(np.asarray(incumbent, float).copy(), inc_val, result.coarse_index,
                            result.coarse_value, result.evaluations + 1, not inc_val > 0, True)
    return SearchResult(point, result.value, result.coarse_index, result.coarse_value,
                        result.evaluations + 1, result.infeasible)


def search_location(scenario: Scenario, objective, grid: LocationGrid, incumbent=None,
                    keep_incumbent: bool = False) -> SearchResult:
    """Hybrid search over (qx, qy) at altitude H for an objective of positions ``(K, 3)``."""
    def score_xy(xy):
        return objective(_positions(scenario, xy))

    res = hybrid_search(score_xy, region_box(scenario), grid.coarse, grid.fine)
    point = scenario.position(*res.point)
    return _finalize(res, point, incumbent,
                     lambda q: objective(np.asarray(q, float)[None])[0], keep_incumbent)


def search_orientation(objective, grid: OrientationGrid, incumbent=None,
                       keep_incumbent: bool = False) -> SearchResult:
    """Hybrid search over Euler angles for an objective of ``(K, 3)`` angle triples."""
    res = hybrid_search(objective, ANGLE_BOX, grid.coarse, grid.fine)
    return _finalize(res, res.point, incumbent,
                     lambda psi: objective(np.asarray(psi, float)[None])[0], keep_incumbent)


def optimize_location(scenario: Scenario, psi, theta: PhaseProfile, grid: LocationGrid,
                      incumbent=None, keep_incumbent: bool = False) -> SearchResult:
    """Best position for fixed orientation and phases; infeasible samples score 0.

    If every sample is infeasible the incumbent (when given) is returned
    with ``infeasible`` set. ``keep_incumbent`` also keeps it whenever it
    beats the grid winner.
    """
    psi = np.asarray(psi, float)

    def objective(q):
        return min_snr_batch(scenario, q, psi, theta)

    return search_location(scenario, objective, grid, incumbent, keep_incumbent)


def optimize_orientation(scenario: Scenario, q, theta: PhaseProfile, grid: OrientationGrid,
                         incumbent=None, keep_incumbent: bool = False) -> SearchResult:
    """Best Euler angles for fixed position and phases (same fallbacks as location)."""
    q = np.asarray(q, float)

    def objective(psi):
        return min_snr_batch(scenario, q, psi, theta)

    return search_orientation(objective, grid, incumbent, keep_incumbent)
