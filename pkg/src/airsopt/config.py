"""Experiment configuration: a TOML file with four sections plus a top-level seed.

Grammar (every key optional, defaults shown by ``airsopt config --dump``)::

    seed = 0                      # unsigned 64-bit

    [scenario]
    setup = "sparse"              # "sparse", "dense" or "custom"
    users = [[330.0, 240.0], ...] # custom only, ground (x, y) in m
    region = [-140.0, 790.0, -58.0, 298.0]
    altitude = 100.0              # m

    [radio]
    wavelength = 0.1              # m
    d_tx = 0.5                    # BS spacing, in wavelengths
    d_rs = 0.5                    # AIRS spacing, in wavelengths
    m = 64
    nx = 16
    ny = 16
    beta0_db = -40.0
    power_dbm = 20.0
    noise_dbm = -110.0

    [algorithm]                   # AO, Gibbs, SCA and grid settings
    ...

    [sweep]                       # single-user and altitude sweeps
    ...

    [verify]                      # tolerances of the verify command
    ...

Decibel quantities are converted to linear watts only when the radio
constants are built.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field, fields

import numpy as np
import tomli
import tomli_w

from airsopt.beamforming import ScaConfig
from airsopt.driver import AoConfig
from airsopt.gibbs import GsConfig
from airsopt.scenario import (DENSE_USERS, MULTI_USER_REGION, SPARSE_USERS, Scenario,
                              SystemParams, single_user_scenario)
from airsopt.search import LocationGrid, OrientationGrid

SETUPS = {"sparse": SPARSE_USERS, "dense": DENSE_USERS}


class ConfigError(ValueError):
    """Malformed configuration; carries the offending field and source line when known."""

    def __init__(self, message: str, field_name: str | None = None, line: int | None = None):
        where = []
        if field_name:
            where.append(f"field '{field_name}'")
        if line:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.field = field_name
        self.line = line


def _floats(values) -> tuple:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class ScenarioSection:
    setup: str = "sparse"
    users: tuple = ()
    region: tuple = MULTI_USER_REGION
    altitude: float = 100.0

    def user_array(self) -> np.ndarray:
        if self.setup == "custom":
            return np.array(self.users, dtype=float)
        return np.array(SETUPS[self.setup], dtype=float)


@dataclass(frozen=True)
class RadioSection:
    wavelength: float = 0.1
    d_tx: float = 0.5
    d_rs: float = 0.5
    m: int = 64
    nx: int = 16
    ny: int = 16
    beta0_db: float = -40.0
    power_dbm: float = 20.0
    noise_dbm: float = -110.0


@dataclass(frozen=True)
class AlgorithmSection:
    ao_iterations: int = 3
    gs_iterations: int = 400
    penalty: float = 10.0
    mu: float = 20.0
    candidates: int = 30
    step_q: float = 5.0
    step_psi: float = math.pi / 180
    revisit_penalty_db: float = 3.0
    sca_max_iter: int = 50
    sca_tol: float = 1e-5
    sdp_tol: float = 1e-9
    refine_rounds: int = 1
    location_coarse: tuple = (100, 100)
    location_fine: tuple = (100, 100)
    orientation_coarse: tuple = (60, 60, 60)
    orientation_fine: tuple = (3, 3, 3)


@dataclass(frozen=True)
class SweepSection:
    distances: tuple = tuple(float(d) for d in range(200, 1001, 100))
    distance: float = 500.0
    altitudes: tuple = tuple(float(h) for h in range(50, 501, 50))
    multi_altitudes: tuple = tuple(float(h) for h in range(50, 301, 50))
    span: tuple = (-0.2, 1.2)
    curve_points: int = 101
    field_map_points: tuple = (60, 40)


@dataclass(frozen=True)
class VerifySection:
    orthonormal_tol: float = 1e-12
    reduction_tol: float = 1e-9
    tilt_rel_tol: float = 1e-9
    symmetry_tol: float = 1e-12
    bf_gain_rel_tol: float = 1e-9
    sca_single_rel_tol: float = 0.01
    sca_brute_ratio: float = 0.85
    sca_psd_tol: float = 1e-8
    ordering_db_tol: float = 0.05
    small_d_gap_db: float = 1.5
    small_d_distance: float = 200.0
    samples: int = 200


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    radio: RadioSection = field(default_factory=RadioSection)
    algorithm: AlgorithmSection = field(default_factory=AlgorithmSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    verify: VerifySection = field(default_factory=VerifySection)

    # ----- builders -------------------------------------------------------
    def system_params(self) -> SystemParams:
        r = self.radio
        return SystemParams.from_db(r.beta0_db, r.power_dbm, r.noise_dbm, wavelength=r.wavelength,
                                    d_tx=r.d_tx * r.wavelength, d_rs=r.d_rs * r.wavelength,
                                    m=r.m, nx=r.nx, ny=r.ny)

    def multi_user_scenario(self, altitude: float | None = None) -> Scenario:
        s = self.scenario
        return Scenario(s.user_array(), s.altitude if altitude is None else altitude, s.region,
                        self.system_params())

    def single_user(self, distance: float, altitude: float | None = None,
                    isotropic: bool = False) -> Scenario:
        h = self.scenario.altitude if altitude is None else altitude
        return single_user_scenario(distance, h, self.system_params(), self.sweep.span, isotropic)

    def ao_config(self, gs_enabled: bool = True, seed: int | None = None) -> AoConfig:
        a = self.algorithm
        sca = ScaConfig(penalty=a.penalty, max_iter=a.sca_max_iter, tol=a.sca_tol,
                        sdp_tol=a.sdp_tol, refine_rounds=a.refine_rounds)
        gs = GsConfig(iterations=a.gs_iterations, candidates=a.candidates, mu=a.mu,
                      step_q=a.step_q, step_psi=a.step_psi,
                      revisit_penalty_db=a.revisit_penalty_db,
                      seed=self.seed if seed is None else seed)
        return AoConfig(a.ao_iterations, LocationGrid(a.location_coarse, a.location_fine),
                        OrientationGrid(a.orientation_coarse, a.orientation_fine), sca, gs,
                        gs_enabled)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, seed=int(seed))


SECTIONS = {"scenario": ScenarioSection, "radio": RadioSection, "algorithm": AlgorithmSection,
            "sweep": SweepSection, "verify": VerifySection}


def _line_of(text: str, section: str | None, key: str) -> int | None:
    """1-based line of ``key = ...`` inside ``[section]`` (top level when ``section`` is None)."""
    if text is None:
        return None
    current = None
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for number, line in enumerate(text.splitlines(), 1):
        header = re.match(r"^\s*\[([^\]]+)\]", line)
        if header:
            current = header.group(1).strip()
            continue
        if current == section and pattern.match(line):
            return number
    return None


def _coerce(value, default, name: str, line):
    """Convert a TOML value to the type of ``default``; tuples of numbers stay tuples."""
    def fail(kind):
        raise ConfigError(f"expected {kind}, got {value!r}", name, line)

    if isinstance(default, bool):
        if not isinstance(value, bool):
            fail("a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            fail("a string")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list):
            fail("an array")
        out = []
        for item in value:
            if isinstance(item, list):
                if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in item):
                    fail("an array of numbers")
                out.append(_floats(item))
            elif isinstance(item, (int, float)) and not isinstance(item, bool):
                int_like = default and isinstance(default[0], int) and not isinstance(default[0], bool)
                if int_like and not isinstance(item, int):
                    fail("an array of integers")
                out.append(item if int_like else float(item))
            else:
                fail("an array of numbers")
        return tuple(out)
    fail(type(default).__name__)


def _section(cls, data: dict, name: str, text):
    if not isinstance(data, dict):
        raise ConfigError("expected a table", name, None)
    defaults = cls()
    known = {f.name for f in fields(cls)}
    values = {}
    for key, value in data.items():
        line = _line_of(text, name, key)
        if key not in known:
            raise ConfigError("unknown key", f"{name}.{key}", line)
        values[key] = _coerce(value, getattr(defaults, key), f"{name}.{key}", line)
    return cls(**values)


def _validate(cfg: ExperimentConfig, text) -> None:
    def check(ok, section, key, message):
        if not ok:
            raise ConfigError(message, f"{section}.{key}", _line_of(text, section, key))

    s = cfg.scenario
    check(s.setup in ("sparse", "dense", "custom"), "scenario", "setup",
          "must be 'sparse', 'dense' or 'custom'")
    if s.setup == "custom":
        check(len(s.users) >= 1 and all(len(u) == 2 for u in s.users), "scenario", "users",
              "custom setup needs a non-empty list of [x, y] pairs")
    else:
        check(not s.users, "scenario", "users", "only allowed with setup = 'custom'")
    check(len(s.region) == 4 and s.region[0] <= s.region[1] and s.region[2] <= s.region[3],
          "scenario", "region", "needs [x_lo, x_hi, y_lo, y_hi] with lo <= hi")
    check(s.altitude > 0, "scenario", "altitude", "must be positive")
    r = cfg.radio
    for key in ("wavelength", "d_tx", "d_rs"):
        check(getattr(r, key) > 0, "radio", key, "must be positive")
    for key in ("m", "nx", "ny"):
        check(getattr(r, key) >= 1, "radio", key, "must be >= 1")
    a = cfg.algorithm
    check(a.ao_iterations >= 1, "algorithm", "ao_iterations", "must be >= 1")
    check(a.gs_iterations >= 1, "algorithm", "gs_iterations", "must be >= 1")
    check(a.candidates > 10, "algorithm", "candidates", "must exceed 10")
    check(a.penalty > 0, "algorithm", "penalty", "must be positive")
    check(a.mu >= 0, "algorithm", "mu", "must be non-negative")
    check(a.step_q > 0, "algorithm", "step_q", "must be positive")
    check(a.step_psi > 0, "algorithm", "step_psi", "must be positive")
    check(a.sca_max_iter >= 1, "algorithm", "sca_max_iter", "must be >= 1")
    for key, dims in (("location_coarse", 2), ("location_fine", 2),
                      ("orientation_coarse", 3), ("orientation_fine", 3)):
        counts = getattr(a, key)
        check(len(counts) == dims and min(counts) >= 1, "algorithm", key,
              f"needs {dims} counts, each >= 1")
    w = cfg.sweep
    check(all(d > 0 for d in w.distances), "sweep", "distances", "distances must be positive")
    check(w.distance > 0, "sweep", "distance", "must be positive")
    check(all(h > 0 for h in w.altitudes), "sweep", "altitudes", "altitudes must be positive")
    check(all(h > 0 for h in w.multi_altitudes), "sweep", "multi_altitudes",
          "altitudes must be positive")
    check(len(w.span) == 2 and w.span[0] <= w.span[1], "sweep", "span", "needs [lo, hi], lo <= hi")
    check(w.curve_points >= 2, "sweep", "curve_points", "must be >= 2")
    check(len(w.field_map_points) == 2 and min(w.field_map_points) >= 1, "sweep",
          "field_map_points", "needs two counts >= 1")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("must be an unsigned 64-bit integer", "seed", _line_of(text, None, "seed"))


def from_dict(data: dict, text: str | None = None) -> ExperimentConfig:
    data = dict(data)
    seed = data.pop("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"expected an integer, got {seed!r}", "seed", _line_of(text, None, "seed"))
    sections = {}
    for key, value in data.items():
        if key not in SECTIONS:
            raise ConfigError("unknown section or key", key, _line_of(text, None, key)
                              or _header_line(text, key))
        sections[key] = _section(SECTIONS[key], value, key, text)
    cfg = ExperimentConfig(seed=seed, **sections)
    _validate(cfg, text)
    return cfg


def _header_line(text, name):
    if text is None:
        return None
    for number, line in enumerate(text.splitlines(), 1):
        if re.match(rf"^\s*\[{re.escape(name)}\]", line):
            return number
    return None


def loads(text: str) -> ExperimentConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        match = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", None,
                          int(match.group(1)) if match else None) from exc
    return from_dict(data, text)


def load(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return loads(text)


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def to_dict(cfg: ExperimentConfig) -> dict:
    out = {"seed": cfg.seed}
    for name in SECTIONS:
        section = getattr(cfg, name)
        out[name] = {f.name: _plain(getattr(section, f.name)) for f in fields(section)}
    if cfg.scenario.setup != "custom":
        del out["scenario"]["users"]
    return out


def dumps(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))
