"""Delimited result output and JSON solution records.

Every CSV starts with one comment line naming the schema version and
units, followed by a fixed header. Numbers use '.' decimals via Python
formatting (no locale), lines end in LF, and a non-finite dB value is
written as the literal ``-inf``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

SCHEMA_VERSION = 1
RESULT_COLUMNS = ("scenario_id", "scheme", "sweep", "H", "gamma_min_db", "qx", "qy",
                  "psi_z", "psi_y", "psi_x", "seed", "runtime_ms")
CURVE_COLUMNS = ("scenario_id", "H", "qx", "psi_y_star", "gamma_db")
FIELD_COLUMNS = ("scenario_id", "H", "qx", "qy", "gamma_min_db", "f_ag_min", "g_bf_min",
                 "path_gain_db")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "-inf" if value < 0 else "inf"
        return f"{value:.12g}"
    return str(value)


@dataclass(frozen=True)
class ResultRow:
    """One (scheme, sweep point) outcome; angles in degrees, positions in metres."""

    scenario_id: str
    scheme: str
    sweep: object
    H: float
    gamma_min_db: float
    qx: float
    qy: float
    psi_z: float
    psi_y: float
    psi_x: float
    seed: int | None
    runtime_ms: float | None = None

    @classmethod
    def from_solution(cls, scenario_id, sweep, altitude, solution, timing: bool = False):
        psi = np.degrees(solution.pose.psi)
        return cls(scenario_id, solution.scheme, sweep, float(altitude), solution.gamma_min_db,
                   float(solution.pose.q[0]), float(solution.pose.q[1]), float(psi[0]),
                   float(psi[1]), float(psi[2]), solution.seed,
                   solution.runtime_s * 1e3 if timing else None)

    def cells(self) -> list:
        return [fmt(getattr(self, c)) for c in RESULT_COLUMNS]


def write_table(rows, columns, kind: str, out=None) -> str:
    """Serialize ``rows`` (sequences of cells) with the schema comment; returns the text."""
    buf = io.StringIO()
    buf.write(f"# airsopt {kind} schema_version={SCHEMA_VERSION} units=m,deg,dB\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row)
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def results_csv(rows, out=None) -> str:
    return write_table([r.cells() for r in rows], RESULT_COLUMNS, "results", out)


def read_results(text: str) -> list:
    """Parse a results CSV back into dictionaries of strings (comment line skipped)."""
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


def solution_record(scenario_id: str, solution) -> dict:
    theta = solution.theta
    return {
        "scenario_id": scenario_id,
        "scheme": solution.scheme,
        "seed": solution.seed,
        "gamma_min_db": solution.gamma_min_db,
        "q": [float(v) for v in solution.pose.q],
        "psi_rad": [float(v) for v in solution.pose.psi],
        "theta_x_phase_rad": [float(v) for v in np.angle(theta.theta_x)],
        "theta_y_phase_rad": [float(v) for v in np.angle(theta.theta_y)],
        "trace": [asdict(t) if hasattr(t, "__dataclass_fields__") else t for t in solution.trace],
        "metadata": solution.metadata,
        "runtime_s": solution.runtime_s,
    }


def write_json(records, out) -> None:
    json.dump(records, out, indent=2, sort_keys=True, default=_json_default)
    out.write("\n")


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not serializable: {type(value).__name__}")
