"""Trajectory container and its CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np

from .vehicle import Control, ControlKind, VehicleState

CSV_COLUMNS = (
    "run_id", "t", "x", "v", "a", "control_kind", "control_value",
    "fuel_rate", "cum_fuel", "predicted_ttg",
)

_KIND_NAMES = {-1: "", int(ControlKind.THROTTLE): "throttle", int(ControlKind.BRAKE): "brake"}
_KIND_CODES = {name: code for code, name in _KIND_NAMES.items()}


@dataclass
class Trajectory:
    """Time-ordered states at uniform spacing.

    Row ``k`` holds the state at ``t[k]``; ``control_*``, ``accel`` and
    ``fuel_rate`` of row ``k`` describe the step that produced it, so row 0
    carries no control. ``predicted`` is the switch-time prediction the
    planner acted on for that step (NaN once the light is green or for
    drivers with no information).
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    control_kind: np.ndarray
    control_value: np.ndarray
    fuel_rate: np.ndarray
    predicted: np.ndarray
    forced: np.ndarray
    upstream_cost: np.ndarray | None = None
    downstream_cost: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.t.shape[0])

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self) > 1 else 0.0

    @property
    def cum_fuel(self) -> np.ndarray:
        return np.cumsum(self.fuel_rate * self.dt)

    def controls(self) -> list[Control | None]:
        out: list[Control | None] = []
        for k, val in zip(self.control_kind, self.control_value):
            out.append(None if k < 0 else Control(ControlKind(int(k)), float(val)))
        return out

    def states(self) -> Iterator[VehicleState]:
        for i, ctrl in enumerate(self.controls()):
            yield VehicleState(float(self.t[i]), float(self.x[i]), float(self.v[i]),
                               float(self.a[i]), ctrl)

    @classmethod
    def from_states(cls, states: Iterable[VehicleState]) -> "Trajectory":
        states = list(states)
        n = len(states)
        kinds = np.array([-1 if s.control is None else int(s.control.kind) for s in states],
                         dtype=np.int64)
        vals = np.array([np.nan if s.control is None else s.control.value for s in states])
        return cls(
            t=np.array([s.time_s for s in states], dtype=float),
            x=np.array([s.position_m for s in states], dtype=float),
            v=np.array([s.speed_mps for s in states], dtype=float),
            a=np.array([s.accel_mps2 for s in states], dtype=float),
            control_kind=kinds,
            control_value=vals,
            fuel_rate=np.full(n, np.nan),
            predicted=np.full(n, np.nan),
            forced=np.zeros(n, dtype=bool),
        )

    def jerk(self) -> np.ndarray:
        """|delta a| / dt between consecutive rows (len - 1 values)."""
        if len(self) < 2:
            return np.zeros(0)
        return np.abs(np.diff(self.a)) / self.dt

    def comfort_jerk(self) -> np.ndarray:
        """Jerk of every transition that does not touch an emergency brake.

        Entering, holding and leaving a forced stop are exempt; everything
        else must respect the comfort bound.
        """
        j = self.jerk()
        if j.size == 0:
            return j
        touched = self.forced[1:] | self.forced[:-1]
        return j[~touched]

def write_csv(runs: Iterable[tuple[str, Trajectory]], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for run_id, traj in runs:
        cum = traj.cum_fuel
        for i in range(len(traj)):
            w.writerow([
                run_id,
                repr(float(traj.t[i])),
                repr(float(traj.x[i])),
                repr(float(traj.v[i])),
                repr(float(traj.a[i])),
                _KIND_NAMES[int(traj.control_kind[i])],
                "" if traj.control_kind[i] < 0 else repr(float(traj.control_value[i])),
                repr(float(traj.fuel_rate[i])),
                repr(float(cum[i])),
                "" if np.isnan(traj.predicted[i]) else repr(float(traj.predicted[i])),
            ])


def read_csv(src: TextIO) -> dict[str, Trajectory]:
    rows: dict[str, list[list[str]]] = {}
    reader = csv.reader(src)
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected trajectory CSV header: {header}")
    for row in reader:
        rows.setdefault(row[0], []).append(row)
    out = {}
    for run_id, rs in rows.items():
        col = list(zip(*rs))
        out[run_id] = Trajectory(
            t=np.array(col[1], dtype=float),
            x=np.array(col[2], dtype=float),
            v=np.array(col[3], dtype=float),
            a=np.array(col[4], dtype=float),
            control_kind=np.array([_KIND_CODES[k] for k in col[5]], dtype=np.int64),
            control_value=np.array([float(s) if s else np.nan for s in col[6]]),
            fuel_rate=np.array(col[7], dtype=float),
            predicted=np.array([float(s) if s else np.nan for s in col[9]]),
            forced=np.zeros(len(rs), dtype=bool),
        )
    return out


def to_csv_string(runs: Iterable[tuple[str, Trajectory]]) -> str:
    buf = io.StringIO()
    write_csv(runs, buf)
    return buf.getvalue()
