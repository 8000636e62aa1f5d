"""Scenario execution: single cells, the scenario matrix, the bias/sd sweep and
the savings-proportion surface.

Every replication owns a generator seeded from (master seed, cell index,
replication index), so results do not depend on execution order or on the
number of worker processes.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .baseline import BaselineParams, baseline_trajectory
from .fuel import trajectory_fuel
from .optimizer import OptimizerConfig, plan_trajectory
from .spat import PredictionModel, SignalTiming, generator, prediction_stream
from .trajectory import Trajectory
from .vehicle import RoadParams, VehicleParams

GRADES = {"downhill": -0.03, "uphill": 0.03}
TTGS = (10.0, 15.0, 20.0, 25.0)
FREE_FLOW_SPEED = 17.88
SLOW_SPEED = 12.96
SWEEP_BIAS = (0.0, 0.8, 2.0, 4.0, 8.0)
SWEEP_SD = (0.0, 0.5, 1.0, 1.25, 2.0, 4.0, 6.0, 8.0)
DEFAULT_REPS = 50


class ScenarioKind(str, enum.Enum):
    UNINFORMED = "uninformed"
    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_kind: ScenarioKind = ScenarioKind.DETERMINISTIC
    grade_direction: str = "downhill"
    initial_speed_mps: float = FREE_FLOW_SPEED
    ttg_s: float = 10.0
    bias_s: float = 0.0
    sd_s: float = 0.0
    replications: int = 1
    seed: int = 0
    cell_index: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenario_kind", ScenarioKind(self.scenario_kind))

    def violations(self) -> list[str]:
        out = []
        if self.grade_direction not in GRADES:
            out.append(f"ScenarioSpec.grade_direction in {sorted(GRADES)}")
        if not self.initial_speed_mps > 0:
            out.append("ScenarioSpec.initial_speed_mps > 0")
        if not self.ttg_s >= 0:
            out.append("ScenarioSpec.ttg_s >= 0")
        if self.replications < 1:
            out.append("ScenarioSpec.replications >= 1")
        if self.scenario_kind is not ScenarioKind.STOCHASTIC and (self.bias_s or self.sd_s):
            out.append("ScenarioSpec: bias_s = sd_s = 0 unless stochastic")
        out += PredictionModel(self.bias_s, self.sd_s).violations()
        return out

    @property
    def grade(self) -> float:
        return GRADES[self.grade_direction]

    @property
    def timing(self) -> SignalTiming:
        return SignalTiming(self.ttg_s)

    @property
    def label(self) -> str:
        s = f"{self.scenario_kind.value}-{self.grade_direction}-ttg{self.ttg_s:g}-v{self.initial_speed_mps:g}"
        if self.scenario_kind is ScenarioKind.STOCHASTIC:
            s += f"-b{self.bias_s:g}-sd{self.sd_s:g}"
        return s

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenario_kind"] = self.scenario_kind.value
        return d


@dataclass
class RunResult:
    spec: ScenarioSpec
    fuel_L: list[float]
    baseline_fuel_L: float
    trajectories: list[Trajectory] = field(default_factory=list, repr=False)
    baseline: Trajectory | None = field(default=None, repr=False)

    @property
    def mean_fuel_L(self) -> float:
        return _mean(self.fuel_L)

    @property
    def sd_fuel_L(self) -> float:
        return float(np.std(self.fuel_L, ddof=1)) if len(self.fuel_L) > 1 else 0.0

    @property
    def savings_vs_baseline_pct(self) -> float:
        return 100.0 * (self.baseline_fuel_L - self.mean_fuel_L) / self.baseline_fuel_L

    def run_ids(self) -> list[str]:
        return [f"{self.spec.label}-r{r}" for r in range(len(self.trajectories))]

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "fuel_L": list(self.fuel_L),
            "mean_fuel_L": self.mean_fuel_L,
            "sd_fuel_L": self.sd_fuel_L,
            "baseline_fuel_L": self.baseline_fuel_L,
            "savings_vs_baseline_pct": self.savings_vs_baseline_pct,
        }


def _mean(xs: Sequence[float]) -> float:
    # identical values average to themselves exactly
    if all(x == xs[0] for x in xs):
        return float(xs[0])
    return math.fsum(xs) / len(xs)


@dataclass(frozen=True)
class Setup:
    """Everything shared by the cells of one experiment."""

    config: OptimizerConfig = OptimizerConfig()
    vehicle: VehicleParams = VehicleParams.cadillac_srx_2014()
    baseline: BaselineParams = BaselineParams()
    # speed limit and gravity; the grade comes from each scenario
    road: RoadParams = RoadParams()

    def road_for(self, spec: "ScenarioSpec") -> RoadParams:
        return replace(self.road, grade=spec.grade)


def replication_seed(master: int, cell: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master, cell, rep])


def run_scenario(spec: ScenarioSpec, setup: Setup | None = None,
                 keep_trajectories: bool = True) -> RunResult:
    """Execute one cell: every replication plus the uninformed reference."""
    setup = setup or Setup()
    bad = spec.violations()
    if bad:
        raise ValueError("; ".join(bad))
    cfg, veh = setup.config, setup.vehicle
    road, timing = setup.road_for(spec), spec.timing
    course = cfg.course_length_m
    base = baseline_trajectory(timing, spec.initial_speed_mps, veh, road, cfg, setup.baseline)
    base_fuel = trajectory_fuel(base, veh, road, course)
    trajs: list[Trajectory] = []
    if spec.scenario_kind is ScenarioKind.UNINFORMED:
        trajs = [base]
    elif spec.scenario_kind is ScenarioKind.DETERMINISTIC:
        trajs = [plan_trajectory(timing, None, spec.initial_speed_mps, cfg, veh, road)]
    else:
        model = PredictionModel(spec.bias_s, spec.sd_s)
        for r in range(spec.replications):
            rng = generator(replication_seed(spec.seed, spec.cell_index, r))
            stream = prediction_stream(timing, model, cfg.dt_s, cfg.max_steps, rng)
            trajs.append(plan_trajectory(timing, stream, spec.initial_speed_mps, cfg, veh, road))
    fuels = [trajectory_fuel(t, veh, road, course) for t in trajs]
    if len(trajs) == 1 and spec.replications > 1:
        # information-free kinds are deterministic: one run stands for all
        fuels = fuels * spec.replications
        trajs = trajs * spec.replications
    return RunResult(spec, fuels, base_fuel, trajs if keep_trajectories else [],
                     base if keep_trajectories else None)


def _run_star(args):
    spec, setup, keep = args
    return run_scenario(spec, setup, keep)


def run_many(specs: Sequence[ScenarioSpec], setup: Setup | None = None,
             keep_trajectories: bool = False, workers: int = 1) -> list[RunResult]:
    """Run cells in order; with ``workers`` > 1 they are spread over processes."""
    setup = setup or Setup()
    jobs = [(s, setup, keep_trajectories) for s in specs]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


# ---------------------------------------------------------------- sweep


@dataclass(frozen=True)
class SweepGrid:
    biases: tuple[float, ...] = SWEEP_BIAS
    sds: tuple[float, ...] = SWEEP_SD
    grades: tuple[str, ...] = ("downhill", "uphill")
    ttgs: tuple[float, ...] = TTGS
    initial_speed_mps: float = FREE_FLOW_SPEED

    def violations(self) -> list[str]:
        out = []
        for b in self.biases:
            if not 0 <= b <= 8:
                out.append(f"SweepGrid bias {b} outside [0, 8]")
        for s in self.sds:
            if not 0 <= s <= 8:
                out.append(f"SweepGrid sd {s} outside [0, 8]")
        for g in self.grades:
            if g not in GRADES:
                out.append(f"SweepGrid grade {g!r} unknown")
        return out

    @property
    def n_cells(self) -> int:
        return len(self.biases) * len(self.sds) * len(self.grades) * len(self.ttgs)

    def specs(self, reps: int, seed: int) -> list[ScenarioSpec]:
        out = []
        for g in self.grades:
            for ttg in self.ttgs:
                for b in self.biases:
                    for s in self.sds:
                        out.append(ScenarioSpec(ScenarioKind.STOCHASTIC, g, self.initial_speed_mps,
                                                ttg, b, s, reps, seed, len(out)))
        return out


@dataclass
class SweepResult:
    grid: SweepGrid
    cells: list[RunResult]
    # deterministic reference and baseline per (grade, ttg)
    deterministic: dict[tuple[str, float], RunResult]

    def slice(self, grade: str, ttg: float) -> np.ndarray:
        """Mean fuel as a (bias x sd) array for one grade and TTG."""
        out = np.full((len(self.grid.biases), len(self.grid.sds)), np.nan)
        for c in self.cells:
            if c.spec.grade_direction == grade and c.spec.ttg_s == ttg:
                i = self.grid.biases.index(c.spec.bias_s)
                j = self.grid.sds.index(c.spec.sd_s)
                out[i, j] = c.mean_fuel_L
        return out

    def baseline_fuel(self, grade: str, ttg: float) -> float:
        return self.deterministic[(grade, ttg)].baseline_fuel_L

    def deterministic_fuel(self, grade: str, ttg: float) -> float:
        return self.deterministic[(grade, ttg)].mean_fuel_L

    def cells_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cell_index", "grade", "ttg_s", "bias_s", "sd_s", "replications",
                    "mean_fuel_L", "sd_fuel_L", "baseline_fuel_L", "deterministic_fuel_L",
                    "savings_pct"])
        for c in self.cells:
            s = c.spec
            w.writerow([s.cell_index, s.grade_direction, repr(s.ttg_s), repr(s.bias_s), repr(s.sd_s),
                        s.replications, repr(c.mean_fuel_L), repr(c.sd_fuel_L),
                        repr(c.baseline_fuel_L),
                        repr(self.deterministic_fuel(s.grade_direction, s.ttg_s)),
                        repr(c.savings_vs_baseline_pct)])
        return buf.getvalue()

    def runs_csv(self) -> str:
        """Long format: one row per replication."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cell_index", "grade", "ttg_s", "bias_s", "sd_s", "replication", "fuel_L",
                    "baseline_fuel_L", "savings_pct"])
        for c in self.cells:
            s = c.spec
            for r, f in enumerate(c.fuel_L):
                w.writerow([s.cell_index, s.grade_direction, repr(s.ttg_s), repr(s.bias_s),
                            repr(s.sd_s), r, repr(f), repr(c.baseline_fuel_L),
                            repr(100.0 * (c.baseline_fuel_L - f) / c.baseline_fuel_L)])
        return buf.getvalue()


def deterministic_references(grades: Iterable[str], ttgs: Iterable[float], v0: float,
                             setup: Setup) -> dict[tuple[str, float], RunResult]:
    return {(g, t): run_scenario(ScenarioSpec(ScenarioKind.DETERMINISTIC, g, v0, t), setup, False)
            for g in grades for t in ttgs}


def sensitivity_sweep(grid: SweepGrid | None = None, reps: int = DEFAULT_REPS, seed: int = 0,
                      setup: Setup | None = None, workers: int = 1) -> SweepResult:
    """Run every (grade, TTG, bias, sd) cell of the grid."""
    grid = grid or SweepGrid()
    bad = grid.violations()
    if bad:
        raise ValueError("; ".join(bad))
    setup = setup or Setup()
    cells = run_many(grid.specs(reps, seed), setup, False, workers)
    det = deterministic_references(grid.grades, grid.ttgs, grid.initial_speed_mps, setup)
    return SweepResult(grid, cells, det)


@dataclass(frozen=True)
class ProportionCell:
    bias_s: float
    sd_s: float
    proportion: float


def savings_proportion_surface(sweep: SweepResult) -> list[ProportionCell]:
    """Share of the maximum possible savings reached at each (bias, sd).

    Per cell the ratio is (baseline - stochastic) / (baseline - deterministic)
    with numerator and denominator summed over every grade/TTG slice of the
    sweep. A vanishing denominator gives NaN (undefined).
    """
    grid = sweep.grid
    out = []
    for i, b in enumerate(grid.biases):
        for j, s in enumerate(grid.sds):
            num, den = [], []
            for g in grid.grades:
                for t in grid.ttgs:
                    base = sweep.baseline_fuel(g, t)
                    num.append(base - sweep.slice(g, t)[i, j])
                    den.append(base - sweep.deterministic_fuel(g, t))
            d = math.fsum(den)
            p = math.fsum(num) / d if d != 0 else float("nan")
            out.append(ProportionCell(b, s, p))
    return out


def proportion_array(surface: Sequence[ProportionCell], grid: SweepGrid) -> np.ndarray:
    out = np.full((len(grid.biases), len(grid.sds)), np.nan)
    for c in surface:
        out[grid.biases.index(c.bias_s), grid.sds.index(c.sd_s)] = c.proportion
    return out


# --------------------------------------------------------------- matrix


@dataclass
class MatrixCell:
    """One scenario-matrix entry.

    Stochastic entries average the sweep cells of their grade and TTG, i.e.
    over every bias/sd level.
    """

    kind: ScenarioKind
    grade_direction: str
    ttg_s: float
    mean_fuel_L: float
    baseline_fuel_L: float
    runs: int

    @property
    def savings_pct(self) -> float:
        return 100.0 * (self.baseline_fuel_L - self.mean_fuel_L) / self.baseline_fuel_L

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "grade": self.grade_direction, "ttg_s": self.ttg_s,
                "mean_fuel_L": self.mean_fuel_L, "baseline_fuel_L": self.baseline_fuel_L,
                "savings_pct": self.savings_pct, "runs": self.runs}


def run_matrix(sweep: SweepResult) -> list[MatrixCell]:
    """Uninformed, deterministic and stochastic entries for every slice of
    ``sweep``: 2 grades x 4 TTG x 3 kinds with the default grid."""
    out = []
    for g in sweep.grid.grades:
        for t in sweep.grid.ttgs:
            base = sweep.baseline_fuel(g, t)
            det = sweep.deterministic_fuel(g, t)
            cells = [c for c in sweep.cells if c.spec.grade_direction == g and c.spec.ttg_s == t]
            stoch = _mean([c.mean_fuel_L for c in cells])
            out.append(MatrixCell(ScenarioKind.UNINFORMED, g, t, base, base, 1))
            out.append(MatrixCell(ScenarioKind.DETERMINISTIC, g, t, det, base, 1))
            out.append(MatrixCell(ScenarioKind.STOCHASTIC, g, t, stoch, base,
                                  sum(len(c.fuel_L) for c in cells)))
    return out


# -------------------------------------------------------------- summary


def summary(matrix: Sequence[MatrixCell] = (), sweep: SweepResult | None = None,
            runs: Sequence[RunResult] = (), meta: dict | None = None) -> dict:
    out: dict = {"meta": meta or {}}
    if runs:
        out["runs"] = [r.to_dict() for r in runs]
    if matrix:
        out["matrix"] = [c.to_dict() for c in matrix]
    if sweep is not None:
        out["sweep"] = {
            "biases": list(sweep.grid.biases), "sds": list(sweep.grid.sds),
            "grades": list(sweep.grid.grades), "ttgs": list(sweep.grid.ttgs),
            "cells": len(sweep.cells),
            "proportion_surface": [asdict(c) for c in savings_proportion_surface(sweep)],
        }
    return out


def summary_json(data: dict) -> str:
    # NaN is not JSON; undefined proportions become null
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return None
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        return x
    return json.dumps(clean(data), indent=2, sort_keys=True) + "\n"


def with_config(setup: Setup, **overrides) -> Setup:
    return replace(setup, config=replace(setup.config, **overrides))
