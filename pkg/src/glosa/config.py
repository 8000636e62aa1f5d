"""Experiment configuration from a TOML file plus command-line overrides.

Loading never stops at the first problem: unknown keys, bad types and
violated invariants are all collected and reported together.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import tomli

from .baseline import BaselineParams
from .harness import DEFAULT_REPS, ScenarioKind, ScenarioSpec, Setup, SweepGrid
from .optimizer import OptimizerConfig
from .vehicle import RoadParams, VehicleParams


class ConfigError(ValueError):
    def __init__(self, messages: list[str]):
        super().__init__("; ".join(messages))
        self.messages = messages


SCENARIO_ALIASES = {
    "det": ScenarioKind.DETERMINISTIC, "deterministic": ScenarioKind.DETERMINISTIC,
    "stoch": ScenarioKind.STOCHASTIC, "stochastic": ScenarioKind.STOCHASTIC,
    "base": ScenarioKind.UNINFORMED, "baseline": ScenarioKind.UNINFORMED,
    "uninformed": ScenarioKind.UNINFORMED,
}
GRADE_ALIASES = {"down": "downhill", "downhill": "downhill", "up": "uphill", "uphill": "uphill"}
SCENARIO_KEYS = {"kind": "scenario_kind", "grade": "grade_direction", "v0": "initial_speed_mps",
                 "ttg": "ttg_s", "ttg_s": "ttg_s", "bias": "bias_s", "bias_s": "bias_s",
                 "sd": "sd_s", "sd_s": "sd_s", "replications": "replications", "reps": "replications",
                 "initial_speed_mps": "initial_speed_mps"}


def _coerce(value: Any, like: Any) -> tuple[bool, Any]:
    """Check ``value`` against the type of the default ``like``."""
    if like is None:
        return True, tuple(value) if isinstance(value, list) else value
    if isinstance(like, bool):
        return isinstance(value, bool), value
    if isinstance(like, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        return ok, float(value) if ok else value
    if isinstance(like, int):
        return isinstance(value, int) and not isinstance(value, bool), value
    if isinstance(like, str):
        return isinstance(value, str), value
    if isinstance(like, tuple):
        if not isinstance(value, list):
            return False, value
        if like and isinstance(like[0], str):
            return all(isinstance(x, str) for x in value), tuple(value)
        ok = all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
        return ok, tuple(float(x) for x in value) if ok else value
    return True, value


def _build(cls, data: Mapping[str, Any], section: str, errors: list[str], base=None):
    """Dataclass from a mapping, recording unknown keys and bad values."""
    names = {f.name: f for f in fields(cls)}
    kwargs = {}
    for k, v in data.items():
        if k not in names:
            errors.append(f"[{section}] unknown key {k!r}")
            continue
        ok, v = _coerce(v, getattr(base, k, None) if base is not None else None)
        if not ok:
            errors.append(f"[{section}] {k} has the wrong type ({type(v).__name__})")
            continue
        kwargs[k] = v
    try:
        return replace(base, **kwargs) if base is not None else cls(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"[{section}] {exc}")
        return base if base is not None else cls()


@dataclass
class ExperimentConfig:
    vehicle: VehicleParams = field(default_factory=VehicleParams.cadillac_srx_2014)
    road: RoadParams = field(default_factory=RoadParams)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    baseline: BaselineParams = field(default_factory=BaselineParams)
    scenarios: list[ScenarioSpec] = field(default_factory=list)
    sweep: SweepGrid = field(default_factory=SweepGrid)
    output_dir: str = "glosa-out"
    seed: int = 0
    replications: int = DEFAULT_REPS
    workers: int = 1
    verbose: bool = False
    source: str | None = None

    @property
    def setup(self) -> Setup:
        return Setup(self.optimizer, self.vehicle, self.baseline, self.road)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], source: str | None = None,
                     errors: list[str] | None = None) -> "ExperimentConfig":
        errors = [] if errors is None else errors
        known = {"experiment", "vehicle", "road", "optimizer", "baseline", "scenario", "sweep"}
        for k in data:
            if k not in known:
                errors.append(f"unknown section [{k}]")
        cfg = cls(source=source)
        exp = dict(data.get("experiment", {}))
        for k, v in exp.items():
            if k not in ("output_dir", "seed", "replications", "workers", "verbose"):
                errors.append(f"[experiment] unknown key {k!r}")
                continue
            ok, v = _coerce(v, getattr(cfg, k))
            if ok:
                setattr(cfg, k, v)
            else:
                errors.append(f"[experiment] {k} has the wrong type ({type(v).__name__})")
        cfg.vehicle = _build(VehicleParams, data.get("vehicle", {}), "vehicle", errors, cfg.vehicle)
        cfg.road = _build(RoadParams, data.get("road", {}), "road", errors, cfg.road)
        cfg.optimizer = _build(OptimizerConfig, data.get("optimizer", {}), "optimizer", errors,
                               cfg.optimizer)
        cfg.baseline = _build(BaselineParams, data.get("baseline", {}), "baseline", errors,
                              cfg.baseline)
        cfg.sweep = _build(SweepGrid, data.get("sweep", {}), "sweep", errors, cfg.sweep)
        for i, sc in enumerate(data.get("scenario", [])):
            spec = scenario_from_mapping(sc, f"scenario {i}", errors, cfg.seed, cfg.replications)
            if spec is not None:
                cfg.scenarios.append(replace(spec, cell_index=i))
        return cfg

    @classmethod
    def load(cls, path: str | os.PathLike, errors: list[str] | None = None) -> "ExperimentConfig":
        errors = [] if errors is None else errors
        p = Path(path)
        try:
            with open(p, "rb") as fh:
                data = tomli.load(fh)
        except FileNotFoundError:
            raise ConfigError([f"config file not found: {p}"])
        except tomli.TOMLDecodeError as exc:
            raise ConfigError([f"config file {p} is not valid TOML: {exc}"])
        return cls.from_mapping(data, str(p), errors)

    def violations(self) -> list[str]:
        out = []
        out += self.vehicle.violations()
        out += self.road.violations()
        out += self.optimizer.violations()
        out += self.baseline.violations()
        out += self.sweep.violations()
        for spec in self.scenarios:
            out += [f"{spec.label}: {m}" for m in spec.violations()]
        if not isinstance(self.seed, int) or self.seed < 0:
            out.append("experiment.seed must be a non-negative integer")
        if not isinstance(self.replications, int) or self.replications < 1:
            out.append("experiment.replications >= 1")
        if not isinstance(self.workers, int) or self.workers < 1:
            out.append("experiment.workers >= 1")
        if not _writable(Path(self.output_dir)):
            out.append(f"experiment.output_dir {self.output_dir!r} is not writable")
        return out

    def resolved(self) -> dict:
        """Fully resolved settings as plain data."""
        def plain(obj):
            d = dataclasses.asdict(obj)
            return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}
        return {
            "experiment": {"output_dir": self.output_dir, "seed": self.seed,
                           "replications": self.replications, "workers": self.workers,
                           "verbose": self.verbose, "source": self.source},
            "vehicle": plain(self.vehicle),
            "road": plain(self.road),
            "optimizer": plain(self.optimizer),
            "baseline": plain(self.baseline),
            "sweep": plain(self.sweep) | {"cells": self.sweep.n_cells},
            "scenario": [s.to_dict() for s in self.scenarios],
        }


def scenario_from_mapping(data: Mapping[str, Any], where: str, errors: list[str],
                          seed: int = 0, replications: int = 1) -> ScenarioSpec | None:
    kwargs: dict[str, Any] = {"seed": seed, "replications": replications}
    for k, v in data.items():
        name = SCENARIO_KEYS.get(k)
        if name is None:
            errors.append(f"[{where}] unknown key {k!r}")
            continue
        like = {"scenario_kind": "", "grade_direction": "", "replications": 0}.get(name, 0.0)
        ok, v = _coerce(v, like)
        if not ok:
            errors.append(f"[{where}] {k} has the wrong type ({type(v).__name__})")
            return None
        kwargs[name] = v
    kind = kwargs.get("scenario_kind", "deterministic")
    if kind not in SCENARIO_ALIASES:
        errors.append(f"[{where}] unknown scenario kind {kind!r}")
        return None
    kwargs["scenario_kind"] = SCENARIO_ALIASES[kind]
    grade = kwargs.get("grade_direction", "downhill")
    if grade not in GRADE_ALIASES:
        errors.append(f"[{where}] unknown grade {grade!r}")
        return None
    kwargs["grade_direction"] = GRADE_ALIASES[grade]
    if kwargs["scenario_kind"] is not ScenarioKind.STOCHASTIC:
        kwargs["replications"] = int(data.get("replications", data.get("reps", 1)))
    try:
        return ScenarioSpec(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"[{where}] {exc}")
        return None


def parse_override(text: str) -> tuple[str, str, Any]:
    """``section.key=value`` with the value parsed as a TOML scalar or array."""
    if "=" not in text or "." not in text.split("=", 1)[0]:
        raise ConfigError([f"override {text!r} is not of the form section.key=value"])
    lhs, rhs = text.split("=", 1)
    section, key = lhs.strip().split(".", 1)
    try:
        value = tomli.loads(f"v = {rhs.strip()}")["v"]
    except tomli.TOMLDecodeError:
        value = rhs.strip()
    return section, key, value


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    for text in overrides:
        section, key, value = parse_override(text)
        out.setdefault(section, {})[key] = value
    return out


def _writable(path: Path) -> bool:
    p = path.resolve()
    while not p.exists():
        if p.parent == p:
            return False
        p = p.parent
    return p.is_dir() and os.access(p, os.W_OK)
