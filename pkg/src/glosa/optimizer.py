"""Receding-horizon fuel-optimal approach planner.

Every step the planner costs each admissible control by holding it until
the predicted green (upstream fuel U) and then holding the best throttle
until the end of the course (downstream fuel D), and applies the control
with the least U + D. After the true green only the downstream term is used.
While the light is red a risk rule brakes at the maximum rate whenever the
vehicle could otherwise fail to stop before the bar.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import kernels as K
from .spat import SignalTiming, SpatSample, SpatStream
from .trajectory import Trajectory
from .vehicle import (
    MAX_BRAKE,
    Control,
    ControlKind,
    RoadParams,
    VehicleParams,
    VehicleState,
    pack,
)


def _grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    n = int(round((stop - start) / step))
    return tuple(round(start + i * step, 10) for i in range(n + 1))


@dataclass(frozen=True)
class OptimizerConfig:
    dt_s: float = 0.5
    throttle_grid: tuple[float, ...] = _grid(0.0, 1.0, 0.1)
    brake_grid: tuple[float, ...] = _grid(-6.0, -0.5, 0.5)
    jerk_limit_mps3: float = 1.3
    max_brake_mps2: float = MAX_BRAKE
    upstream_length_m: float = 250.0
    downstream_length_m: float = 180.0
    desired_exit_speed_mps: float = 17.88
    # weight of the kinetic-energy shortfall at the exit in downstream costs
    exit_penalty: float = 10.0
    safety_margin_m: float = 1e-6
    # also reject holds that would enter the forced-braking zone before the
    # predicted green
    risk_aware_rollout: bool = True
    max_steps: int = 600
    max_rollout_steps: int = 2000

    @property
    def course_length_m(self) -> float:
        return self.upstream_length_m + self.downstream_length_m

    def violations(self) -> list[str]:
        out = []
        if not self.dt_s > 0:
            out.append("OptimizerConfig.dt_s > 0")
        if not self.jerk_limit_mps3 > 0:
            out.append("OptimizerConfig.jerk_limit_mps3 > 0")
        if not self.throttle_grid:
            out.append("OptimizerConfig.throttle_grid non-empty")
        if not self.brake_grid:
            out.append("OptimizerConfig.brake_grid non-empty")
        for f in self.throttle_grid:
            if not 0.0 <= f <= 1.0:
                out.append(f"Control bounds: throttle level {f} outside [0, 1]")
        for b in self.brake_grid:
            if not self.max_brake_mps2 <= b <= 0.0:
                out.append(f"Control bounds: brake level {b} outside [{self.max_brake_mps2}, 0]")
        if not self.max_brake_mps2 < 0:
            out.append("OptimizerConfig.max_brake_mps2 < 0")
        if not self.upstream_length_m > 0 or not self.downstream_length_m > 0:
            out.append("OptimizerConfig section lengths > 0")
        if not self.max_steps >= 1:
            out.append("OptimizerConfig.max_steps >= 1")
        return out

    def packed(self) -> np.ndarray:
        c = np.empty(K.N_C)
        c[K.DT] = self.dt_s
        c[K.JERK] = self.jerk_limit_mps3
        c[K.MAX_BRAKE] = self.max_brake_mps2
        c[K.X_STOP] = self.upstream_length_m
        c[K.X_END] = self.course_length_m
        c[K.V_DES] = self.desired_exit_speed_mps
        c[K.EXIT_PENALTY] = self.exit_penalty
        c[K.SAFETY_MARGIN] = self.safety_margin_m
        c[K.MAX_ROLLOUT] = self.max_rollout_steps
        c[K.RISK_AWARE] = 1.0 if self.risk_aware_rollout else 0.0
        return c

    def grids(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.asarray(self.throttle_grid, dtype=float),
                np.asarray(self.brake_grid, dtype=float))


class Phase(enum.Enum):
    UPSTREAM = "upstream"
    DOWNSTREAM = "downstream"


@dataclass(frozen=True)
class PlanState:
    vehicle: VehicleState
    last_spat: SpatSample | None = None
    phase: Phase = Phase.UPSTREAM
    distance_covered_upstream_m: float = 0.0
    # the previous step was an emergency brake; comfort limits are waived
    # for the transition out of it
    after_emergency: bool = False

    @property
    def red(self) -> bool:
        return self.phase is Phase.UPSTREAM


class PlanningError(RuntimeError):
    def __init__(self, message: str, trajectory: Trajectory | None = None):
        super().__init__(message)
        self.trajectory = trajectory


def critical_stopping_distance(speed_mps: float, max_brake_mps2: float = MAX_BRAKE) -> float:
    """Constant-deceleration stopping distance v^2 / (2 |alpha|)."""
    if speed_mps < 0:
        raise ValueError("speed must be non-negative")
    return float(K.critical_distance(float(speed_mps), float(max_brake_mps2)))


def risk_check(state: PlanState, config: OptimizerConfig) -> Control | None:
    """Emergency brake when the bar is within the critical stopping distance.

    A stop already under way continues until standstill or green. Only the
    distance rule is applied here. The planner additionally
    brakes whenever no admissible control keeps the next state stoppable
    before the bar (see ``admissible_controls``).
    """
    v = state.vehicle.speed_mps
    remaining = config.upstream_length_m - state.vehicle.position_m
    if not (state.red and v > 0):
        return None
    if state.after_emergency or remaining <= critical_stopping_distance(v, config.max_brake_mps2):
        return Control.brake(config.max_brake_mps2)
    return None


def _scratch():
    return tuple(np.empty(K.MAX_CANDIDATES) for _ in range(4)) + (
        np.empty(K.MAX_CANDIDATES, dtype=np.int64),)


def admissible_controls(state: PlanState, config: OptimizerConfig, road: RoadParams,
                        vehicle: VehicleParams | None = None) -> list[Control]:
    """Controls whose one-step successor respects every constraint.

    Throttle levels that would push speed past the limit are dropped (coasting
    is clamped instead), the effective acceleration must stay within
    jerk_limit * dt of the current one in both directions, and on red the
    successor must still be able to stop short of the bar at full braking.
    Besides the grid levels the set holds the speed-holding control and the
    two controls on the jerk bound.
    """
    vehicle = vehicle or VehicleParams.cadillac_srx_2014()
    p = pack(vehicle, road)
    thr, brk = config.grids()
    cx, cvn, ca, cv, ck = _scratch()
    s = state.vehicle
    n = K.candidates(s.position_m, s.speed_mps, s.accel_mps2, state.after_emergency, state.red,
                     thr, brk, p, config.packed(), ck, cv, cx, cvn, ca)
    return [Control(ControlKind(int(ck[i])), float(cv[i])) for i in range(n)]


@dataclass(frozen=True)
class SectionCost:
    upstream_L: float
    downstream_L: float
    feasible: bool

    @property
    def total_L(self) -> float:
        return self.upstream_L + self.downstream_L

    def __iter__(self):
        return iter((self.upstream_L, self.downstream_L, self.feasible))


def two_section_cost(state: PlanState, upstream_control: Control, spat: SpatSample,
                     config: OptimizerConfig, vehicle: VehicleParams,
                     road: RoadParams) -> SectionCost:
    """Heuristic cost of holding ``upstream_control`` until the predicted green.

    Infeasible when the hold reaches the bar before the predicted switch, or,
    with ``risk_aware_rollout``, when it would enter the forced-braking zone
    while the light is still predicted red. The downstream part holds each throttle level from the end of the hold to the
    course end; the cheapest one is returned.
    """
    if spat.predicted_switch_time_s < state.vehicle.time_s:
        raise ValueError("prediction lies in the past")
    p = pack(vehicle, road)
    c = config.packed()
    thr, _ = config.grids()
    s = state.vehicle
    status, u, xs, vs, _ts = K.upstream_rollout(
        s.position_m, s.speed_mps, s.time_s, int(upstream_control.kind),
        upstream_control.value, spat.predicted_switch_time_s, np.inf, p, c)
    if status != K.OK:
        return SectionCost(float(u), float("inf"), False)
    d = K.best_downstream(xs, vs, np.inf, thr, p, c)
    return SectionCost(float(u), float(d), True)


@dataclass(frozen=True)
class Decision:
    control: Control
    forced: bool
    candidates: tuple[Control, ...]
    upstream_L: tuple[float, ...]
    downstream_L: tuple[float, ...]


def decide(state: PlanState, spat: SpatSample | None, config: OptimizerConfig,
           vehicle: VehicleParams, road: RoadParams) -> Decision:
    p = pack(vehicle, road)
    c = config.packed()
    thr, brk = config.grids()
    s = state.vehicle
    cur = s.control
    cur_kind = -1 if cur is None else int(cur.kind)
    cur_val = 0.0 if cur is None else cur.value
    t_pred = spat.predicted_switch_time_s if (state.red and spat is not None) else np.nan
    if state.red and spat is None:
        raise ValueError("a prediction is required while the light is red")
    cu = np.empty(K.MAX_CANDIDATES)
    cd = np.empty(K.MAX_CANDIDATES)
    kind, val, forced, n, _pick = K.select_control(
        s.position_m, s.speed_mps, s.time_s, s.accel_mps2, cur_kind, cur_val,
        state.after_emergency, state.red, t_pred, thr, brk, p, c, cu, cd)
    cands: tuple[Control, ...] = ()
    if n:
        cx, cvn, ca, cv, ck = _scratch()
        K.candidates(s.position_m, s.speed_mps, s.accel_mps2, state.after_emergency, state.red,
                     thr, brk, p, c, ck, cv, cx, cvn, ca)
        cands = tuple(Control(ControlKind(int(ck[i])), float(cv[i])) for i in range(n))
    return Decision(Control(ControlKind(int(kind)), float(val)), bool(forced), cands,
                    tuple(float(x) for x in cu[:n]), tuple(float(x) for x in cd[:n]))


def next_control(state: PlanState, spat: SpatSample | None, config: OptimizerConfig,
                 vehicle: VehicleParams, road: RoadParams) -> Control:
    """The control the planner applies from ``state``.

    Forced braking wins; otherwise the least U + D on red (least D on green).
    Ties go to the control nearest the current one, then to the lower
    resulting acceleration. If no upstream hold is feasible the strongest
    admissible deceleration is used.
    """
    return decide(state, spat, config, vehicle, road).control


def plan_trajectory(timing: SignalTiming, stream: SpatStream | None, v0_mps: float,
                    config: OptimizerConfig, vehicle: VehicleParams,
                    road: RoadParams) -> Trajectory:
    """Plan the full approach from the range edge to the course end.

    ``stream`` supplies the prediction for every step (None means exact
    information). Raises PlanningError, carrying the partial trajectory, if
    the course end is not reached within ``config.max_steps``.
    """
    n = config.max_steps
    if stream is None:
        preds = np.full(n, float(timing.true_switch_time_s))
    else:
        preds = np.asarray(stream.predicted_switch_time_s, dtype=float)
        if preds.shape[0] < n:
            preds = np.concatenate([preds, np.full(n - preds.shape[0], timing.true_switch_time_s)])
    t_switch = timing.true_switch_time_s if timing.red_at_start else 0.0
    thr, brk = config.grids()
    m = n + 1
    t, x, v, a = (np.empty(m) for _ in range(4))
    kind = np.empty(m, dtype=np.int64)
    val, pred, u, d, fuel = (np.empty(m) for _ in range(5))
    forced = np.empty(m, dtype=np.bool_)
    count, capped = K.plan(float(v0_mps), float(t_switch), preds, thr, brk,
                           pack(vehicle, road), config.packed(), n,
                           t, x, v, a, kind, val, forced, pred, u, d, fuel)
    traj = Trajectory(t=t[:count], x=x[:count], v=v[:count], a=a[:count],
                      control_kind=kind[:count], control_value=val[:count],
                      fuel_rate=fuel[:count], predicted=pred[:count], forced=forced[:count],
                      upstream_cost=u[:count], downstream_cost=d[:count])
    traj.meta.update(v0=float(v0_mps), switch_time=float(t_switch))
    if capped:
        raise PlanningError(f"course end not reached within {n} steps", traj)
    return traj


def plan_state_at(traj: Trajectory, k: int, timing: SignalTiming,
                  stream: SpatStream | None = None) -> PlanState:
    """Reconstruct the planner state at row ``k`` of a planned trajectory."""
    states = list(traj.states())
    s = states[k]
    red = timing.is_red(s.time_s)
    upstream_x = s.position_m
    if not red:
        before = [st.position_m for st in states if timing.is_red(st.time_s)]
        upstream_x = before[-1] if before else 0.0
    spat = None
    if red:
        p = timing.true_switch_time_s if stream is None else float(stream.predicted_switch_time_s[k])
        spat = SpatSample(s.time_s, p, 0.0, 0.0)
    return PlanState(s, spat, Phase.UPSTREAM if red else Phase.DOWNSTREAM, upstream_x,
                     bool(traj.forced[k]) if k > 0 else False)


__all__ = [
    "OptimizerConfig", "Phase", "PlanState", "PlanningError", "SectionCost", "Decision",
    "critical_stopping_distance", "risk_check", "admissible_controls", "two_section_cost",
    "decide", "next_control", "plan_trajectory", "plan_state_at",
]
