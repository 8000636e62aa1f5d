"""Uninformed-driver reference trajectories and fuel-savings percentages.

The driver has no switching-time information. It cruises, brakes
comfortably to a stop short of the bar when the light is red, idles, and
after a reaction delay re-accelerates to the desired speed. Every change of
acceleration is slew-limited to the comfort jerk bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .fuel import trajectory_fuel
from .optimizer import OptimizerConfig
from .spat import SignalTiming
from .trajectory import Trajectory
from .vehicle import RoadParams, VehicleParams, pack


@dataclass(frozen=True)
class BaselineParams:
    comfort_decel_mps2: float = -2.0
    accel_throttle: float = 0.6
    reaction_time_s: float = 1.0
    # the driver aims to halt this far before the bar
    stop_margin_m: float = 2.0

    def violations(self) -> list[str]:
        out = []
        if not self.comfort_decel_mps2 < 0:
            out.append("BaselineParams.comfort_decel_mps2 < 0")
        if not 0 < self.accel_throttle <= 1:
            out.append("BaselineParams.accel_throttle in (0, 1]")
        if not self.reaction_time_s >= 0:
            out.append("BaselineParams.reaction_time_s >= 0")
        if not self.stop_margin_m >= 0:
            out.append("BaselineParams.stop_margin_m >= 0")
        return out


def _braking_distance(v: float, decel: float, jerk: float) -> float:
    """Distance to stop from ``v`` when the deceleration ramps in at ``jerk``."""
    d = abs(decel)
    return v * v / (2.0 * d) + v * d / (2.0 * jerk)


def _ramp_cap(gap: float, slew: float, dt: float) -> float:
    """Largest acceleration that can be wound down to zero in ``slew``-sized
    steps while changing the speed by no more than ``gap``."""
    if gap <= 0.0:
        return 0.0

    def gain(a: float) -> float:
        n = int(a / slew)
        return dt * ((n + 1) * a - slew * n * (n + 1) / 2.0)

    lo, hi = 0.0, slew
    while gain(hi) <= gap:
        lo, hi = hi, 2.0 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if gain(mid) <= gap:
            lo = mid
        else:
            hi = mid
    return lo


def _realize(a_target: float, a_lo: float, a_hi: float, v: float, f_max: float,
             p: np.ndarray) -> tuple[int, float]:
    """Pick a control whose acceleration is as close to ``a_target`` as the
    slew window [a_lo, a_hi] and the reachable set allow."""
    a_coast = K.raw_accel(K.THROTTLE, 0.0, v, p)
    a_top = K.raw_accel(K.THROTTLE, f_max, v, p)
    a = min(max(a_target, a_lo), a_hi)
    if a >= a_coast:
        if a >= a_top:
            return K.THROTTLE, f_max
        f = K.throttle_for_accel(a, v, p)
        return K.THROTTLE, (f_max if f < 0 else f)
    if a <= 0.0:
        return K.BRAKE, max(a, -6.0)
    # downhill gap (0, a_coast): neither braking nor throttle reaches it, so
    # take the nearer edge, preferring one inside the slew window
    edges = [(K.BRAKE, 0.0, 0.0), (K.THROTTLE, 0.0, a_coast)]
    inside = [e for e in edges if a_lo - K.EPS <= e[2] <= a_hi + K.EPS] or edges
    kind, value, _ = min(inside, key=lambda e: abs(e[2] - a))
    return kind, value


def baseline_trajectory(timing: SignalTiming, v0_mps: float, vehicle: VehicleParams,
                        road: RoadParams, config: OptimizerConfig | None = None,
                        params: BaselineParams | None = None) -> Trajectory:
    config = config or OptimizerConfig()
    params = params or BaselineParams()
    p = pack(vehicle, road)
    dt, jerk = config.dt_s, config.jerk_limit_mps3
    slew = jerk * dt
    x_bar = config.upstream_length_m
    x_stop = x_bar - params.stop_margin_m
    x_end = config.course_length_m
    v_des = min(config.desired_exit_speed_mps, road.speed_limit_mps)
    t_switch = timing.true_switch_time_s if timing.red_at_start else 0.0

    t, x, v, a = 0.0, 0.0, float(v0_mps), 0.0
    rows = [(t, x, v, a, -1, np.nan, np.nan)]
    braking = False
    t_go = None
    for _ in range(config.max_steps):
        if x >= x_end:
            break
        red = t < t_switch - K.EPS
        if not red and t_go is None:
            # a driver already slowing for the light reacts with a delay
            t_go = t + params.reaction_time_s if braking else t
        v_cruise = v0_mps if t_go is None else v_des
        if red and not braking and x_stop - x <= _braking_distance(v, params.comfort_decel_mps2, jerk):
            braking = True
        if braking and (t_go is None or t < t_go):
            rem = x_stop - x
            # taper so the deceleration reaches zero together with the speed
            soft = -_ramp_cap(v, slew, dt)
            if v <= 0.0:
                a_tgt = 0.0
            elif rem <= 0.0:
                a_tgt = soft
            else:
                a_tgt = max(-v * v / (2.0 * rem), soft)
        else:
            gap = v_cruise - v
            a_tgt = _ramp_cap(gap, slew, dt) if gap > 0 else -_ramp_cap(-gap, slew, dt)
        kind, value = _realize(a_tgt, a - slew, a + slew, v, params.accel_throttle, p)
        r = K.resistance(v, p)
        xn, vn, an = K.step(x, v, kind, value, dt, p)
        rate = K.fuel_rate(K.power(v, an, r, p), p)
        t, x, v, a = t + dt, xn, vn, an
        rows.append((t, x, v, a, kind, value, rate))
    else:
        if x < x_end:
            raise RuntimeError(f"baseline did not reach the course end within {config.max_steps} steps")

    arr = np.array(rows, dtype=float)
    n = arr.shape[0]
    traj = Trajectory(
        t=arr[:, 0].copy(), x=arr[:, 1].copy(), v=arr[:, 2].copy(), a=arr[:, 3].copy(),
        control_kind=arr[:, 4].astype(np.int64), control_value=arr[:, 5].copy(),
        fuel_rate=np.nan_to_num(arr[:, 6], nan=0.0), predicted=np.full(n, np.nan),
        forced=np.zeros(n, dtype=bool),
    )
    traj.meta.update(v0=float(v0_mps), switch_time=float(t_switch), driver="uninformed")
    return traj


def fuel_savings(optimized: Trajectory, base: Trajectory, vehicle: VehicleParams,
                 road: RoadParams, until_m: float | None = None) -> float:
    """Percent of the reference fuel saved; negative when the reference wins."""
    fb = trajectory_fuel(base, vehicle, road, until_m)
    fo = trajectory_fuel(optimized, vehicle, road, until_m)
    if fb <= 0:
        raise ValueError("reference trajectory burns no fuel")
    return 100.0 * (fb - fo) / fb
