"""Power-based instantaneous fuel model (VT-CPFM-1) and trajectory totals.

The quadratic term uses ``fuel_alpha2``; negative power burns the idle rate
``fuel_alpha0``, which also covers standing still.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .trajectory import Trajectory
from .vehicle import RoadParams, VehicleParams, pack


@dataclass(frozen=True)
class FuelRecord:
    power_kW: float
    fuel_rate_Lps: float


def vehicle_power(speed_mps: float, accel_mps2: float, resistance_N: float,
                  vehicle: VehicleParams) -> float:
    """Engine power in kW; negative while the vehicle sheds energy."""
    if speed_mps < 0:
        raise ValueError("speed must be non-negative")
    return float(K.power(float(speed_mps), float(accel_mps2), float(resistance_N),
                         pack(vehicle, RoadParams())))


def fuel_rate(power_kW: float, vehicle: VehicleParams) -> float:
    return float(K.fuel_rate(float(power_kW), pack(vehicle, RoadParams())))


def fuel_record(speed_mps: float, accel_mps2: float, vehicle: VehicleParams,
                road: RoadParams) -> FuelRecord:
    p = pack(vehicle, road)
    pw = K.power(speed_mps, accel_mps2, K.resistance(speed_mps, p), p)
    return FuelRecord(float(pw), float(K.fuel_rate(pw, p)))


def step_fuel_rates(traj: Trajectory, vehicle: VehicleParams, road: RoadParams) -> np.ndarray:
    """Fuel rate of every step, evaluated at the step's starting speed."""
    p = pack(vehicle, road)
    out = np.zeros(len(traj))
    for k in range(1, len(traj)):
        v = float(traj.v[k - 1])
        pw = K.power(v, float(traj.a[k]), K.resistance(v, p), p)
        out[k] = K.fuel_rate(pw, p)
    return out


def trajectory_fuel(traj: Trajectory, vehicle: VehicleParams, road: RoadParams,
                    until_m: float | None = None) -> float:
    """Litres burned over the trajectory.

    Each step contributes rate(v_k, a_{k+1}) * dt. With ``until_m`` the step
    that crosses that position is counted only for the fraction of its
    distance that lies before it, and later steps are dropped; this keeps
    courses of equal length comparable despite the last-step overshoot.
    """
    n = len(traj)
    if n < 2:
        return 0.0
    dt = traj.dt
    rates = step_fuel_rates(traj, vehicle, road)
    total = 0.0
    for k in range(1, n):
        w = 1.0
        if until_m is not None:
            x0, x1 = traj.x[k - 1], traj.x[k]
            if x0 >= until_m:
                break
            if x1 > until_m:
                w = (until_m - x0) / (x1 - x0)
        total += rates[k] * dt * w
    return float(total)
