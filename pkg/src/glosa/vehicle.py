"""Light-duty longitudinal vehicle dynamics.

Forces follow the Rakha power-limited model: speeds enter the force terms in
km/h, engine power in kW, forces come out in newtons. State is SI.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping

import numpy as np

from . import kernels as K

GRAVITY = 9.8066
MAX_BRAKE = -6.0


@dataclass(frozen=True)
class VehicleParams:
    mass_kg: float
    driveline_efficiency: float
    gear_factor: float
    max_power_kW: float
    frontal_area_m2: float
    drag_coeff: float
    altitude_factor: float
    air_density_kg_m3: float
    rolling_c0: float
    rolling_c1: float
    rolling_c2: float
    tractive_mass_fraction: float
    friction_coeff: float
    fuel_alpha0: float
    fuel_alpha1: float
    fuel_alpha2: float
    speed_floor_kmh: float = 5.0

    @classmethod
    def cadillac_srx_2014(cls, **overrides: float) -> "VehicleParams":
        """Calibrated 2014 Cadillac SRX constants.

        ``friction_coeff`` (0.6, dry asphalt) and ``gear_factor`` (1.0) are
        not part of the calibration table and are supplied here.
        """
        base = cls(
            mass_kg=2388.0,
            driveline_efficiency=0.92,
            gear_factor=1.0,
            max_power_kW=229.7,
            frontal_area_m2=3.33,
            drag_coeff=0.39,
            altitude_factor=0.95,
            air_density_kg_m3=1.2256,
            rolling_c0=1.75,
            rolling_c1=0.0328,
            rolling_c2=4.55,
            tractive_mass_fraction=0.54,
            friction_coeff=0.6,
            fuel_alpha0=7.89e-4,
            fuel_alpha1=-5.77e-19,
            fuel_alpha2=2.27e-6,
        )
        return replace(base, **overrides) if overrides else base

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "VehicleParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown vehicle parameter(s): {sorted(unknown)}")
        return cls.cadillac_srx_2014(**{k: float(v) for k, v in data.items()})

    def violations(self) -> list[str]:
        out = []
        if not self.mass_kg > 0:
            out.append("VehicleParams.mass_kg > 0")
        if not 0 < self.driveline_efficiency <= 1:
            out.append("VehicleParams.driveline_efficiency in (0, 1]")
        if not 0 < self.tractive_mass_fraction <= 1:
            out.append("VehicleParams.tractive_mass_fraction in (0, 1]")
        if not self.max_power_kW > 0:
            out.append("VehicleParams.max_power_kW > 0")
        if not self.friction_coeff > 0:
            out.append("VehicleParams.friction_coeff > 0")
        if not self.fuel_alpha0 > 0:
            out.append("VehicleParams.fuel_alpha0 > 0")
        if not self.speed_floor_kmh > 0:
            out.append("VehicleParams.speed_floor_kmh > 0")
        return out


@dataclass(frozen=True)
class RoadParams:
    grade: float = 0.0
    speed_limit_mps: float = 17.88
    gravity_mps2: float = GRAVITY

    def violations(self) -> list[str]:
        out = []
        if not abs(self.grade) < 0.2:
            out.append("RoadParams.grade: |grade| < 0.2")
        if not self.speed_limit_mps > 0:
            out.append("RoadParams.speed_limit_mps > 0")
        return out


def pack(vehicle: VehicleParams, road: RoadParams) -> np.ndarray:
    """Flatten parameters into the vector layout the kernels expect."""
    p = np.empty(K.N_P)
    p[K.M] = vehicle.mass_kg
    p[K.ETA] = vehicle.driveline_efficiency
    p[K.BETA] = vehicle.gear_factor
    p[K.PMAX] = vehicle.max_power_kW
    p[K.AF] = vehicle.frontal_area_m2
    p[K.CD] = vehicle.drag_coeff
    p[K.CH] = vehicle.altitude_factor
    p[K.RHO] = vehicle.air_density_kg_m3
    p[K.CR0] = vehicle.rolling_c0
    p[K.CR1] = vehicle.rolling_c1
    p[K.CR2] = vehicle.rolling_c2
    p[K.MTA] = vehicle.tractive_mass_fraction
    p[K.MU] = vehicle.friction_coeff
    p[K.A0] = vehicle.fuel_alpha0
    p[K.A1] = vehicle.fuel_alpha1
    p[K.A2] = vehicle.fuel_alpha2
    p[K.G] = road.gravity_mps2
    p[K.GRADE] = road.grade
    p[K.VLIM] = road.speed_limit_mps
    p[K.VFLOOR] = vehicle.speed_floor_kmh
    return p


class ControlKind(enum.IntEnum):
    THROTTLE = K.THROTTLE
    BRAKE = K.BRAKE


@dataclass(frozen=True)
class Control:
    """Throttle fraction in [0, 1] or commanded deceleration in [-6, 0] m/s^2."""

    kind: ControlKind
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ControlKind(self.kind))
        if self.kind is ControlKind.THROTTLE and not 0.0 <= self.value <= 1.0:
            raise ValueError(f"throttle {self.value} outside [0, 1]")
        if self.kind is ControlKind.BRAKE and not MAX_BRAKE <= self.value <= 0.0:
            raise ValueError(f"brake {self.value} outside [{MAX_BRAKE}, 0]")

    @classmethod
    def throttle(cls, f: float) -> "Control":
        return cls(ControlKind.THROTTLE, float(f))

    @classmethod
    def brake(cls, decel: float) -> "Control":
        return cls(ControlKind.BRAKE, float(decel))

    def __str__(self) -> str:
        return f"{self.kind.name.lower()}({self.value:.4g})"


COAST = Control.throttle(0.0)


@dataclass(frozen=True)
class VehicleState:
    time_s: float
    position_m: float
    speed_mps: float
    accel_mps2: float = 0.0
    control: Control | None = field(default=None)


def resistance_force(speed_mps: float, vehicle: VehicleParams, road: RoadParams) -> float:
    """Aerodynamic + rolling + grade resistance in N."""
    if speed_mps < 0:
        raise ValueError("speed must be non-negative")
    return float(K.resistance(float(speed_mps), pack(vehicle, road)))


def tractive_force(control: Control, speed_mps: float, vehicle: VehicleParams,
                   road: RoadParams | None = None) -> float:
    """Engine force for a throttle command, capped by tyre adhesion.

    Below ``vehicle.speed_floor_kmh`` the engine term is evaluated at the
    floor; the adhesion cap governs there anyway.
    """
    if control.kind is not ControlKind.THROTTLE:
        raise ValueError("tractive force is defined for throttle controls only")
    return float(K.tractive(control.value, float(speed_mps), pack(vehicle, road or RoadParams())))


def step_dynamics(state: VehicleState, control: Control, dt_s: float,
                  vehicle: VehicleParams, road: RoadParams) -> VehicleState:
    """Advance one step.

    Throttle gives a = (F - R)/m, braking commands the deceleration directly.
    Speed is clamped to [0, speed limit] and position integrates the mean of
    the old and new speeds. The returned ``accel_mps2`` is the effective value
    (v' - v)/dt, which differs from the command only when a clamp bites.
    """
    if dt_s <= 0:
        raise ValueError("dt_s must be positive")
    x, v, a = K.step(state.position_m, state.speed_mps, int(control.kind), control.value,
                     dt_s, pack(vehicle, road))
    return VehicleState(state.time_s + dt_s, float(x), float(v), float(a), control)


def commanded_accel(control: Control, speed_mps: float, vehicle: VehicleParams,
                    road: RoadParams) -> float:
    return float(K.raw_accel(int(control.kind), control.value, float(speed_mps), pack(vehicle, road)))


def throttle_for_accel(accel_mps2: float, speed_mps: float, vehicle: VehicleParams,
                       road: RoadParams) -> float | None:
    """Throttle fraction producing ``accel_mps2``, or None when out of reach."""
    f = K.throttle_for_accel(float(accel_mps2), float(speed_mps), pack(vehicle, road))
    return None if f < 0 else float(f)
