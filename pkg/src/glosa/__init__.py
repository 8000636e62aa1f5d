"""Fuel-optimal approach planning at a signalized intersection with
uncertain switching-time predictions."""

__version__ = "0.1.0"

from .vehicle import Control, ControlKind, RoadParams, VehicleParams, VehicleState
from .fuel import fuel_rate, trajectory_fuel
from .spat import PredictionModel, SignalTiming, SpatStream, prediction_stream
from .optimizer import OptimizerConfig, PlanningError, plan_trajectory
from .baseline import BaselineParams, baseline_trajectory, fuel_savings
from .trajectory import Trajectory
from .harness import (ScenarioKind, ScenarioSpec, RunResult, SweepGrid, run_scenario,
                      sensitivity_sweep, savings_proportion_surface, run_matrix)

__all__ = [
    "Control", "ControlKind", "RoadParams", "VehicleParams", "VehicleState",
    "fuel_rate", "trajectory_fuel",
    "PredictionModel", "SignalTiming", "SpatStream", "prediction_stream",
    "OptimizerConfig", "PlanningError", "plan_trajectory",
    "BaselineParams", "baseline_trajectory", "fuel_savings", "Trajectory",
    "ScenarioKind", "ScenarioSpec", "RunResult", "SweepGrid", "run_scenario",
    "sensitivity_sweep", "savings_proportion_surface", "run_matrix",
]
