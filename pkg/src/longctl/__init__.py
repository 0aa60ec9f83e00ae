"""Longitudinal vehicle control toolkit: cruise/car-following controller,
vehicle models, hybrid simulation and linear stability analysis."""

from .config import (BackbonePlantParams, ControllerParams, DisturbanceModel, LeaderProfile,
                     PhysicalPlantParams, ScenarioError, ScenarioEvent, ScenarioSpec,
                     builtin_scenario, load_scenario)
from .controller import ControllerState, Measurement, Variant, controller_step
from .analysis import stability_report
from .sim import Trajectory, compute_metrics, run_simulation, segment_metrics

__version__ = "0.1.0"
