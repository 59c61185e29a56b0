"""Discrete-event simulation of bus bunching control with stop-skipping and modular bus-splitting."""

from .domain import (LineInstance, LineParameters, PolicyKind, PolicySpec, fleet_size,
                     min_fleet, sample_line, target_headway)
from .engine import SimulationOutput, simulate
from .experiments import SweepCell, demand_sweep, run_iterations, threshold_sweep
from .metrics import MetricsReport, compute_metrics
from .rng import SubstreamRNG

__all__ = [
    "LineInstance", "LineParameters", "MetricsReport", "PolicyKind", "PolicySpec",
    "SimulationOutput", "SubstreamRNG", "SweepCell", "compute_metrics", "demand_sweep",
    "fleet_size", "min_fleet", "run_iterations", "sample_line", "simulate",
    "target_headway", "threshold_sweep",
]
