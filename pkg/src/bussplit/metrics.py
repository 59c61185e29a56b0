"""Passenger-cost and service-regularity metrics for one simulation run.

Average times come from the areas between cumulative passenger curves,
clipped to the evaluation window. All reported times are in minutes.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, fields

import numpy as np

from .engine import PassengerCurves, SimulationOutput


class UndefinedMetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    avg_wait: float
    avg_in_vehicle: float
    avg_walk: float
    avg_cost: float
    expected_cost: float
    overhead: float
    mape_all: float
    mape_served: float
    avg_cycle: float
    avg_load: float
    frac_full: float
    n_arrived: int
    n_boarded: int
    n_alighted: int
    control_actions: int
    cap_bindings: int
    oversaturated: bool

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict:
        return asdict(self)


def _area(times: np.ndarray, t0: float, t1: float) -> float:
    """Integral over [t0, t1] of the counting function of ``times``."""
    times = np.asarray(times, dtype=float)
    times = times[times <= t1]
    return float(np.sum(t1 - np.maximum(times, t0)))


def _count(times: np.ndarray, t0: float, t1: float) -> int:
    times = np.asarray(times, dtype=float)
    return int(np.count_nonzero((times >= t0) & (times <= t1)))


def average_times(curves: PassengerCurves, window: tuple[float, float]) -> tuple[float, float, float]:
    """Average waiting, in-vehicle and walking time (minutes) over ``window``.

    Each is the area between two cumulative curves divided by the mean number
    of events on those curves inside the window. Walking time is averaged over
    all alighting passengers.
    """
    t0, t1 = window
    n_arr = _count(curves.arrivals, t0, t1)
    n_board = _count(curves.boardings, t0, t1)
    n_alight = _count(curves.alightings, t0, t1)
    if n_arr + n_board == 0 or n_board + n_alight == 0:
        raise UndefinedMetricError("no passenger events inside the evaluation window")

    arr_area = _area(curves.arrivals, t0, t1)
    board_area = _area(curves.boardings, t0, t1)
    alight_area = _area(curves.alightings, t0, t1)
    exit_area = _area(curves.exits, t0, t1)

    wait = (arr_area - board_area) / ((n_arr + n_board) / 2)
    onboard = curves.initial_onboard * (t1 - t0) + board_area - alight_area
    in_vehicle = onboard / ((n_board + n_alight) / 2)
    walk = (alight_area - exit_area) / n_alight if n_alight else 0.0
    return wait / 60.0, in_vehicle / 60.0, walk / 60.0


def weighted_cost(wait: float, in_vehicle: float, walk: float,
                  wait_weight: float, walk_weight: float) -> float:
    return wait_weight * wait + in_vehicle + walk_weight * walk


def expected_cost(n_buses: int, headway: float, wait_weight: float) -> float:
    """Cost without stochasticity, in minutes, for a headway given in seconds."""
    return (wait_weight + n_buses) * headway / 2 / 60.0


def bunching_overhead(avg_cost: float, exp_cost: float) -> float:
    if exp_cost <= 0:
        raise ValueError("expected cost must be positive")
    return (avg_cost - exp_cost) / exp_cost * 100.0


def headway_mape(output: SimulationOutput, target: float, mode: str = "all_entities",
                 window: tuple[float, float] | None = None) -> float:
    """MAPE (%) of departing headways from ``target`` inside the window.

    ``all_entities`` counts every bus passage, served or not; ``served_only``
    measures headways between consecutive buses that actually served the stop.
    """
    if mode not in ("all_entities", "served_only"):
        raise ValueError(f"unknown MAPE mode {mode!r}")
    t0, t1 = window or output.eval_window
    by_stop: dict[int, list[float]] = defaultdict(list)
    for dep in output.departures:
        if mode == "served_only" and not dep.served:
            continue
        by_stop[dep.stop].append(dep.time)
    errors = []
    for times in by_stop.values():
        times = np.sort(np.asarray(times))
        gaps = np.diff(times)
        inside = (times[1:] >= t0) & (times[1:] <= t1)
        errors.append(np.abs(gaps[inside] - target) / target)
    errors = np.concatenate(errors) if errors else np.empty(0)
    if errors.size == 0:
        raise UndefinedMetricError("no departing headway inside the evaluation window")
    return float(errors.mean() * 100.0)


def operations_metrics(output: SimulationOutput, window: tuple[float, float] | None = None
                       ) -> tuple[float, float, float]:
    """Average cycle length (min), average load at arrival and fraction of full arrivals.

    Load statistics use serving arrivals only; modular units count separately
    against their own capacity.
    """
    t0, t1 = window or output.eval_window
    durations = []
    for starts in output.cycle_starts.values():
        for a, b in zip(starts, starts[1:]):
            if a <= t1 and b >= t0:
                durations.append(b - a)
    avg_cycle = float(np.mean(durations)) / 60.0 if durations else math.nan

    loads, full = [], 0
    for v in output.visits:
        if v.served and t0 <= v.arrival <= t1:
            loads.append(v.load)
            full += v.load >= v.capacity
    if not loads:
        return avg_cycle, math.nan, math.nan
    return avg_cycle, float(np.mean(loads)), full / len(loads)


def compute_metrics(output: SimulationOutput) -> MetricsReport:
    """Full metric vector; metrics that are undefined for this run are NaN."""
    inst = output.instance
    p = inst.params
    window = output.eval_window
    t0, t1 = window
    try:
        wait, in_veh, walk = average_times(output.curves, window)
        cost = weighted_cost(wait, in_veh, walk, p.wait_weight, p.walk_weight)
    except UndefinedMetricError:
        wait = in_veh = walk = cost = math.nan
    exp = expected_cost(inst.fleet_size, inst.target_headway, p.wait_weight)
    overhead = bunching_overhead(cost, exp) if not math.isnan(cost) else math.nan
    mapes = []
    for mode in ("all_entities", "served_only"):
        try:
            mapes.append(headway_mape(output, inst.target_headway, mode))
        except UndefinedMetricError:
            mapes.append(math.nan)
    avg_cycle, avg_load, frac_full = operations_metrics(output)
    c = output.curves
    n_arr, n_board = _count(c.arrivals, t0, t1), _count(c.boardings, t0, t1)
    return MetricsReport(
        avg_wait=wait, avg_in_vehicle=in_veh, avg_walk=walk, avg_cost=cost,
        expected_cost=exp, overhead=overhead, mape_all=mapes[0], mape_served=mapes[1],
        avg_cycle=avg_cycle, avg_load=avg_load, frac_full=frac_full,
        n_arrived=n_arr, n_boarded=n_board, n_alighted=_count(c.alightings, t0, t1),
        control_actions=output.control_actions, cap_bindings=output.cap_bindings,
        oversaturated=n_arr - n_board > p.bus_capacity,
    )
