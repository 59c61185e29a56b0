"""CSV writers for visit logs, cumulative curves and metric tables.

Times are written in seconds with three decimals; files use ``\\n`` newlines
and a fixed column order so they diff cleanly across platforms.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .domain import PolicyKind
from .engine import SimulationOutput
from .experiments import METRIC_FIELDS, SweepCell

VISIT_COLUMNS = [
    "iteration", "run", "bus", "unit", "cycle", "stop", "arrival_s", "departure_s",
    "served", "split_here", "load_arr", "wish_alight", "alight", "wish_board", "board",
    "headway_arr_s", "headway_dep_s", "capacity",
]
CURVE_COLUMNS = ["curve", "time_s", "count"]
METRIC_COLUMNS = ["policy", "eta", "demand", "N", "H_s", "iterations"] + [
    f"{name}_{stat}" for name in METRIC_FIELDS for stat in ("mean", "std")]


def _t(x: float) -> str:
    return f"{x:.3f}"


def _num(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.6g}"


def _writer(handle):
    return csv.writer(handle, lineterminator="\n")


def emit_visits(output: SimulationOutput, path, iteration: int = 0) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = _writer(fh)
        w.writerow(VISIT_COLUMNS)
        for v in output.visits:
            w.writerow([
                iteration, v.entity.run, v.bus, v.entity.label, v.cycle, v.stop,
                _t(v.arrival), _t(v.departure), int(v.served), int(v.split_here),
                v.load, v.wish_alight, v.alight, v.wish_board, v.board,
                _t(v.headway_arr), _t(v.headway_dep), v.capacity,
            ])
    return path


def step_points(times: np.ndarray, offset: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints of a counting curve: unique event times and the count after each."""
    times = np.sort(np.asarray(times, dtype=float))
    if times.size == 0:
        return times, np.empty(0, dtype=int)
    uniq, idx = np.unique(times, return_index=True)
    counts = np.append(idx[1:], times.size)
    return uniq, counts + offset


def _difference_series(plus: np.ndarray, minus: np.ndarray, offset: int = 0):
    grid = np.union1d(plus, minus)
    value = (np.searchsorted(np.sort(plus), grid, side="right")
             - np.searchsorted(np.sort(minus), grid, side="right") + offset)
    return grid, value


def emit_curves(output: SimulationOutput, path) -> Path:
    """Cumulative passenger curves plus the waiting / on-board count series.

    The walk-back departure curve is only written when riders were carried
    past a skipped stop.
    """
    c = output.curves
    # round first so breakpoints stay distinct at the written precision
    arr, brd, alt, ext = (np.round(x, 3) for x in (c.arrivals, c.boardings, c.alightings, c.exits))
    series = [
        ("arrivals", *step_points(arr)),
        ("boardings", *step_points(brd)),
        ("alightings", *step_points(alt)),
    ]
    if output.policy.kind is PolicyKind.STOP_SKIPPING and len(c.walk_ends):
        series.append(("walk_departures", *step_points(ext)))
    series.append(("waiting", *_difference_series(arr, brd)))
    series.append(("on_board", *_difference_series(brd, alt, c.initial_onboard)))

    path = Path(path)
    with path.open("w", newline="") as fh:
        w = _writer(fh)
        w.writerow(CURVE_COLUMNS)
        for name, times, counts in series:
            for t, n in zip(times, counts):
                w.writerow([name, _t(t), int(n)])
    return path


def emit_metrics(cells: list[SweepCell], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = _writer(fh)
        w.writerow(METRIC_COLUMNS)
        for cell in cells:
            row = [cell.policy.value, _num(cell.eta), _num(cell.demand), cell.fleet_size,
                   _t(cell.target_headway) if not math.isnan(cell.target_headway) else "nan",
                   cell.iterations]
            for name in METRIC_FIELDS:
                row += [_num(cell.mean.get(name, math.nan)), _num(cell.std.get(name, math.nan))]
            w.writerow(row)
    return path
