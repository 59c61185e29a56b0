"""Monte Carlo harness: repeated seeded runs, aggregation and parameter sweeps."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .domain import (InfeasibleFleetError, LineParameters, PolicyKind, PolicySpec,
                     fleet_size, sample_line, target_headway)
from .engine import simulate
from .metrics import MetricsReport, compute_metrics
from .rng import SubstreamRNG

log = logging.getLogger(__name__)

METRIC_FIELDS = MetricsReport.field_names()


class EmptyCellError(RuntimeError):
    """Every iteration of a cell produced undefined metrics."""


@dataclass
class SweepCell:
    policy: PolicyKind
    eta: float
    demand: float
    fleet_size: int
    target_headway: float
    iterations: int
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)
    undefined: dict[str, int] = field(default_factory=dict)
    values: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    error: str | None = None

    def stderr(self, name: str) -> float:
        n = self.iterations - self.undefined.get(name, 0)
        return self.std[name] / math.sqrt(n) if n > 0 else math.nan


def run_iteration(params: LineParameters, iteration: int) -> MetricsReport:
    """One independent replication; the seed is ``(master_seed, iteration)``."""
    rng = SubstreamRNG(params.master_seed, iteration)
    line_rng = SubstreamRNG(params.master_seed, 0).line() if params.freeze_line else rng.line()
    instance = sample_line(params, line_rng)
    return compute_metrics(simulate(instance, params.policy, rng))


def _run_indexed(args):
    params, i = args
    return i, run_iteration(params, i)


def aggregate(params: LineParameters, reports: list[MetricsReport]) -> SweepCell:
    n = fleet_size(params)
    cell = SweepCell(
        policy=params.policy.kind, eta=params.policy.threshold, demand=params.hourly_demand,
        fleet_size=n, target_headway=target_headway(params, n), iterations=len(reports))
    all_undefined = True
    for name in METRIC_FIELDS:
        vals = np.array([float(getattr(r, name)) for r in reports])
        ok = vals[~np.isnan(vals)]
        cell.values[name] = vals
        cell.undefined[name] = int(len(vals) - len(ok))
        cell.mean[name] = float(ok.mean()) if len(ok) else math.nan
        cell.std[name] = float(ok.std()) if len(ok) else math.nan
        if name == "avg_cost" and len(ok):
            all_undefined = False
    if all_undefined:
        raise EmptyCellError("no iteration produced a defined travel cost")
    return cell


def run_iterations(params: LineParameters, n_iter: int | None = None,
                   master_seed: int | None = None, workers: int = 1) -> SweepCell:
    """Replicate ``params`` ``n_iter`` times and aggregate mean/std per metric.

    Results are sorted by iteration index before aggregation, so the cell is
    identical whatever the worker count or completion order.
    """
    if n_iter is not None:
        params = replace(params, iteration_count=n_iter)
    if master_seed is not None:
        params = replace(params, master_seed=master_seed)
    jobs = [(params, i) for i in range(params.iteration_count)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_indexed, jobs, chunksize=8))
    else:
        results = [_run_indexed(job) for job in jobs]
    results.sort(key=lambda item: item[0])
    return aggregate(params, [r for _, r in results])


def _cell_or_error(params: LineParameters, workers: int) -> SweepCell:
    try:
        return run_iterations(params, workers=workers)
    except (InfeasibleFleetError, EmptyCellError) as exc:
        log.warning("cell %s eta=%s demand=%s failed: %s", params.policy.kind.value,
                    params.policy.threshold, params.hourly_demand, exc)
        return SweepCell(policy=params.policy.kind, eta=params.policy.threshold,
                         demand=params.hourly_demand, fleet_size=0,
                         target_headway=math.nan, iterations=0, error=str(exc))


def demand_sweep(base: LineParameters, demands, eta: float | None = None,
                 workers: int = 1) -> list[SweepCell]:
    """All three policies at every demand level; N and H are re-derived per level."""
    eta = base.policy.threshold if eta is None else eta
    cells = []
    for demand in demands:
        for kind in PolicyKind:
            params = replace(base, hourly_demand=float(demand), policy=PolicySpec(kind, eta))
            cells.append(_cell_or_error(params, workers))
    return cells


def threshold_sweep(base: LineParameters, thresholds, demand: float | None = None,
                    workers: int = 1) -> list[SweepCell]:
    """One no-control reference cell plus both control policies at every threshold."""
    demand = base.hourly_demand if demand is None else float(demand)
    base = replace(base, hourly_demand=demand)
    cells = [_cell_or_error(replace(base, policy=PolicySpec(PolicyKind.NO_CONTROL,
                                                            base.policy.threshold)), workers)]
    for kind in (PolicyKind.STOP_SKIPPING, PolicyKind.BUS_SPLITTING):
        for eta in thresholds:
            cells.append(_cell_or_error(replace(base, policy=PolicySpec(kind, float(eta))), workers))
    return cells
