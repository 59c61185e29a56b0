import math
from dataclasses import replace

import numpy as np
import pytest

from bussplit.domain import LineParameters, PolicyKind, PolicySpec, fleet_size, target_headway
from bussplit.experiments import (METRIC_FIELDS, EmptyCellError, aggregate, demand_sweep,
                                  run_iteration, run_iterations, threshold_sweep)
from bussplit.metrics import MetricsReport

BASE = LineParameters(master_seed=17)


def _same_cells(a, b):
    assert (a.policy, a.eta, a.demand, a.fleet_size, a.iterations) == \
        (b.policy, b.eta, b.demand, b.fleet_size, b.iterations)
    for name in METRIC_FIELDS:
        assert np.array_equal(a.values[name], b.values[name], equal_nan=True)
        assert a.mean[name] == b.mean[name] or (math.isnan(a.mean[name]) and math.isnan(b.mean[name]))


def test_single_iteration_has_zero_spread():
    cell = run_iterations(BASE, n_iter=1)
    assert all(cell.std[k] == 0 for k in METRIC_FIELDS if not math.isnan(cell.std[k]))
    assert cell.iterations == 1


def test_same_seed_same_cell():
    _same_cells(run_iterations(BASE, n_iter=3), run_iterations(BASE, n_iter=3))


def test_worker_pool_matches_serial():
    _same_cells(run_iterations(BASE, n_iter=4, workers=2), run_iterations(BASE, n_iter=4))


def test_seed_changes_results():
    a = run_iterations(BASE, n_iter=2, master_seed=1)
    b = run_iterations(BASE, n_iter=2, master_seed=2)
    assert a.mean["avg_cost"] != b.mean["avg_cost"]


def test_inactive_control_matches_no_control():
    nc = run_iterations(replace(BASE, policy=PolicySpec(PolicyKind.NO_CONTROL)), n_iter=2)
    bs = run_iterations(replace(BASE, policy=PolicySpec(PolicyKind.BUS_SPLITTING, 1e9)), n_iter=2)
    for name in METRIC_FIELDS:
        assert np.array_equal(nc.values[name], bs.values[name], equal_nan=True)


def test_frozen_line_reuses_instance():
    p = replace(BASE, freeze_line=True, noise_scale_fraction=0.0, hourly_demand=0.0)
    a, b = run_iteration(p, 1), run_iteration(p, 5)
    assert a.avg_cycle == b.avg_cycle


def _report(cost):
    values = {name: 0.0 for name in METRIC_FIELDS}
    values.update(avg_cost=cost, oversaturated=False)
    return MetricsReport(**values)


def test_aggregate_skips_undefined_and_is_order_independent():
    reports = [_report(c) for c in (10.0, math.nan, 14.0, 12.0)]
    cell = aggregate(BASE, reports)
    assert cell.undefined["avg_cost"] == 1
    assert cell.mean["avg_cost"] == 12.0
    assert cell.std["avg_cost"] == pytest.approx(np.std([10, 14, 12]))
    assert cell.stderr("avg_cost") == pytest.approx(cell.std["avg_cost"] / math.sqrt(3))
    with pytest.raises(EmptyCellError):
        aggregate(BASE, [_report(math.nan)])


def test_threshold_sweep_layout():
    base = replace(BASE, iteration_count=1)
    cells = threshold_sweep(base, [1.1, 1.3, 1.5, 1.7, 1.9], demand=1500)
    assert len(cells) == 11
    assert cells[0].policy is PolicyKind.NO_CONTROL
    assert [c.policy for c in cells[1:6]] == [PolicyKind.STOP_SKIPPING] * 5
    assert [c.eta for c in cells[6:]] == [1.1, 1.3, 1.5, 1.7, 1.9]
    # the reference cell is the same whichever sweep produced it
    nc = [c for c in demand_sweep(base, [1500]) if c.policy is PolicyKind.NO_CONTROL][0]
    _same_cells(replace(nc, eta=cells[0].eta), cells[0])


def test_demand_sweep_layout():
    base = replace(BASE, iteration_count=1, eval_duration=600.0, warmup_cycles=1)
    demands = [250.0 * k for k in range(1, 11)]
    cells = demand_sweep(base, demands)
    assert len(cells) == 30
    assert [c.fleet_size for c in cells[::3]] == [2, 4, 6, 8, 10, 12, 14, 16, 18, 20]
    for c in cells:
        p = replace(base, hourly_demand=c.demand)
        assert c.fleet_size == fleet_size(p)
        assert c.target_headway == target_headway(p, c.fleet_size)
        assert c.error is None


def test_demand_sweep_continues_past_infeasible_cells():
    base = replace(BASE, iteration_count=1, fleet_override=4)
    cells = demand_sweep(base, [250.0, 2500.0])
    assert [c.error is None for c in cells] == [True] * 3 + [False] * 3
