import math
from dataclasses import replace

import numpy as np
import pytest

from bussplit.domain import (ConfigurationError, InfeasibleFleetError, LineParameters,
                             PolicyKind, PolicySpec, fleet_size, initial_conditions,
                             mean_alight_probability, min_fleet, sample_line, target_headway)
from bussplit.rng import SubstreamRNG

# demand (pax/h), N and H (min) as published in the fleet table
FLEET_TABLE = [
    (250, 2, 20.3), (500, 4, 10.1), (750, 6, 6.8), (1000, 8, 5.1), (1250, 10, 4.1),
    (1500, 12, 3.4), (1750, 14, 2.9), (2000, 16, 2.5), (2250, 18, 2.3), (2500, 20, 2.0),
]


def _oracle_headway(demand, n, S=20, d=400.0, v=20 / 3.6, a=3.0, b=4.0, E=20.0):
    # cycle identity: N*H = S*(tc + E) + S*(a+b)*lam*H, solved by hand for H
    lam = demand / 3600 / S
    return S * (d / v + E) / (n - S * (a + b) * lam)


@pytest.mark.parametrize("S, expected", [(20, 0.1), (2, 1.0), (40, 0.05)])
def test_mean_alight_probability(S, expected):
    assert mean_alight_probability(S) == pytest.approx(expected)


def test_mean_alight_probability_rejects_single_stop():
    with pytest.raises(ConfigurationError):
        mean_alight_probability(1)


@pytest.mark.parametrize("demand, expected", [(1500, 7.708333), (250, 1.284722)])
def test_min_fleet_hand_values(demand, expected):
    assert min_fleet(LineParameters(hourly_demand=demand)) == pytest.approx(expected, abs=1e-5)


def test_min_fleet_vanishes_without_demand():
    assert min_fleet(LineParameters(hourly_demand=0.0)) == 0.0


@pytest.mark.parametrize("demand, n, h_min", FLEET_TABLE)
def test_fleet_table_rows(demand, n, h_min):
    params = LineParameters(hourly_demand=demand)
    assert fleet_size(params) == n
    h = target_headway(params, n)
    assert h == pytest.approx(_oracle_headway(demand, n), rel=1e-12)
    assert abs(h / 60 - h_min) <= 0.05


def test_operating_point_at_1500():
    params = LineParameters(hourly_demand=1500)
    n = fleet_size(params)
    h = target_headway(params, n)
    assert h == pytest.approx(202.5688, abs=1e-3)
    assert n * h / 60 == pytest.approx(40.5, abs=0.05)
    assert params.stop_count * params.mean_rate * h / 2 == pytest.approx(42.2, abs=0.05)


@pytest.mark.parametrize("demand", [250, 1000, 1500, 2500])
def test_headway_satisfies_cycle_equation(demand):
    p = LineParameters(hourly_demand=demand)
    n = fleet_size(p)
    h = target_headway(p, n)
    cycle = (p.mean_cruise + (p.alight_time + p.board_time) * p.mean_rate * h
             + p.fixed_stop_loss) * p.stop_count
    assert cycle == pytest.approx(n * h, rel=1e-9)
    # capacity inequality with the recomputed cycle time
    assert n >= p.stop_count * p.mean_rate * n * h / (2 * p.bus_capacity)


def test_headway_without_demand():
    p = LineParameters(hourly_demand=0.0)
    assert target_headway(p, 5) == pytest.approx((72 + 20) * 20 / 5)


def test_infeasible_fleet():
    with pytest.raises(InfeasibleFleetError):
        target_headway(LineParameters(hourly_demand=1500), 2)


@pytest.mark.parametrize("key, value", [
    ("stop_count", 1), ("bus_capacity", 81), ("bus_capacity", 0), ("fleet_multiplier", 1.0),
    ("cruise_speed", 0.0), ("board_time", -1.0), ("wait_weight", 0.5), ("walk_weight", 0.9),
    ("noise_shape", 0.0), ("noise_scale_fraction", 0.5), ("hourly_demand", -1.0),
])
def test_parameter_validation_names_key(key, value):
    with pytest.raises(ConfigurationError) as info:
        LineParameters(**{key: value})
    assert info.value.key == key


def test_policy_threshold_must_be_positive():
    with pytest.raises(ConfigurationError):
        PolicySpec(PolicyKind.BUS_SPLITTING, 0.0)
    PolicySpec(PolicyKind.NO_CONTROL, 0.0)


def test_homogeneous_line_without_heterogeneity():
    p = LineParameters(heterogeneity_cv=0.0)
    inst = sample_line(p, np.random.default_rng(1))
    assert np.all(inst.spacing == 400.0)
    assert np.allclose(inst.rates, 1500 / 72000)
    assert np.allclose(inst.alight_probs, 0.1)
    assert np.allclose(inst.expected_cruise, 72.0)
    assert inst.fleet_size == 12
    assert inst.cycle_time == pytest.approx(12 * inst.target_headway)


def test_sample_line_is_deterministic():
    p = LineParameters()
    a = sample_line(p, SubstreamRNG(9, 4).line())
    b = sample_line(p, SubstreamRNG(9, 4).line())
    for name in ("spacing", "rates", "alight_probs"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_sample_line_spread():
    p = LineParameters()
    rng = np.random.default_rng(7)
    draws = np.array([sample_line(p, rng).spacing for _ in range(400)])
    inside = np.mean(np.abs(draws - 400) <= 1.96 * 40)
    assert 0.93 <= inside <= 0.97
    assert np.all(draws > 0)


def test_truncation_keeps_probabilities_valid():
    p = LineParameters(stop_count=2, heterogeneity_cv=0.5)
    inst = sample_line(p, np.random.default_rng(0))
    assert np.all((inst.alight_probs > 0) & (inst.alight_probs <= 1))


def test_initial_conditions():
    inst = sample_line(LineParameters(heterogeneity_cv=0.0), np.random.default_rng(0))
    loads, starts = initial_conditions(inst)
    assert np.all(loads == 42)
    assert starts[0] == 0.0
    assert starts[-1] == pytest.approx(11 * 202.5688, abs=1e-2)
    assert np.allclose(np.diff(starts), inst.target_headway)


def test_initial_conditions_single_bus_and_no_load():
    p = LineParameters(hourly_demand=0.0, fleet_override=1)
    inst = sample_line(p, np.random.default_rng(0))
    loads, starts = initial_conditions(inst)
    assert list(loads) == [0] and list(starts) == [0.0]


def test_unit_capacity_is_half():
    assert LineParameters(bus_capacity=80).unit_capacity == 40
    assert replace(LineParameters(), bus_capacity=10).unit_capacity == 5
    assert math.isclose(LineParameters().mean_rate, 1500 / 72000)
