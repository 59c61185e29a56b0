"""Line parameters, line synthesis and the closed-form fleet relations."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Raised for parameter sets that violate a model invariant."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class InfeasibleFleetError(ValueError):
    """The fleet cannot sustain the demand (cycle equation has no positive H)."""


class PolicyKind(str, enum.Enum):
    NO_CONTROL = "no_control"
    STOP_SKIPPING = "stop_skipping"
    BUS_SPLITTING = "bus_splitting"


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind = PolicyKind.NO_CONTROL
    threshold: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.kind is not PolicyKind.NO_CONTROL and not self.threshold > 0:
            raise ConfigurationError("eta", "control threshold must be positive")


@dataclass(frozen=True)
class LineParameters:
    """Exogenous inputs of one experiment, in SI units (m, s, pax).

    Speeds are stored in m/s; the config layer converts from km/h.
    ``hourly_demand`` stays in pax/h since that is how every sweep is keyed.
    """

    stop_count: int = 20
    mean_spacing: float = 400.0
    bus_capacity: int = 80
    cruise_speed: float = 20.0 / 3.6
    walk_speed: float = 4.5 / 3.6
    fixed_stop_loss: float = 20.0
    board_time: float = 4.0
    alight_time: float = 3.0
    wait_weight: float = 2.1
    walk_weight: float = 2.2
    fleet_multiplier: float = 1.5
    hourly_demand: float = 1500.0
    noise_shape: float = 2.0
    noise_scale_fraction: float = 0.1
    heterogeneity_cv: float = 0.10
    policy: PolicySpec = field(default_factory=PolicySpec)
    master_seed: int = 0
    iteration_count: int = 500
    warmup_cycles: int = 2
    eval_duration: float = 3600.0
    fleet_override: int | None = None
    freeze_line: bool = False

    def __post_init__(self):
        self.validate()

    @property
    def unit_capacity(self) -> int:
        return self.bus_capacity // 2

    @property
    def mean_rate(self) -> float:
        """Average per-stop arrival rate in pax/s."""
        return self.hourly_demand / (3600.0 * self.stop_count)

    @property
    def mean_cruise(self) -> float:
        return self.mean_spacing / self.cruise_speed

    def validate(self) -> None:
        if self.stop_count < 2:
            raise ConfigurationError("stop_count", "need at least 2 stops")
        if self.bus_capacity < 2 or self.bus_capacity % 2:
            raise ConfigurationError("bus_capacity", "must be even and >= 2")
        if not self.fleet_multiplier > 1:
            raise ConfigurationError("fleet_multiplier", "must exceed 1")
        for key in ("mean_spacing", "cruise_speed", "walk_speed", "fixed_stop_loss",
                    "board_time", "alight_time", "eval_duration"):
            if not getattr(self, key) > 0:
                raise ConfigurationError(key, "must be strictly positive")
        if self.hourly_demand < 0:
            raise ConfigurationError("hourly_demand", "must be non-negative")
        if self.wait_weight < 1 or self.walk_weight < 1:
            key = "wait_weight" if self.wait_weight < 1 else "walk_weight"
            raise ConfigurationError(key, "weights must be >= 1")
        if not self.noise_shape > 0:
            raise ConfigurationError("noise_shape", "must be positive")
        if not 0 <= self.noise_scale_fraction * self.noise_shape < 1:
            raise ConfigurationError(
                "noise_scale_fraction", "noise_scale_fraction * noise_shape must lie in [0, 1)")
        if self.heterogeneity_cv < 0:
            raise ConfigurationError("heterogeneity_cv", "must be non-negative")
        if self.iteration_count < 1:
            raise ConfigurationError("iteration_count", "must be >= 1")
        if self.warmup_cycles < 0:
            raise ConfigurationError("warmup_cycles", "must be >= 0")
        if self.fleet_override is not None and self.fleet_override < 1:
            raise ConfigurationError("fleet_override", "must be >= 1")


@dataclass(frozen=True)
class LineInstance:
    """One sampled realization of the route plus its derived operating point."""

    params: LineParameters
    spacing: np.ndarray
    rates: np.ndarray
    alight_probs: np.ndarray
    fleet_size: int
    target_headway: float
    min_fleet: float

    @property
    def stop_count(self) -> int:
        return len(self.spacing)

    @property
    def expected_cruise(self) -> np.ndarray:
        return self.spacing / self.params.cruise_speed

    @property
    def cycle_time(self) -> float:
        return self.fleet_size * self.target_headway

    @property
    def expected_load(self) -> float:
        return self.params.stop_count * self.params.mean_rate * self.target_headway / 2


def mean_alight_probability(stop_count: int) -> float:
    """Alighting probability giving an average trip of half the line."""
    if stop_count < 2:
        raise ConfigurationError("stop_count", "need at least 2 stops")
    return 2.0 / stop_count


def min_fleet(params: LineParameters) -> float:
    s, lam = params.stop_count, params.mean_rate
    return ((params.alight_time + params.board_time) * s * lam
            + (params.mean_cruise + params.fixed_stop_loss) * s ** 2 * lam
            / (2 * params.bus_capacity))


def fleet_size(params: LineParameters) -> int:
    """Fleet size ``ceil(multiplier * min_fleet)``, never below one bus."""
    if params.fleet_override is not None:
        return params.fleet_override
    return max(1, math.ceil(params.fleet_multiplier * min_fleet(params)))


def target_headway(params: LineParameters, n_buses: int) -> float:
    """Solve the expected cycle equation ``(tc + (a+b)*lam*H + E)*S = N*H`` for H."""
    s = params.stop_count
    denom = n_buses - (params.alight_time + params.board_time) * s * params.mean_rate
    if denom <= 0:
        raise InfeasibleFleetError(
            f"{n_buses} buses cannot serve {params.hourly_demand} pax/h")
    return (params.mean_cruise + params.fixed_stop_loss) * s / denom


def _truncated_normal(rng: np.random.Generator, mean: float, cv: float, size: int,
                      upper: float = math.inf) -> np.ndarray:
    values = rng.normal(mean, cv * mean, size) if cv > 0 else np.full(size, float(mean))
    bad = (values <= 0) | (values > upper)
    while bad.any():
        values[bad] = rng.normal(mean, cv * mean, int(bad.sum()))
        bad = (values <= 0) | (values > upper)
    return values


def sample_line(params: LineParameters, rng: np.random.Generator) -> LineInstance:
    """Draw a quasi-homogeneous line around the parameter means."""
    s, cv = params.stop_count, params.heterogeneity_cv
    spacing = _truncated_normal(rng, params.mean_spacing, cv, s)
    if params.mean_rate > 0:
        rates = _truncated_normal(rng, params.mean_rate, cv, s)
    else:
        rates = np.zeros(s)
    probs = _truncated_normal(rng, mean_alight_probability(s), cv, s, upper=1.0)
    n = fleet_size(params)
    return LineInstance(
        params=params,
        spacing=spacing,
        rates=rates,
        alight_probs=probs,
        fleet_size=n,
        target_headway=target_headway(params, n),
        min_fleet=min_fleet(params),
    )


def initial_conditions(instance: LineInstance) -> tuple[np.ndarray, np.ndarray]:
    """Starting loads and stop-1 dispatch times for the first N runs."""
    n, h = instance.fleet_size, instance.target_headway
    loads = np.full(n, int(round(instance.expected_load)), dtype=int)
    starts = np.arange(n) * h
    return loads, starts
