"""YAML run configuration in user-facing units (km/h, pax/h, seconds)."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields

import yaml

from .domain import ConfigurationError, LineParameters, PolicyKind, PolicySpec

SEED_ENV = "BUSSPLIT_SEED"
EMITTERS = ("visits", "curves", "metrics")
TABLE3_DEMANDS = [250.0 * k for k in range(1, 11)]
DEFAULT_THRESHOLDS = [1.1, 1.3, 1.5, 1.7, 1.9]


@dataclass
class RunConfig:
    stop_count: int = 20
    mean_spacing_m: float = 400.0
    bus_capacity: int = 80
    cruise_speed_kmh: float = 20.0
    walk_speed_kmh: float = 4.5
    fixed_stop_loss_s: float = 20.0
    board_time_s: float = 4.0
    alight_time_s: float = 3.0
    wait_weight: float = 2.1
    walk_weight: float = 2.2
    fleet_multiplier: float = 1.5
    hourly_demand: float = 1500.0
    noise_shape: float = 2.0
    noise_scale_fraction: float = 0.1
    heterogeneity_cv: float = 0.10
    policy: str = PolicyKind.BUS_SPLITTING.value
    eta: float = 1.5
    seed: int = 0
    iterations: int = 500
    warmup_cycles: int = 2
    eval_duration_s: float = 3600.0
    fleet_override: int | None = None
    freeze_line: bool = False
    workers: int = 1
    output_dir: str = "out"
    emit: list[str] = field(default_factory=lambda: list(EMITTERS))
    demands: list[float] = field(default_factory=lambda: list(TABLE3_DEMANDS))
    thresholds: list[float] = field(default_factory=lambda: list(DEFAULT_THRESHOLDS))

    def __post_init__(self):
        try:
            PolicyKind(self.policy)
        except ValueError:
            raise ConfigurationError(
                "policy", f"expected one of {[k.value for k in PolicyKind]}") from None
        bad = [e for e in self.emit if e not in EMITTERS]
        if bad:
            raise ConfigurationError("emit", f"unknown emitter(s) {bad}")
        if self.workers < 1:
            raise ConfigurationError("workers", "must be >= 1")
        if any(d <= 0 for d in self.demands):
            raise ConfigurationError("demands", "must be positive")
        if any(t <= 0 for t in self.thresholds):
            raise ConfigurationError("thresholds", "must be positive")
        self.to_params()

    def to_params(self) -> LineParameters:
        return LineParameters(
            stop_count=self.stop_count,
            mean_spacing=self.mean_spacing_m,
            bus_capacity=self.bus_capacity,
            cruise_speed=self.cruise_speed_kmh / 3.6,
            walk_speed=self.walk_speed_kmh / 3.6,
            fixed_stop_loss=self.fixed_stop_loss_s,
            board_time=self.board_time_s,
            alight_time=self.alight_time_s,
            wait_weight=self.wait_weight,
            walk_weight=self.walk_weight,
            fleet_multiplier=self.fleet_multiplier,
            hourly_demand=self.hourly_demand,
            noise_shape=self.noise_shape,
            noise_scale_fraction=self.noise_scale_fraction,
            heterogeneity_cv=self.heterogeneity_cv,
            policy=PolicySpec(PolicyKind(self.policy), self.eta),
            master_seed=self.seed,
            iteration_count=self.iterations,
            warmup_cycles=self.warmup_cycles,
            eval_duration=self.eval_duration_s,
            fleet_override=self.fleet_override,
            freeze_line=self.freeze_line,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return _coerce_int(value)
        if kind == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind == "str":
            return str(value)
        if kind == "int | None":
            return None if value is None else _coerce_int(value)
        if kind == "list[str]":
            return [str(v) for v in _as_list(value)]
        if kind == "list[float]":
            return [float(v) for v in _as_list(value)]
    except (TypeError, ValueError):
        raise ConfigurationError(key, f"cannot interpret {value!r} as {kind}") from None
    raise AssertionError(kind)


def _coerce_int(value):
    if isinstance(value, str):
        value = int(value)
    if isinstance(value, bool) or int(value) != value:
        raise TypeError
    return int(value)


def _as_list(value):
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    if not isinstance(value, (list, tuple)):
        raise TypeError
    return value


def from_mapping(data: dict | None) -> RunConfig:
    data = dict(data or {})
    unknown = sorted(set(data) - set(_FIELD_TYPES))
    if unknown:
        raise ConfigurationError(unknown[0], "unknown configuration key")
    if "seed" not in data and os.environ.get(SEED_ENV):
        data["seed"] = os.environ[SEED_ENV]
    return RunConfig(**{k: _coerce(k, v) for k, v in data.items()})


def load_mapping(text: str) -> dict:
    try:
        data = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigurationError("<document>", f"malformed YAML: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError("<document>", "top level must be a mapping")
    return data


def parse_config(text: str) -> RunConfig:
    """Parse YAML text; omitted keys take the default line parameters."""
    return from_mapping(load_mapping(text))
