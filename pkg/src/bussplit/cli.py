"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime or infeasibility
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import config as cfg
from .domain import (ConfigurationError, InfeasibleFleetError, PolicyKind, PolicySpec,
                     fleet_size, min_fleet, sample_line, target_headway)
from .emit import emit_curves, emit_metrics, emit_visits
from .engine import SimulationError, simulate
from .experiments import EmptyCellError, aggregate, demand_sweep, threshold_sweep
from .metrics import compute_metrics
from .rng import SubstreamRNG

log = logging.getLogger("bussplit")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors, not argparse's default exit 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="YAML configuration file")
    parser.add_argument("--policy", choices=[k.value for k in PolicyKind])
    parser.add_argument("--eta", type=float, help="control threshold")
    parser.add_argument("--demand", type=float, help="hourly demand (pax/h)")
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--emit", help="comma-separated subset of visits,curves,metrics")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bussplit", description=__doc__.splitlines()[0])
    parser.add_argument("--print-defaults", action="store_true",
                        help="print the default configuration and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="run one instance and write full logs")
    _common(p)
    p.add_argument("--iteration", type=int, default=0, help="iteration index of the instance")

    p = sub.add_parser("sweep", help="Monte Carlo sweep over demand or threshold")
    _common(p)
    p.add_argument("--kind", choices=("demand", "threshold"), default="demand")
    p.add_argument("--demands", help="comma-separated demand list (pax/h)")
    p.add_argument("--thresholds", help="comma-separated threshold list")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("fleet-table", help="fleet size and target headway per demand level")
    p.add_argument("--config", type=Path)
    p.add_argument("--demands", help="comma-separated demand list (pax/h)")

    sub.add_parser("defaults", help="print the default configuration")
    return parser


def load_config(args: argparse.Namespace) -> cfg.RunConfig:
    data = cfg.load_mapping(args.config.read_text()) if getattr(args, "config", None) else {}
    overrides = {
        "policy": getattr(args, "policy", None),
        "eta": getattr(args, "eta", None),
        "hourly_demand": getattr(args, "demand", None),
        "iterations": getattr(args, "iterations", None),
        "seed": getattr(args, "seed", None),
        "output_dir": str(args.out) if getattr(args, "out", None) else None,
        "emit": getattr(args, "emit", None),
        "demands": getattr(args, "demands", None),
        "thresholds": getattr(args, "thresholds", None),
        "workers": getattr(args, "workers", None),
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    return cfg.from_mapping(data)


def cmd_simulate(conf: cfg.RunConfig, iteration: int) -> int:
    params = conf.to_params()
    rng = SubstreamRNG(params.master_seed, iteration)
    line_rng = SubstreamRNG(params.master_seed, 0).line() if params.freeze_line else rng.line()
    instance = sample_line(params, line_rng)
    output = simulate(instance, params.policy, rng)
    report = compute_metrics(output)
    out = Path(conf.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if "visits" in conf.emit:
        emit_visits(output, out / "visits.csv", iteration)
    if "curves" in conf.emit:
        emit_curves(output, out / "curves.csv")
    if "metrics" in conf.emit:
        emit_metrics([aggregate(params, [report])], out / "metrics.csv")
    print(f"policy={params.policy.kind.value} eta={params.policy.threshold} "
          f"demand={params.hourly_demand:g} N={instance.fleet_size} "
          f"H={instance.target_headway:.1f}s window=[{output.eval_window[0]:.1f}, "
          f"{output.eval_window[1]:.1f}]s")
    for name, value in report.as_dict().items():
        print(f"  {name:16s} {value}")
    return EXIT_OK


def cmd_sweep(conf: cfg.RunConfig, kind: str) -> int:
    base = conf.to_params()
    if kind == "demand":
        cells = demand_sweep(base, conf.demands, workers=conf.workers)
    else:
        cells = threshold_sweep(base, conf.thresholds, workers=conf.workers)
    out = Path(conf.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = emit_metrics(cells, out / f"{kind}_sweep.csv")
    failed = [c for c in cells if c.error]
    print(f"wrote {len(cells)} cells to {path} ({len(failed)} failed)")
    return EXIT_RUNTIME if failed and len(failed) == len(cells) else EXIT_OK


def cmd_fleet_table(conf: cfg.RunConfig) -> int:
    base = conf.to_params()
    print("demand_pax_h,min_fleet,N,H_s,H_min,cycle_min,load")
    for demand in conf.demands:
        params = replace(base, hourly_demand=demand)
        n = fleet_size(params)
        h = target_headway(params, n)
        load = params.stop_count * params.mean_rate * h / 2
        print(f"{demand:g},{min_fleet(params):.3f},{n},{h:.1f},{h / 60:.2f},"
              f"{n * h / 60:.2f},{load:.1f}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.print_defaults or args.command == "defaults":
        print(cfg.RunConfig().to_text(), end="")
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        conf = load_config(args)
        if args.command == "simulate":
            return cmd_simulate(conf, args.iteration)
        if args.command == "sweep":
            return cmd_sweep(conf, args.kind)
        return cmd_fleet_table(conf)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleFleetError, SimulationError, EmptyCellError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
