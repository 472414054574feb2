"""Command-line interface: run, sweep, and baseline subcommands."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import cadmm, metrics, reports
from .config import apply_overrides, config_from_dict, load_config_data
from .errors import ConfigError, DfrcHbfError
from .model import ScenarioConfig, generate_channel


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="preset name or JSON config path")
    sub.add_argument("--task", choices=["sd", "tt"], help="override the configured task")
    sub.add_argument("--seed", type=int, help="override the configured seed")
    sub.add_argument("--out", default=".", help="output directory (created if missing)")
    sub.add_argument("--max-iter", type=int, dest="max_iter", help="override the iteration cap")
    sub.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        dest="overrides",
        help="override any config field (dots reach nested fields)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dfrc-hbf",
        description="Task-oriented hybrid beamforming design for OFDM radar-communication",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve one scenario and write its reports")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="re-solve over a list of rate thresholds")
    _add_common(p_sweep)
    p_sweep.add_argument("--chi", required=True, help="comma-separated rate thresholds")

    p_base = sub.add_parser("baseline", help="compare against radar-only and random-phase designs")
    _add_common(p_base)
    return parser


def _load_config(args) -> tuple[ScenarioConfig, dict]:
    data = load_config_data(args.config)
    data = apply_overrides(data, args.overrides)
    if args.task is not None:
        data["task"] = args.task
    if args.seed is not None:
        data["seed"] = args.seed
    if args.max_iter is not None:
        data["max_iter"] = args.max_iter
    return config_from_dict(data), data


def _channels(cfg: ScenarioConfig):
    return generate_channel(cfg, np.random.default_rng([cfg.seed, 0]))


def _render_figures(out: Path) -> None:
    # figure rendering lives in the optional companion package
    try:
        import dfrc_hbf_viz
    except ImportError:
        return
    dfrc_hbf_viz.render_run_dir(out)


def cmd_run(args) -> int:
    cfg, data = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    hbf, _, trace = cadmm.run(cfg, _channels(cfg))
    reports.write_trace_csv(trace, out / "trace.csv")
    reports.write_summary_json(trace, data, cfg.seed, out / "summary.json")
    reports.write_beampattern_csv(metrics.beampattern_grid(hbf, cfg), out / "beampattern.csv")
    reports.write_rates_csv(trace.final_rates, cfg.chi, out / "rates.csv")
    _render_figures(out)
    return 0


def _sweep_one(cfg: ScenarioConfig, channels, chi: float) -> tuple[float, float, float]:
    _, _, trace = cadmm.run(cfg.replace(chi=chi), channels)
    return chi, trace.final_objective, float(trace.final_rates.min())


def cmd_sweep(args) -> int:
    cfg, _ = _load_config(args)
    try:
        chis = [float(c) for c in args.chi.split(",") if c.strip()]
    except ValueError as err:
        raise ConfigError(f"--chi must be a comma-separated float list: {err}") from err
    if not chis:
        raise ConfigError("--chi lists no thresholds")
    channels = _channels(cfg)  # one realization shared by every threshold
    workers = min(len(chis), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, [cfg] * len(chis), [channels] * len(chis), chis))
    else:
        rows = [_sweep_one(cfg, channels, chi) for chi in chis]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports.write_sweep_csv(rows, out / "sweep.csv")
    _render_figures(out)
    return 0


def cmd_baseline(args) -> int:
    cfg, _ = _load_config(args)
    channels = _channels(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    _, _, constrained = cadmm.run(cfg, channels)
    _, _, radar = cadmm.radar_only(cfg, channels)
    random_hbf = cadmm.random_phase_baseline(cfg, np.random.default_rng([cfg.seed, 2]))
    random_comb, _ = metrics.update_combiners(channels, random_hbf, cfg.sigma_n2)
    random_rates = np.array(
        [
            [metrics.rate(channels.H[k, u], random_hbf, random_comb.w[k, u], cfg.sigma_n2, u, k) for u in range(cfg.U)]
            for k in range(cfg.K)
        ]
    )
    task = cfg.task.value
    chi0 = float(cfg.chi.ravel()[0])
    rows = [
        ("constrained", task, chi0, constrained.final_objective, float(constrained.final_rates.min())),
        ("radar_only", task, 0.0, radar.final_objective, float(radar.final_rates.min())),
        ("random_phase", task, 0.0, cadmm.objective(random_hbf, cfg), float(random_rates.min())),
    ]
    reports.write_baseline_csv(rows, out / "baseline.csv")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "baseline": cmd_baseline}
    try:
        return handlers[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except DfrcHbfError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
