"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 numerical blow-up, 4 failed verification.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .analysis import format_report, report_rows, slack_sweep, write_rows_csv
from .config import FIGURES, ConfigError, ExperimentConfig, load_config, preset_config, save_config
from .dynamics import BlowUpError
from .experiments import format_report_dict, run_config
from .verification import SLACK_ALPHAS, SLACK_ICS, SUITES, run_suite

EXIT_OK, EXIT_INVALID, EXIT_BLOWUP, EXIT_VERIFY = 0, 2, 3, 4

log = logging.getLogger("ptdiff")


def _override(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.step is not None:
        cfg = cfg.replace(integration=dataclasses.replace(cfg.integration, step=args.step))
    if args.seed is not None and cfg.noise is not None:
        cfg = cfg.replace(noise=dataclasses.replace(cfg.noise, seed=args.seed))
    return cfg


def _report_run(result) -> None:
    print(format_report_dict(result.summary, f"run {result.config.name}"), end="")
    for f in result.files:
        print(f"wrote {f}")


def cmd_simulate(args) -> int:
    if args.config is None:
        raise ConfigError("simulate needs --config PATH")
    cfg = _override(load_config(args.config), args)
    out = Path(args.out or cfg.output.directory)
    _report_run(run_config(cfg, out))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    cfg = preset_config(args.figure)
    if args.config is not None:
        raise ConfigError("reproduce takes no --config; the figure id fixes the configuration")
    cfg = _override(cfg, args)
    out = Path(args.out or "runs") / args.figure
    _report_run(run_config(cfg, out))
    return EXIT_OK


def cmd_sweep(args) -> int:
    alphas = [float(a) for a in args.alphas.split(",")] if args.alphas else list(SLACK_ALPHAS)
    step = args.step or 1e-6
    if args.config is not None:
        cfg = load_config(args.config)
        cfg.validate()
        fam = cfg.build_family()
        dc = cfg.differentiator
        ics = [tuple(cfg.initial_state())]
        rep = slack_sweep(fam, alphas, ics, step, T_c=dc.T_c, L=dc.L, beta_factor=dc.beta_factor,
                          terminal_gains=dc.terminal_gains, aux_step=step, workers=args.workers)
    else:
        from .families import FixedTimeFamily
        rep = slack_sweep(FixedTimeFamily(1, 1.0, 1.0), alphas, SLACK_ICS, step, aux_step=step,
                          workers=args.workers)
    out = Path(args.out or "runs") / "sweep"
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(report_rows(rep), out / "sweep.csv")
    text = format_report(rep, "slack sweep (aux_T_star_estimate is the worst measured over the grid)")
    (out / "sweep.txt").write_text(text)
    print(text, end="")
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_suite(args.suite, step=args.step, workers=args.workers)
    out = Path(args.out or "runs") / "verify"
    out.mkdir(parents=True, exist_ok=True)
    failed = []
    for res in results:
        rows = [{"check": c.name, "passed": c.passed, "detail": c.detail} for c in res.checks]
        write_rows_csv(rows, out / f"{res.suite}_checks.csv")
        write_rows_csv(report_rows(res.reports), out / f"{res.suite}_reports.csv")
        for c in res.checks:
            print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
        failed += res.failed()
    if failed:
        print(f"{len(failed)} check(s) failed:", file=sys.stderr)
        for c in failed:
            print(f"  {c.name}: {c.detail}", file=sys.stderr)
        return EXIT_VERIFY
    print("all checks passed")
    return EXIT_OK


def cmd_preset(args) -> int:
    """Write a figure configuration to a YAML file as a starting point."""
    cfg = preset_config(args.figure)
    path = Path(args.out or f"{args.figure}.yaml")
    save_config(cfg, path)
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML experiment configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--step", type=float, help="override the integration step")
    common.add_argument("--seed", type=int, help="override the noise seed")
    common.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="ptdiff", description="Predefined-time exact differentiators: simulation and checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("simulate", parents=[common], help="run one configured simulation")
    sp.set_defaults(func=cmd_simulate)
    sp = sub.add_parser("reproduce", parents=[common], help="run a worked-example configuration")
    sp.add_argument("figure", choices=FIGURES)
    sp.set_defaults(func=cmd_reproduce)
    sp = sub.add_parser("sweep", parents=[common], help="slack versus alpha sweep")
    sp.add_argument("--alphas", help="comma-separated alpha grid (default 1,3,5,8)")
    sp.set_defaults(func=cmd_sweep)
    sp = sub.add_parser("verify", parents=[common], help="run a property suite")
    sp.add_argument("suite", choices=[*SUITES, "all"])
    sp.set_defaults(func=cmd_verify)
    sp = sub.add_parser("preset", parents=[common], help="write a figure configuration as YAML")
    sp.add_argument("figure", choices=FIGURES)
    sp.set_defaults(func=cmd_preset)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    if args.step is not None and not args.step > 0:
        print("error: --step must be positive", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BlowUpError as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
