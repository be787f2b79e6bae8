"""Command-line entry point.

    netmimo run <config> [--experiment ID] [--seed N] [--out DIR]
                         [--trials N] [--threads N]
    netmimo validate <config>
    netmimo report <run-dir>

`run` executes one experiment (or all of them) from a YAML config and
writes CSVs plus manifest.json into the output directory. `validate`
checks a config without running anything and lists every problem.
`report` summarizes analytic-vs-simulation discrepancies for a finished
run directory. Exit codes: 0 success, 1 runtime or I/O failure, 2 invalid
configuration or arguments.
"""

import argparse
import sys
from dataclasses import replace

from . import __version__, config, experiments


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="netmimo",
        description="Network MIMO performance tables: Monte Carlo and "
                    "analytic engines behind one config.")
    parser.add_argument("--version", action="version",
                        version=f"netmimo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run experiments from a config file")
    run.add_argument("config", help="YAML config path")
    run.add_argument("--experiment", help="experiment id (default: from "
                     "config, or all)")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--trials", type=int,
                     help="override trials per simulated point")
    run.add_argument("--threads", type=int, default=1,
                     help="worker processes for simulation points")

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("config", help="YAML config path")

    rep = sub.add_parser("report", help="discrepancy report for a run")
    rep.add_argument("run_dir", help="directory written by `netmimo run`")
    return parser


def _load_spec(path, args=None):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return None, 1
    try:
        spec = experiments.validate_config(text)
        if args is not None:
            overrides = {}
            if args.experiment is not None:
                overrides["experiment"] = args.experiment
            if args.seed is not None:
                overrides["seed"] = args.seed
            if args.out is not None:
                overrides["outdir"] = args.out
            if args.trials is not None:
                overrides["n_trials"] = args.trials
            if overrides:
                spec = replace(spec, **overrides)
                if (spec.experiment != "all"
                        and spec.experiment not in experiments.EXPERIMENT_IDS):
                    raise config.ConfigError(
                        [f"experiment: unknown id {spec.experiment!r}"])
                if spec.seed < 0 or spec.n_trials < 1:
                    raise config.ConfigError(
                        ["seed must be nonnegative and trials positive"])
    except config.ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return None, 2
    return spec, 0


def _cmd_run(args):
    spec, status = _load_spec(args.config, args)
    if spec is None:
        return status
    if args.threads is not None and args.threads < 1:
        print("config error: threads must be positive", file=sys.stderr)
        return 2
    try:
        written = experiments.run_experiment(spec, threads=args.threads)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


def _cmd_validate(args):
    spec, status = _load_spec(args.config)
    if spec is None:
        return status
    p = spec.params
    print(f"OK: experiment={spec.experiment} seed={spec.seed} "
          f"trials={spec.n_trials} out={spec.outdir}")
    print(f"    network: {p.antennas} antennas, {p.users_per_bs} users/BS, "
          f"intensity {p.bs_intensity:g}/m^2, base cluster size "
          f"{p.mean_cluster_size:g}")
    bb = "per-experiment defaults" if spec.bbars is None else (
        ", ".join(f"{b:g}" for b in spec.bbars))
    print(f"    cluster-size sweep: {bb}")
    print(f"    config hash: {config.config_hash(spec)}")
    return 0


def _cmd_report(args):
    try:
        text = experiments.report_discrepancies(args.run_dir)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(text, end="")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args)
    return _cmd_report(args)


if __name__ == "__main__":
    sys.exit(main())
