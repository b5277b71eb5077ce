"""Command-line entry point.

Subcommands: run (single config file), sanity / correlated / pendulum /
overparam (prebuilt suites), gradcheck (finite-difference oracle battery).
Exit codes: 0 success, 1 configuration problem, 2 the boosted algorithm
diverged, 3 gradient check failure.
"""

from __future__ import annotations

import argparse
import sys

from dynaboost.harness import experiments
from dynaboost.harness.config import ConfigError, load_config
from dynaboost.harness.gradcheck import run_all
from dynaboost.harness.outputs import _ensure_dir, write_outputs
from dynaboost.harness.runner import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_GRADCHECK = 3


def _add_run_options(p: argparse.ArgumentParser, with_t: bool = True) -> None:
    p.add_argument("--out", default=None, help="output directory (default: from config)")
    p.add_argument("--runs", type=int, default=None, help="override number of runs")
    p.add_argument("--seed", type=int, default=None, help="override base seed")
    p.add_argument(
        "--parallel", type=int, default=1, help="number of worker processes for runs"
    )
    if with_t:
        p.add_argument("--t", type=int, default=None, help="override horizon T")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynaboost",
        description="Boosting weak controllers on simulated dynamical systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a config file")
    p_run.add_argument("--config", required=True, help="path to a YAML experiment config")
    _add_run_options(p_run, with_t=False)

    p_sanity = sub.add_parser("sanity", help="iid-Gaussian suite at dimensions 1, 10, 100")
    _add_run_options(p_sanity)
    p_sanity.add_argument(
        "--t-large",
        type=int,
        default=1000,
        help="horizon for the d=100 run (default 1000; smaller than T to keep desk scale)",
    )

    p_corr = sub.add_parser("correlated", help="random-walk and sinusoidal suites")
    _add_run_options(p_corr)

    p_pend = sub.add_parser("pendulum", help="inverted pendulum with random-walk noise")
    _add_run_options(p_pend)

    p_over = sub.add_parser(
        "overparam", help="boosted small nets vs one parameter-matched large net"
    )
    _add_run_options(p_over)

    sub.add_parser("gradcheck", help="finite-difference verification of all gradients")
    return parser


def _execute(configs, args) -> int:
    code = EXIT_OK
    for cfg in configs:
        cfg = cfg.override(out=args.out)
        out_dir = _ensure_dir(cfg.out)
        result = run_experiment(cfg, parallel=max(1, args.parallel))
        write_outputs(out_dir, cfg, result.trajectories, result.stats, result.w_hashes, result.diverged)
        summary = []
        for alg in result.algorithms:
            if alg in result.stats:
                summary.append(f"{alg} {result.stats[alg].mean[-1]:.4f}")
            else:
                summary.append(f"{alg} diverged({len(result.diverged[alg])})")
        print(f"{cfg.name}: " + ", ".join(summary))
        if result.boosted_diverged():
            print(f"{cfg.name}: boosted algorithm diverged", file=sys.stderr)
            code = EXIT_DIVERGED
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "gradcheck":
        failed = False
        for res in run_all():
            print(res.line())
            failed = failed or not res.ok
        return EXIT_GRADCHECK if failed else EXIT_OK
    try:
        if args.command == "run":
            configs = [load_config(args.config).override(seed=args.seed, runs=args.runs)]
        elif args.command == "sanity":
            configs = experiments.sanity_suite(
                t_large=args.t_large, **_suite_kwargs(args)
            )
        elif args.command == "correlated":
            configs = experiments.correlated_suite(**_suite_kwargs(args))
        elif args.command == "pendulum":
            configs = [experiments.pendulum_config(**_suite_kwargs(args))]
        else:
            configs = experiments.overparam_suite(**_suite_kwargs(args))
        return _execute(configs, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as e:
        if "not writable" in str(e):
            print(str(e), file=sys.stderr)
            return EXIT_CONFIG
        raise


def _suite_kwargs(args) -> dict:
    kw = {}
    if args.runs is not None:
        kw["runs"] = args.runs
    if args.seed is not None:
        kw["seed"] = args.seed
    if getattr(args, "t", None) is not None:
        kw["T"] = args.t
    return kw


if __name__ == "__main__":
    sys.exit(main())
