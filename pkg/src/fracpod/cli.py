"""Command line interface: ``fracpod run <config>`` and ``fracpod bench <config>``.

The config argument is either a flat ``key = value`` file or a bare
experiment id (ex1, ex2, ex3, ex4a, ex4b); flags override config values.
Exit status 0 on success, 1 on a failed run (stage-labeled message on
stderr), 2 on usage errors such as a missing config file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (
    EXPERIMENT_IDS,
    bench_experiment,
    config_from_id,
    parse_config_file,
    run_experiment,
)
from .inverse import PipelineStageError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracpod",
        description="Fractional wave experiments: forward solves, POD "
                    "reduction and terminal-data reconstruction.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("config",
                       help="config file path or experiment id "
                            f"({', '.join(EXPERIMENT_IDS)})")
        p.add_argument("--out-dir", help="artifact directory")
        p.add_argument("--seed", type=int, help="random seed override")
        p.add_argument("--pod-rank", type=int, help="POD rank override")
        p.add_argument("--noise", type=float, help="noise level override")

    run_p = sub.add_parser("run", help="run an experiment, write artifacts")
    add_common(run_p)

    bench_p = sub.add_parser("bench", help="time full vs reduced solves")
    add_common(bench_p)
    bench_p.add_argument("--reps", type=int, default=5,
                         help="repetitions per timing (default 5)")
    bench_p.add_argument("--identity-basis", action="store_true",
                         help="use the trivial full-rank basis (sanity mode)")
    return parser


def _load_config(arg: str, parser: argparse.ArgumentParser):
    path = Path(arg)
    if path.is_file():
        return parse_config_file(path)
    if arg in EXPERIMENT_IDS:
        return config_from_id(arg)
    parser.print_usage(sys.stderr)
    print(f"fracpod: config file {arg!r} not found and it is not an "
          f"experiment id ({', '.join(EXPERIMENT_IDS)})", file=sys.stderr)
    raise SystemExit(2)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    cfg = _load_config(args.config, parser)
    if args.out_dir is not None:
        cfg.out_dir = args.out_dir
    if args.seed is not None:
        cfg.seed = args.seed
    if args.pod_rank is not None:
        cfg.pod_rank = args.pod_rank
    if args.noise is not None:
        cfg.sigma = args.noise

    try:
        if args.command == "run":
            summary = run_experiment(cfg)
        else:
            summary = bench_experiment(cfg, reps=args.reps,
                                       identity_basis=args.identity_basis)
    except PipelineStageError as exc:
        print(f"fracpod: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"fracpod: error: {exc}", file=sys.stderr)
        return 1

    width = max(len(k) for k in summary)
    for key, val in summary.items():
        print(f"{key:<{width}}  {val}")
    print(f"artifacts written to {cfg.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
