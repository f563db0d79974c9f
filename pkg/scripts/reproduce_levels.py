#!/usr/bin/env python3
"""Monte Carlo level grid: processes x sample sizes x covariance methods.

    python3 scripts/reproduce_levels.py --processes AR1 MA12 --sizes 200 1000 \
        --replicates 1000 --workers 4 --out results/levels

Prints the CSV table (one frequency and one Monte Carlo SE column per method)
and, with ``--out``, also writes PREFIX.csv and PREFIX.json.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from statreg.cov_methods import MethodConfig
from statreg.experiments import ExperimentConfig, run_level_experiment
from statreg.processes import PROCESS_KINDS

DEFAULT_METHODS = ("fitAR", "spectralproj", "efromovich", "kernel", "hac")


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--processes", nargs="+", default=["AR1", "MA12", "iid"],
                   help=f"any of {', '.join(PROCESS_KINDS)} (or iid)")
    p.add_argument("--sizes", nargs="+", type=int, default=[200, 1000])
    p.add_argument("--methods", nargs="+", default=list(DEFAULT_METHODS))
    p.add_argument("--replicates", type=int, default=500)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", metavar="PREFIX")
    return p.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    methods = tuple(MethodConfig(m) for m in args.methods)
    report = None
    for process in args.processes:
        for n in args.sizes:
            start = time.perf_counter()
            cfg = ExperimentConfig(process, n, args.replicates, methods, args.alpha,
                                   args.seed, workers=args.workers)
            part = run_level_experiment(cfg)
            print(f"# {cfg.process} n={n}: {time.perf_counter() - start:.1f}s", file=sys.stderr)
            report = part if report is None else report.merged(part)
    table = report.to_csv()
    sys.stdout.write(table)
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{prefix}.csv").write_text(table)
        Path(f"{prefix}.json").write_text(report.to_json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
