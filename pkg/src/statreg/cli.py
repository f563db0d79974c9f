"""``statreg`` command line: fit, simulate, experiment.

Exit codes: 0 ok, 2 usage, 3 data, 4 numerical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import shlex
import sys
import warnings
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .cov_methods import MethodConfig, estimate_covariance
from .errors import ConfigError, DataError, FileNotFound, StatRegError, UsageError
from .experiments import ExperimentConfig, run_level_experiment
from .formula import load_csv, parse_formula
from .inference import summary_report
from .ols_core import fit_ols
from .plotdata import NO_PLOT, plot_data_for, write_plot_data
from .processes import DesignSpec, derive_rng, gen_design_mod2, generate_process

log = logging.getLogger("statreg")

CLI_METHODS = ("fitar", "kernel", "efromovich", "hac", "spectralproj", "select", "manual")
CLI_PROCESSES = ("ar1", "ar12", "ma12", "nonmixing", "sysdyn", "iid")


def load_schema(name: str) -> dict:
    text = resources.files("statreg").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _model_selec(text: str):
    """INT, -1, or a comma-separated list of lags."""
    try:
        if "," in text:
            return tuple(int(v) for v in text.split(",") if v.strip())
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid model selection {text!r}") from None


def _read_vector(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFound(f"no such file: {path}")
    values = []
    for i, row in enumerate(csv.reader(path.open(newline="", encoding="utf-8"))):
        cells = [c for c in row if c.strip()]
        for c in cells:
            try:
                values.append(float(c))
            except ValueError:
                if i == 0:
                    break  # header
                raise DataError(f"{path}: non-numeric value {c!r} on line {i + 1}") from None
    if not values:
        raise DataError(f"{path} holds no numbers")
    return np.array(values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statreg", description="Linear regression with stationary errors."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a model from a CSV file and print its summary")
    fit.add_argument("--data", required=True, help="CSV file with a header row")
    fit.add_argument("--formula", required=True, help='e.g. "y ~ t + I(t^2)"')
    fit.add_argument("--method", choices=CLI_METHODS, type=str.lower, default="fitar")
    fit.add_argument("--model-selec", type=_model_selec, default=-1)
    fit.add_argument("--model-max", type=int)
    fit.add_argument("--kernel", choices=("rectangular", "triangle", "trapeze"), default="triangle")
    fit.add_argument("--block-size", type=int)
    fit.add_argument("--block-n", type=int, default=100)
    fit.add_argument("--cov-vector", help="autocovariance vector for --method manual")
    fit.add_argument("--level", type=float, help="also print confidence intervals")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", choices=("text", "json"), default="text")
    fit.add_argument("--plot-data", metavar="DIR", help="write plot data CSV files here")
    fit.set_defaults(handler=cmd_fit)

    sim = sub.add_parser("simulate", help="print a simulated error process or design as CSV")
    what = sim.add_mutually_exclusive_group(required=True)
    what.add_argument("--process", choices=CLI_PROCESSES, type=str.lower)
    what.add_argument("--design", choices=("mod2",))
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--output", help="write here instead of standard output")
    sim.set_defaults(handler=cmd_simulate)

    exp = sub.add_parser("experiment", help="Monte Carlo level of the overall test")
    exp.add_argument("--config", required=True, help="JSON configuration file")
    exp.add_argument("--workers", type=int, help="override the configured thread count")
    exp.add_argument("--out", metavar="PREFIX", help="write PREFIX.csv and PREFIX.json")
    exp.set_defaults(handler=cmd_experiment)
    return parser


def _method_config(args) -> MethodConfig:
    method = args.method
    if method == "select" and args.model_selec == -1:
        raise UsageError("--method select needs --model-selec with a list of lags")
    user_gamma = None
    if method == "manual":
        if not args.cov_vector:
            raise UsageError("--method manual needs --cov-vector")
        user_gamma = _read_vector(args.cov_vector)
    elif args.cov_vector:
        raise UsageError("--cov-vector only applies to --method manual")
    return MethodConfig(
        method=method,
        model_selec=args.model_selec,
        kernel=args.kernel,
        model_max=args.model_max,
        block_size=args.block_size,
        block_n=args.block_n,
        user_gamma=user_gamma,
    )


def cmd_fit(args, out) -> int:
    formula = parse_formula(args.formula)
    config = _method_config(args)
    if isinstance(config.model_selec, tuple) and config.method != "select":
        raise UsageError("a list of lags is only valid with --method select")
    data = load_csv(args.data, formula)
    fit = fit_ols(data)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cov = estimate_covariance(fit, config, np.random.default_rng(args.seed))
    for w in caught:
        log.warning("%s", w.message)
    call = f"statreg fit --formula {shlex.quote(str(formula))} --method {args.method}"
    report = summary_report(fit, cov, call=call, level=args.level)
    if args.out == "json":
        record = {"call": call, "formula": str(formula), **report.record}
        jsonschema.validate(record, load_schema("summary"))
        out.write(json.dumps(record, indent=2) + "\n")
    else:
        out.write(report.text)
    if args.plot_data:
        records = plot_data_for(fit, cov)
        if records:
            write_plot_data(args.plot_data, records)
        else:
            log.warning("%s for method %s", NO_PLOT, cov.method_tag)
    return 0


def cmd_simulate(args, out) -> int:
    # same streams as the experiment harness: 0 for designs, 1 for errors
    if args.n < 1:
        raise UsageError("--n must be positive")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if args.design:
        x = gen_design_mod2(args.n, derive_rng(args.seed, 0), DesignSpec().ar_coeff)
        w.writerow(["X1", "X2"])
        w.writerows((repr(float(a)), repr(float(b))) for a, b in x)
    else:
        try:
            values = generate_process(args.process, args.n, derive_rng(args.seed, 1))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        w.writerow(["value"])
        w.writerows((repr(float(v)),) for v in values)
    if args.output:
        Path(args.output).write_text(buf.getvalue())
    else:
        out.write(buf.getvalue())
    return 0


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def load_experiment_configs(path, workers: int | None = None) -> list[ExperimentConfig]:
    """Validate a JSON config and expand process/n lists into a grid."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFound(f"no such file: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from None
    validator = jsonschema.Draft202012Validator(load_schema("experiment"))
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _pointer(err.absolute_path))
    processes = raw["process"] if isinstance(raw["process"], list) else [raw["process"]]
    sizes = raw["n"] if isinstance(raw["n"], list) else [raw["n"]]
    methods = []
    for i, m in enumerate(raw["methods"]):
        try:
            methods.append(MethodConfig(**m))
        except (TypeError, ValueError, StatRegError) as exc:
            raise ConfigError(str(exc), f"/methods/{i}") from None
    design = raw.get("design", {})
    common = dict(
        replicates=raw["replicates"],
        methods=tuple(methods),
        alpha=raw.get("alpha", 0.05),
        base_seed=raw.get("base_seed", 20240101),
        design=DesignSpec(ar_coeff=design.get("ar_coeff", 0.5)),
        process_params=raw.get("process_params", {}),
        include_fisher=raw.get("include_fisher", True),
        workers=workers if workers is not None else raw.get("workers", 1),
    )
    return [ExperimentConfig(process=p, n=n, **common) for p in processes for n in sizes]


def cmd_experiment(args, out) -> int:
    if args.workers is not None and args.workers < 1:
        raise UsageError("--workers must be >= 1")
    configs = load_experiment_configs(args.config, args.workers)
    report = None
    for cfg in configs:
        part = run_level_experiment(cfg)
        report = part if report is None else report.merged(part)
    table = report.to_csv()
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{prefix}.csv").write_text(table)
        Path(f"{prefix}.json").write_text(report.to_json())
    out.write(table)
    return 0


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("statreg: note: %(message)s"))
    root = logging.getLogger("statreg")
    root.handlers[:] = [handler]
    root.propagate = False
    root.setLevel(logging.INFO)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args, out)
    except StatRegError as exc:
        print(f"statreg: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except jsonschema.ValidationError as exc:
        print(f"statreg: error: output failed schema check: {exc.message}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"statreg: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
