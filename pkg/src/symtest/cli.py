"""Command line interface.

Subcommands::

    symtest invariance  --config cfg.json [overrides]   marginal invariance tests
    symtest equivariance --config cfg.json [overrides]  conditional (X, Y) tests
    symtest simulate    --config cfg.json --out r.json  any replicated experiment
    symtest power       --config cfg.json               single-dataset power estimate
    symtest tune        --config cfg.json               bandwidth grid search

Configurations are JSON objects with the fields of ExperimentConfig; command
line overrides (--n, --reps, --seed, ...) take precedence.  Exit codes:
0 success, 2 configuration problems, 3 data file problems.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .errors import (
    ConfigInvalid,
    DataFileMissing,
    ParseError,
    RangeError,
    SchemaMismatch,
    SymtestError,
)
from .harness import (
    ExperimentConfig,
    emit_report,
    run_power_estimate,
    run_simulation,
    tune_bandwidths,
)

_INVARIANCE_METHODS = ("mmd", "nmmd", "cw", "2smmd", "inversion-mmd")
_EQUIVARIANCE_METHODS = ("kci", "cp")


def _add_common(parser):
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", help="write the report to this path")
    parser.add_argument("--format", default="json", choices=("json", "csv"))
    for name, typ in (
        ("method", str), ("group", str), ("generator", str), ("data", str),
        ("kernel", str), ("n", int), ("reps", int), ("m", int), ("B", int),
        ("alpha", float), ("seed", int), ("threads", int),
        ("n-resamples", int), ("null-samples", int), ("burn-in", int),
    ):
        parser.add_argument(f"--{name}", type=typ, dest=name.replace("-", "_"))


def _load_config(args, allowed_methods=None):
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigInvalid(f"no such configuration file: {args.config}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"configuration is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid("configuration must be a JSON object")
    for name in ("method", "group", "generator", "data", "kernel", "n", "reps",
                 "m", "B", "alpha", "seed", "threads", "n_resamples",
                 "null_samples", "burn_in"):
        value = getattr(args, name, None)
        if value is not None:
            raw[name] = value
    cfg = ExperimentConfig.from_dict(raw)
    if allowed_methods and cfg.method not in allowed_methods:
        raise ConfigInvalid(
            f"method {cfg.method!r} is not valid here; use one of {allowed_methods}"
        )
    return cfg


def _print_summary(report):
    print(f"method={report.method} group={report.group} n={report.n} "
          f"reps={report.reps} alpha={report.alpha}")
    print(f"rejection-rate={report.rejection_rate:.4f} "
          f"(se={report.rejection_se:.4f})")
    print(f"pvalue-uniformity: ks={report.ks_stat:.4f} p={report.ks_p:.4f}")
    print(f"mean-seconds-per-replication={report.mean_seconds:.4f}")


def _cmd_simulate(args, allowed=None):
    cfg = _load_config(args, allowed)
    report = run_simulation(cfg)
    _print_summary(report)
    if args.out:
        emit_report(report, args.out, args.format)
        print(f"report written to {args.out}")
    return 0


def _cmd_power(args):
    cfg = _load_config(args, _INVARIANCE_METHODS)
    est = run_power_estimate(cfg)
    print(f"estimated-power={est.beta_hat:.4f} over {est.n_resamples} resamples "
          f"(B={est.B}, alpha={est.alpha})")
    if args.out:
        payload = {
            "beta_hat": est.beta_hat,
            "betas": [float(b) for b in est.betas],
            "n_resamples": est.n_resamples,
            "B": est.B,
            "alpha": est.alpha,
            "config": est.config,
        }
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        print(f"report written to {args.out}")
    return 0


def _cmd_tune(args):
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigInvalid(f"no such configuration file: {args.config}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"configuration is not valid JSON: {exc}") from exc
    for key in ("grids", "h0", "h1"):
        if key not in raw:
            raise ConfigInvalid(f"tuning configuration needs {key!r}")
    grids = raw["grids"]
    train_reps = int(raw.get("train_reps", 100))
    base_h0 = dict(raw["h0"])
    base_h1 = dict(raw["h1"])

    def measure(combo):
        rates = []
        for base in (base_h0, base_h1):
            d = dict(base)
            d.setdefault("reps", train_reps)
            for key, value in combo.items():
                d[key] = f"rbf({value})" if key.startswith("kernel") else value
            cfg = ExperimentConfig.from_dict(d)
            rates.append(run_simulation(cfg).rejection_rate)
        return rates[0], rates[1]

    best, records = tune_bandwidths(grids, measure, float(raw.get("h0_cap", 0.1)))
    for rec in records:
        print(f"combo={rec['combo']} h0={rec['h0_rate']:.3f} h1={rec['h1_rate']:.3f}")
    print(f"selected: {best}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"selected": best, "records": records}, fh, indent=2)
            fh.write("\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="symtest",
        description="Monte Carlo tests of distributional invariance and equivariance",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("invariance", "equivariance", "simulate", "power", "tune"):
        p = sub.add_parser(name)
        _add_common(p)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "invariance":
            return _cmd_simulate(args, _INVARIANCE_METHODS)
        if args.command == "equivariance":
            return _cmd_simulate(args, _EQUIVARIANCE_METHODS)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "power":
            return _cmd_power(args)
        return _cmd_tune(args)
    except ConfigInvalid as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (DataFileMissing, SchemaMismatch, ParseError, RangeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except SymtestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
