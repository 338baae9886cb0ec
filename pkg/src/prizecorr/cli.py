"""Command-line entry point: ``prizecorr {thresholds,estimate,simulate}``.

Reports go to stdout as JSON. Failures print one line
``prizecorr: error[CODE]: message`` to stderr and exit with

    2  usage, descriptor parse or invalid configuration
    3  method needs data the descriptor lacks
    4  numerical failure
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

from . import __version__
from .descriptor import DescriptorError, parse_descriptor, resolve_descriptor
from .inference import (
    DatasetError,
    EstimationError,
    MethodDataError,
    derive_thresholds,
    infer_by_exceedance,
    mle,
    posterior,
)
from .normal_core import ConvergenceError, DomainError
from .simulation import GAUSSIAN, MIXTURE, SimConfig, overlap_experiment, profile_likelihood_scan
from .tail_model import NoSolutionError

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class CliError(Exception):
    def __init__(self, code, status, message):
        super().__init__(message)
        self.code = code
        self.status = status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("E_USAGE", EXIT_USAGE, message)


def _fmt(v):
    return f"{v:.17g}"


def _write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def _emit(report, out):
    try:
        text = json.dumps(report, indent=2, allow_nan=False)
    except ValueError:
        raise CliError("E_NUMERIC", EXIT_NUMERIC, "report contains a non-finite number") from None
    out.write(text + "\n")


def _base_report(command):
    return {"tool": "prizecorr", "version": __version__, "command": command,
            "units": {"x_c": "z-score", "y_c": "z-score", "r": "correlation",
                      "fractions": "probability"}}


def _load(arg):
    path = resolve_descriptor(arg)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            ds = parse_descriptor(path)
    except DescriptorError as err:
        raise CliError("E_PARSE", EXIT_USAGE, str(err)) from None
    for w in caught:
        print(f"prizecorr: warning: {w.message}", file=sys.stderr)
    return ds, path, [str(w.message) for w in caught]


def _dataset_echo(ds, path):
    return {
        "path": str(path),
        "label": ds.label,
        "pool_size": ds.pool_size,
        "winner_count": ds.winner_count,
        "observed_ranks": list(ds.observed_ranks),
        "censored_count": ds.censored_count,
        "list_cutoff_rank": ds.list_cutoff_rank,
    }


def cmd_thresholds(args, out):
    ds, path, warns = _load(args.descriptor)
    x_c, y_c = derive_thresholds(ds)
    report = _base_report("thresholds")
    report.update(dataset=_dataset_echo(ds, path), thresholds={"x_c": x_c, "y_c": y_c},
                  warnings=warns)
    _emit(report, out)


def cmd_estimate(args, out):
    ds, path, warns = _load(args.descriptor)
    report = _base_report("estimate")
    report.update(dataset=_dataset_echo(ds, path), warnings=warns)
    x_c, y_c = derive_thresholds(ds)
    report["thresholds"] = {"x_c": x_c, "y_c": y_c}

    method = args.method
    if method == "exceedance":
        est = infer_by_exceedance(ds)
    elif method == "mle":
        est = mle(ds, args.grid_step or 0.01)
    else:
        step = args.grid_step or 0.001
        pg, est = posterior(ds, step, args.credible_level)
        if args.out_posterior:
            _write_csv(args.out_posterior, ["r", "posterior_mass"],
                       zip(map(float, pg.r_values), map(float, pg.posterior_masses)))
            report["posterior_csv"] = str(args.out_posterior)
    report["estimate"] = est.to_dict()
    _emit(report, out)


def _parse_scan(text):
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise CliError("E_USAGE", EXIT_USAGE, f"--scan expects LO:HI:STEP, got {text!r}") from None
    return lo, hi, step


def cmd_simulate(args, out):
    try:
        cfg = SimConfig(args.pool, args.winners, args.r, args.coupling, args.reps, args.seed)
    except ValueError as err:
        raise CliError("E_CONFIG", EXIT_USAGE, str(err)) from None
    res = overlap_experiment(cfg, workers=args.workers)
    report = _base_report("simulate")
    report["config"] = {"pool": cfg.pool_size, "winners": cfg.winner_count, "r": cfg.r,
                        "coupling": cfg.coupling, "reps": cfg.replications}
    report["seed"] = cfg.seed
    report["overlap"] = {
        "histogram": {str(k): int(c) for k, c in enumerate(res.histogram)},
        "mean_overlap": res.mean_overlap,
        "mode": res.mode,
    }
    if args.out:
        _write_csv(args.out, ["k", "count", "fraction"],
                   ((k, int(c), c / res.replications) for k, c in enumerate(res.histogram)))
        report["histogram_csv"] = str(args.out)

    if args.observed_overlap is not None:
        k = args.observed_overlap
        if not 0 <= k <= cfg.winner_count:
            raise CliError("E_CONFIG", EXIT_USAGE, f"--observed-overlap must be in [0, {cfg.winner_count}]")
        report["overlap"]["observed_overlap"] = k
        report["overlap"]["fraction_at_observed"] = res.fraction(k)
    if args.scan:
        if args.observed_overlap is None:
            raise CliError("E_USAGE", EXIT_USAGE, "--scan needs --observed-overlap")
        lo, hi, step = _parse_scan(args.scan)
        try:
            scan = profile_likelihood_scan(cfg.pool_size, cfg.winner_count, args.observed_overlap,
                                           lo, hi, step, cfg.replications, cfg.seed, cfg.coupling,
                                           workers=args.workers)
        except ValueError as err:
            raise CliError("E_CONFIG", EXIT_USAGE, str(err)) from None
        best = max(scan, key=lambda t: t[1])
        report["scan"] = {"lo": lo, "hi": hi, "step": step, "argmax_r": best[0],
                          "max_fraction": float(best[1]),
                          "points": [{"r": r, "fraction": float(f)} for r, f in scan]}
        if args.out_scan:
            _write_csv(args.out_scan, ["r", "fraction_matching"], ((r, float(f)) for r, f in scan))
            report["scan_csv"] = str(args.out_scan)
    _emit(report, out)


def build_parser():
    p = _Parser(prog="prizecorr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"prizecorr {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("thresholds", help="selection and list thresholds in z-units")
    t.add_argument("descriptor", help="descriptor path or bundled name (nobel, abel, fields)")
    t.set_defaults(func=cmd_thresholds)

    e = sub.add_parser("estimate", help="estimate r from a descriptor")
    e.add_argument("descriptor", help="descriptor path or bundled name (nobel, abel, fields)")
    e.add_argument("--method", choices=("mle", "posterior", "exceedance"), required=True)
    e.add_argument("--grid-step", type=float, default=None,
                   help="r grid step, at most 0.01 (default 0.01 for mle, 0.001 for posterior)")
    e.add_argument("--credible-level", type=float, default=0.95)
    e.add_argument("--out-posterior", metavar="CSV", default=None)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("simulate", help="Monte Carlo top-M overlap experiment")
    s.add_argument("--pool", type=int, required=True)
    s.add_argument("--winners", type=int, required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--coupling", choices=(GAUSSIAN, MIXTURE), default=GAUSSIAN)
    s.add_argument("--reps", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--observed-overlap", type=int, default=None)
    s.add_argument("--scan", metavar="LO:HI:STEP", default=None)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", metavar="CSV", default=None, help="overlap histogram CSV")
    s.add_argument("--out-scan", metavar="CSV", default=None, help="profile scan CSV")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "grid_step", None) is not None and not 0 < args.grid_step <= 0.01:
            raise CliError("E_USAGE", EXIT_USAGE, "--grid-step must lie in (0, 0.01]")
        if getattr(args, "credible_level", None) is not None and not 0 < args.credible_level < 1:
            raise CliError("E_USAGE", EXIT_USAGE, "--credible-level must lie in (0, 1)")
        args.func(args, out)
    except CliError as err:
        return _fail(err.code, err.status, str(err))
    except MethodDataError as err:
        return _fail("E_DATA", EXIT_DATA, str(err))
    except DatasetError as err:
        return _fail("E_PARSE", EXIT_USAGE, str(err))
    except (NoSolutionError, EstimationError, ConvergenceError, DomainError) as err:
        return _fail("E_NUMERIC", EXIT_NUMERIC, f"{args.command}: {err}")
    return 0


def _fail(code, status, message):
    line = " ".join(str(message).split())
    print(f"prizecorr: error[{code}]: {line}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
