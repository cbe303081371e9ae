"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 verification mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import fitting
from .errors import ConfigError
from .io import read_csv, verify_run
from .presets import PRESETS, load_preset
from .runner import run_scenario
from .scenario import Scenario, load_scenario

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_MISMATCH = 0, 1, 2, 3

FITTERS = {
    fitting.LOGNORMAL: lambda x, a: fitting.fit_lognormal(x, n_boot=a.boot, seed=a.fit_seed),
    fitting.PARETO_TAIL: lambda x, a: fitting.fit_pareto_tail(x, tail_frac=a.tail_frac),
    fitting.LAPLACE: lambda x, a: fitting.fit_laplace(x, n_boot=a.boot, seed=a.fit_seed),
    fitting.GAUSSIAN: lambda x, a: fitting.fit_gaussian(x),
    fitting.SUBBOTIN: lambda x, a: fitting.fit_subbotin(x, n_boot=a.boot, seed=a.fit_seed),
    fitting.EQ72: lambda x, a: fitting.fit_eq72(x, n_boot=a.boot, seed=a.fit_seed),
}


def _seeds(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--seeds must be comma-separated integers, got {text!r}",
                          field="seeds") from None


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evomarket", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--seeds", help="comma-separated seeds overriding the scenario's list")
        sp.add_argument("--out", help="run directory to write")
        sp.add_argument("--threads", type=int, default=1, help="worker processes across seeds")
        sp.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True,
                        help="reject unknown keys (default) or only warn")

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("scenario")
    common(r)

    pr = sub.add_parser("preset", help="run a built-in scenario, or list them")
    pr.add_argument("name", nargs="?", help=f"one of {', '.join(sorted(PRESETS))}")
    pr.add_argument("--print", dest="show", action="store_true", help="print the preset's TOML")
    common(pr)

    f = sub.add_parser("fit", help="fit a distribution family to a table column")
    f.add_argument("table")
    f.add_argument("--family", required=True, choices=sorted(FITTERS))
    f.add_argument("--column", help="column to fit (default: last numeric column)")
    f.add_argument("--boot", type=int, default=0, help="bootstrap replicates for the KS p-value")
    f.add_argument("--fit-seed", type=int, default=0)
    f.add_argument("--tail-frac", type=float, default=0.05)

    v = sub.add_parser("verify", help="recompute and check the hashes of a run directory")
    v.add_argument("run_dir")
    return p


def _scalars(d: dict, prefix: str = "") -> dict:
    # nested metrics flattened to dotted keys; arrays are left to the CSV tables
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_scalars(v, f"{prefix}{k}."))
        elif isinstance(v, (int, float, bool, str, np.integer, np.floating, np.bool_)):
            out[prefix + str(k)] = v.item() if hasattr(v, "item") else v
    return out


def _summary(result) -> dict:
    out = {"scenario_hash": result.scenario.hash, "seeds": {}}
    for o in result.outcomes:
        if o.record is None:
            out["seeds"][str(o.seed)] = {"error": o.error}
        else:
            out["seeds"][str(o.seed)] = _scalars(o.record.metrics)
    return out


def _execute(scen: Scenario, args) -> int:
    seeds = _seeds(args.seeds)
    if seeds is not None:
        scen = scen.with_seeds(seeds)
    result = run_scenario(scen, out=args.out, threads=max(1, args.threads))
    print(json.dumps(_summary(result), indent=2, default=str))
    for o in result.failed:
        print(f"seed {o.seed} failed: {o.error}", file=sys.stderr)
    return EXIT_RUNTIME if result.failed else EXIT_OK


def _fit(args) -> int:
    names, cols = read_csv(args.table)
    numeric = [n for n in names if cols[n].dtype != object]
    column = args.column or (numeric[-1] if numeric else None)
    if column is None or column not in cols:
        raise ConfigError(f"column {column!r} not found in {args.table}; have {names}",
                          field="column")
    x = np.asarray(cols[column], dtype=float)
    x = x[np.isfinite(x)]
    fit = FITTERS[args.family](x, args)
    print(json.dumps({"column": column, **fit.as_row()}, indent=2, default=str))
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "run":
            return _execute(load_scenario(args.scenario, strict=args.strict), args)
        if args.verb == "preset":
            if args.name is None:
                print("\n".join(sorted(PRESETS)))
                return EXIT_OK
            if args.name not in PRESETS:
                raise ConfigError(f"unknown preset {args.name!r}; known: {sorted(PRESETS)}")
            if args.show:
                print(PRESETS[args.name].lstrip(), end="")
                return EXIT_OK
            return _execute(load_preset(args.name), args)
        if args.verb == "fit":
            return _fit(args)
        if args.verb == "verify":
            problems = verify_run(args.run_dir)
            for line in problems:
                print(line, file=sys.stderr)
            if not problems:
                print(f"{args.run_dir}: ok")
            return EXIT_MISMATCH if problems else EXIT_OK
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_INVALID

