"""Run directories: CSV tables, JSON metrics and manifest, and hash verification.

Every data file embeds the scenario hash: CSV files on a leading
``# scenario_hash: <hex>`` comment line, JSON files under ``scenario_hash``.
Wall-clock timings go to ``timing.json`` only, so reruns produce byte-identical
data files.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .record import RunRecord, Table
from .scenario import loads

HASH_PREFIX = "# scenario_hash: "

SNAPSHOT_UNITS = {"tau": "short-time", "t": "long-time", "y_t": "density/time",
                  "mu_bar": "real price", "psi": "density", "N": "count", "N_f": "count",
                  "R_t": "real price*density/time", "C_t": "real price*density/time",
                  "G_t": "real price*density/time"}
PRODUCT_UNITS = {"id": "", "y": "density/time", "z": "density", "mu": "real price",
                 "f": "1/short-time", "alpha": "1"}
FIRM_UNITS = {"id": "", "x": "density/time"}
FIT_COLUMNS = ["pipeline", "family", "param", "value", "stderr", "n", "loglik", "ks", "ks_pvalue",
               "converged"]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _header(name: str, unit: str) -> str:
    return f"{name} [{unit}]" if unit else name


def write_csv(path: Path, scenario_hash: str, columns: list[str], units: dict[str, str],
              rows: Iterable[Iterable]) -> None:
    buf = _io.StringIO()
    buf.write(HASH_PREFIX + scenario_hash + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([_header(c, units.get(c, "")) for c in columns])
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    try:
        path.write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _clean(o):
    # NaN and inf are not valid JSON; write them as strings
    if isinstance(o, float) and not math.isfinite(o):
        return repr(o)
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return _clean(o.item())
    return o


def write_json(path: Path, obj) -> None:
    text = json.dumps(_clean(obj), indent=2, sort_keys=True, default=_json_default) + "\n"
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def emit_tables(record: RunRecord, out_dir, which=("timeseries", "cross_section", "fits",
                                                    "tables", "metrics")) -> list[Path]:
    """Write the record's tables into ``out_dir``; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = record.scenario_hash
    written = []
    if "timeseries" in which:
        cols = list(SNAPSHOT_UNITS)
        rows = ([s.aggregates()[c] for c in cols] for s in record.snapshots)
        p = out / "timeseries.csv"
        write_csv(p, h, cols, SNAPSHOT_UNITS, rows)
        written.append(p)
    if "cross_section" in which:
        fin = record.final
        p = out / "products.csv"
        rows = [] if fin is None else zip(fin.ids, fin.y, fin.z, fin.mu, fin.f, fin.alpha)
        write_csv(p, h, list(PRODUCT_UNITS), PRODUCT_UNITS, rows)
        written.append(p)
        p = out / "firms.csv"
        rows = [] if fin is None else zip(fin.firm_ids, fin.firm_x)
        write_csv(p, h, list(FIRM_UNITS), FIRM_UNITS, rows)
        written.append(p)
    if "fits" in which:
        p = out / "fits.csv"
        write_csv(p, h, FIT_COLUMNS, {"value": "param units", "stderr": "param units"},
                  _fit_rows(record.fits))
        written.append(p)
    if "tables" in which:
        for name, table in sorted(record.tables.items()):
            p = out / f"{name}.csv"
            cols = list(table.columns)
            write_csv(p, h, cols, table.units, zip(*[table.columns[c] for c in cols]))
            written.append(p)
    if "metrics" in which:
        p = out / "metrics.json"
        write_json(p, {"scenario_hash": h, "seed": record.seed, "metrics": record.metrics})
        written.append(p)
    return written


def _fit_rows(fits):
    for item in fits:
        pipeline, fit = item if isinstance(item, tuple) else ("", item)
        ks = fit.gof.ks if fit.gof else float("nan")
        pv = fit.gof.pvalue if fit.gof else float("nan")
        for k, v in fit.params.items():
            yield [pipeline, fit.family, k, v, fit.stderr.get(k, float("nan")), fit.n, fit.loglik,
                   ks, pv, fit.converged]


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def embedded_hash(path: Path) -> str | None:
    path = Path(path)
    if path.suffix == ".csv" or path.suffix == ".toml":
        with path.open(encoding="utf-8") as fh:
            first = fh.readline().rstrip("\n")
        return first[len(HASH_PREFIX):] if first.startswith(HASH_PREFIX) else None
    if path.suffix == ".json":
        try:
            return json.loads(path.read_text(encoding="utf-8")).get("scenario_hash")
        except (json.JSONDecodeError, AttributeError):
            return None
    return None


def read_csv(path) -> tuple[list[str], dict[str, np.ndarray]]:
    """Read a table written by :func:`write_csv` (or any CSV with one header row).

    Returns the column names without unit suffixes and the columns, numeric
    where every entry parses as a float.
    """
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
             if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        return [], {}
    names = [h.split(" [", 1)[0].strip() for h in header]
    raw = list(reader)
    cols: dict[str, np.ndarray] = {}
    for j, n in enumerate(names):
        vals = [r[j] for r in raw if j < len(r)]
        try:
            cols[n] = np.array([float(v) for v in vals])
        except ValueError:
            cols[n] = np.array(vals, dtype=object)
    return names, cols


def verify_run(run_dir) -> list[str]:
    """Check a run directory; returns a list of mismatch descriptions (empty if clean).

    The scenario hash is recomputed from ``scenario.toml`` and compared with the
    manifest and with the hash embedded in every data file; file digests are
    compared with those recorded in the manifest.
    """
    d = Path(run_dir)
    problems = []
    man_path = d / "manifest.json"
    scen_path = d / "scenario.toml"
    if not man_path.exists():
        return [f"missing {man_path}"]
    if not scen_path.exists():
        return [f"missing {scen_path}"]
    manifest = json.loads(man_path.read_text(encoding="utf-8"))
    text = scen_path.read_text(encoding="utf-8")
    h = loads(text).hash
    if manifest.get("scenario_hash") != h:
        problems.append(f"manifest hash {manifest.get('scenario_hash')} != recomputed {h}")
    if embedded_hash(scen_path) != h:
        problems.append(f"{scen_path}: embedded hash differs from recomputed {h}")
    for entry in manifest.get("seeds", []):
        for rel, digest in sorted(entry.get("files", {}).items()):
            p = d / rel
            if not p.exists():
                problems.append(f"missing {p}")
                continue
            if embedded_hash(p) != h:
                problems.append(f"{p}: embedded hash {embedded_hash(p)} != {h}")
            if file_digest(p) != digest:
                problems.append(f"{p}: content digest differs from manifest")
    return problems
