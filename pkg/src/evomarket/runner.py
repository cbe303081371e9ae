"""Scenario execution across seeds, with per-seed error collection."""

from __future__ import annotations

import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

from .io import HASH_PREFIX, emit_tables, file_digest, write_json
from .pipelines import run_seed
from .record import RunRecord
from .scenario import Scenario


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from . import __version__

        return __version__


@dataclass
class SeedOutcome:
    seed: int
    record: RunRecord | None
    error: str | None = None
    error_type: str | None = None


@dataclass
class RunResult:
    scenario: Scenario
    outcomes: list[SeedOutcome] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    @property
    def records(self) -> list[RunRecord]:
        return [o.record for o in self.outcomes if o.record is not None]

    @property
    def failed(self) -> list[SeedOutcome]:
        return [o for o in self.outcomes if o.error is not None]


def _run_one(scen: Scenario, seed: int) -> SeedOutcome:
    try:
        return SeedOutcome(seed, run_seed(scen, seed))
    except Exception as exc:  # one seed failing must not abort the others
        tb = traceback.format_exception_only(type(exc), exc)[-1].strip()
        return SeedOutcome(seed, None, tb, type(exc).__name__)


def run_scenario(scen: Scenario, out=None, threads: int = 1) -> RunResult:
    """Run every seed of ``scen``; write a run directory when ``out`` is given.

    Seeds run in worker processes when ``threads > 1``. Results do not depend
    on the number of workers.
    """
    seeds = list(scen.seeds)
    if threads > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(seeds))) as pool:
            outcomes = list(pool.map(_run_one, [scen] * len(seeds), seeds))
    else:
        outcomes = [_run_one(scen, s) for s in seeds]
    result = RunResult(scen, outcomes)
    result.manifest = _manifest(scen, outcomes)
    if out is not None:
        write_run_dir(result, out)
    return result


def _manifest(scen: Scenario, outcomes) -> dict:
    return {
        "scenario_hash": scen.hash,
        "name": scen.name,
        "code_version": code_version(),
        "outputs": list(scen.outputs),
        "seeds": [{"seed": o.seed, "status": "ok" if o.error is None else "error",
                   "error": o.error, "error_type": o.error_type, "files": {}} for o in outcomes],
    }


def write_run_dir(result: RunResult, out) -> Path:
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    scen = result.scenario
    (d / "scenario.toml").write_text(HASH_PREFIX + scen.hash + "\n" + scen.dumps(), encoding="utf-8")
    timing = {}
    for entry, o in zip(result.manifest["seeds"], result.outcomes):
        if o.record is None:
            continue
        sub = d / f"seed-{o.seed}"
        paths = emit_tables(o.record, sub)
        entry["files"] = {str(p.relative_to(d)): file_digest(p) for p in paths}
        timing[str(o.seed)] = o.record.provenance
    write_json(d / "manifest.json", result.manifest)
    write_json(d / "timing.json", {"scenario_hash": scen.hash, "seeds": timing})
    return d
