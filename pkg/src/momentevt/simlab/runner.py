"""Run an experiment across its grid and write ``records.csv`` / ``summary.json``."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

from .. import __version__
from .config import ExperimentConfig
from .experiments import PAYLOAD_COLUMNS, ReplicationRecord, run_replication, summarize
from .seeding import derive_seed

log = logging.getLogger(__name__)

BASE_COLUMNS = ("experiment", "n", "replication", "seed", "status")


def _task(cfg: ExperimentConfig, item: tuple[int, int]) -> ReplicationRecord:
    n, rep = item
    return run_replication(cfg, n, rep, derive_seed(cfg.master_seed, cfg.experiment, n, rep))


def run_records(cfg: ExperimentConfig, threads: int | None = None) -> list[ReplicationRecord]:
    """All replication records in (n, replication) order.

    Each replication draws from its own generator seeded by
    :func:`derive_seed`, so the output does not depend on the worker count.
    """
    workers = threads or cfg.threads
    items = [(n, r) for n in cfg.n_grid for r in range(cfg.replications)]
    work = partial(_task, cfg)
    if workers <= 1 or len(items) <= 1:
        return [work(it) for it in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, items, chunksize=chunk))


def run_experiment(cfg: ExperimentConfig, threads: int | None = None):
    log.info("running %s: grid=%s reps=%d", cfg.experiment, cfg.n_grid, cfg.replications)
    records = run_records(cfg, threads)
    return records, summarize(cfg, records)


def _fmt(v) -> str:
    if isinstance(v, float):
        if v.is_integer() and abs(v) < 2**53:
            return str(int(v))
        return format(v, ".17g")
    return str(v)


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def emit(
    records: list[ReplicationRecord], report: dict, out_dir: str | Path, cfg: ExperimentConfig
) -> int:
    """Write both output files; returns the process exit code (0 iff every verdict passed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    columns = BASE_COLUMNS + PAYLOAD_COLUMNS[cfg.experiment]
    with open(out / "records.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for r in records:
            row = [r.experiment, r.n, r.replication, r.seed, r.status]
            row += [_fmt(r.payload[c]) for c in PAYLOAD_COLUMNS[cfg.experiment]]
            writer.writerow(row)

    summary = {
        "tool": {"name": "momentevt", "version": __version__},
        "config": cfg.echo(),
        **report,
    }
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_json_safe(summary), fh, indent=2, allow_nan=False)
        fh.write("\n")
    return 0 if report["all_passed"] else 1
