"""Sweep runner over models x variants x steps x repetitions x strategies."""
from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .. import monitor
from ..executor import BatchRequest, Executors, run_batch_cpu, run_batch_synthetic
from ..scheduler import CalibrationProfile, calibrate, plan_allocation, run_hybrid
from ..simkernel import ModelKind, fnv1a64, mix64
from .config import SweepConfig
from .records import RecordWriter, RunRecord, read_records

log = logging.getLogger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def results_digest(results) -> int:
    """FNV-1a over the ordered per-variant checksums of a batch."""
    return fnv1a64(b"".join(struct.pack("<Q", r.checksum) for r in results))


def jitter_key(kind: ModelKind, n: int, steps: int, rep: int) -> int:
    order = list(ModelKind).index(kind)
    return mix64((order << 56) ^ (n << 24) ^ (steps << 8) ^ rep)


@dataclass
class SweepResults:
    records: list
    config: SweepConfig | None = None
    csv_path: Path | None = None
    jsonl_path: Path | None = None
    profiles: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "SweepResults":
        path = Path(path)
        return cls(read_records(path), csv_path=path if path.suffix == ".csv" else None)

    def ok_records(self) -> list:
        return [r for r in self.records if r.ok]

    def models(self) -> list[str]:
        return list(dict.fromkeys(r.model for r in self.records))

    def select(self, model=None, strategy=None, steps=None, n_variants=None) -> list:
        out = []
        for r in self.ok_records():
            if model is not None and r.model != str(model):
                continue
            if strategy is not None and r.strategy != strategy:
                continue
            if steps is not None and r.steps != steps:
                continue
            if n_variants is not None and r.n_variants != n_variants:
                continue
            out.append(r)
        return out

    def stats(self, model, strategy, steps, value: str = "wall") -> dict:
        """n_variants -> monitor.Stats over repetitions of one (model, strategy, steps)."""
        groups: dict[int, list] = {}
        for r in self.select(model, strategy, steps):
            groups.setdefault(r.n_variants, []).append(getattr(r, value))
        return {n: monitor.summarize(v) for n, v in sorted(groups.items())}

    def stats_by_steps(self, model, strategy, n_variants) -> dict:
        groups: dict[int, list] = {}
        for r in self.select(model, strategy, n_variants=n_variants):
            groups.setdefault(r.steps, []).append(r.wall)
        return {s: monitor.summarize(v) for s, v in sorted(groups.items())}


def _done_keys(csv_path: Path) -> set:
    if not csv_path.exists() or csv_path.stat().st_size == 0:
        return set()
    return {r.key for r in read_records(csv_path)}


def _error_record(kind, strategy, n, steps, rep, exc) -> RunRecord:
    return RunRecord(str(kind), strategy, n, steps, rep, math.nan, math.nan, math.nan, math.nan,
                     math.nan, math.nan, False, _now(), error=f"{type(exc).__name__}: {exc}")


def run_sweep(config: SweepConfig, resume: bool = False,
              progress: Callable[[RunRecord], None] | None = None) -> SweepResults:
    """Execute every cell of `config`, appending one row per (cell, rep, strategy).

    With ``resume=True`` rows already present in ``results.csv`` are skipped;
    otherwise existing output files are replaced.
    """
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "results.csv"
    if resume:
        done = _done_keys(csv_path)
    else:
        done = set()
        for p in (csv_path, out / "results.jsonl"):
            if p.exists():
                p.unlink()

    records: list[RunRecord] = []
    profiles: dict = {}
    with RecordWriter(out) as writer:
        for kind in config.models:
            device = config.device_for(kind)
            grid = config.grid(kind)
            for n in grid:
                for steps in config.steps_list:
                    for rep in range(config.repetitions):
                        for strategy in config.strategies:
                            key = (str(kind), strategy, n, steps, rep)
                            if key in done:
                                continue
                            ex = Executors(device=device, workers=config.workers, mode=config.mode,
                                           jitter_key=jitter_key(kind, n, steps, rep))
                            try:
                                rec = _run_cell(config, kind, strategy, n, steps, rep, ex,
                                                profiles, max(grid))
                            except Exception as exc:  # recorded and the sweep moves on
                                log.error("cell %s failed: %s", key, exc)
                                rec = _error_record(kind, strategy, n, steps, rep, exc)
                            writer.append(rec)
                            records.append(rec)
                            if progress:
                                progress(rec)
    if resume:
        records = read_records(csv_path)
    return SweepResults(records, config, csv_path, out / "results.jsonl", profiles)


def _run_cell(config: SweepConfig, kind, strategy, n, steps, rep, ex: Executors,
              profiles: dict, largest_n: int) -> RunRecord:
    request = BatchRequest(kind, tuple(range(n)), steps)
    if strategy == "cpu_only":
        batch = run_batch_cpu(request, config.workers)
        return RunRecord(str(kind), strategy, n, steps, rep, batch.wall_time, batch.wall_time, 0.0,
                         0.0, monitor.trace_mean(batch.utilization_trace), 0.0, False, _now(),
                         checksum_digest=results_digest(batch.results))
    if strategy == "accel_only":
        batch = run_batch_synthetic(request, ex.device, ex.mode, ex.jitter_key)
        return RunRecord(str(kind), strategy, n, steps, rep, batch.wall_time, 0.0, batch.wall_time,
                         1.0, 0.0, monitor.trace_mean(batch.utilization_trace), False, _now(),
                         checksum_digest=results_digest(batch.results))
    if strategy == "hybrid":
        pkey = (kind, steps)
        if pkey not in profiles:
            probe = config.probe_n or largest_n
            profiles[pkey] = calibrate(kind, steps, probe, ex)
        profile: CalibrationProfile = profiles[pkey]
        plan = plan_allocation(profile, n, config.floor_threshold)
        res = run_hybrid(plan, request, ex, config.orchestration_overhead_s)
        return RunRecord(str(kind), strategy, n, steps, rep, res.wall_combined, res.t_cpu_part,
                         res.t_accel_part, plan.accel_fraction, res.cpu_util_mean(),
                         res.accel_util_mean(), res.degraded, _now(),
                         checksum_digest=results_digest(res.results))
    raise ValueError(f"unknown strategy {strategy!r}")
