"""Run records and their CSV / JSON-lines persistence."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

CSV_HEADER = ("model,strategy,n_variants,steps,rep,wall_s,cpu_part_s,accel_part_s,"
              "accel_fraction,cpu_util_mean,accel_util_mean,degraded,timestamp")
CSV_COLUMNS = CSV_HEADER.split(",")
ERROR_MARK = "error"

_FLOATS = ("wall", "t_cpu_part", "t_accel_part", "accel_fraction", "cpu_util_mean", "accel_util_mean")


@dataclass(frozen=True)
class RunRecord:
    model: str
    strategy: str
    n_variants: int
    steps: int
    rep_index: int
    wall: float
    t_cpu_part: float
    t_accel_part: float
    accel_fraction: float
    cpu_util_mean: float
    accel_util_mean: float
    degraded: bool
    timestamp: str
    error: str | None = None          # JSON-lines only; CSV keeps just the marker
    checksum_digest: int | None = None  # JSON-lines only

    @property
    def key(self) -> tuple:
        return (self.model, self.strategy, self.n_variants, self.steps, self.rep_index)

    @property
    def ok(self) -> bool:
        return self.error is None


def fmt_float(x: float) -> str:
    return f"{x:.6g}"


def quantize(x: float) -> float:
    """The value a float takes after a CSV round trip."""
    return float(fmt_float(x))


def quantized(record: RunRecord) -> RunRecord:
    """`record` as CSV persistence will return it."""
    kw = {f.name: getattr(record, f.name) for f in fields(record)}
    for name in _FLOATS:
        kw[name] = quantize(kw[name])
    kw["checksum_digest"] = None
    if record.error is not None:
        kw["error"] = ERROR_MARK
        kw["degraded"] = False  # the marker takes the degraded column
    return RunRecord(**kw)


def _csv_row(r: RunRecord) -> list[str]:
    return [r.model, r.strategy, str(r.n_variants), str(r.steps), str(r.rep_index),
            fmt_float(r.wall), fmt_float(r.t_cpu_part), fmt_float(r.t_accel_part),
            fmt_float(r.accel_fraction), fmt_float(r.cpu_util_mean), fmt_float(r.accel_util_mean),
            ERROR_MARK if r.error is not None else ("1" if r.degraded else "0"), r.timestamp]


def _from_csv_row(row: dict) -> RunRecord:
    flag = row["degraded"]
    return RunRecord(
        model=row["model"], strategy=row["strategy"], n_variants=int(row["n_variants"]),
        steps=int(row["steps"]), rep_index=int(row["rep"]), wall=float(row["wall_s"]),
        t_cpu_part=float(row["cpu_part_s"]), t_accel_part=float(row["accel_part_s"]),
        accel_fraction=float(row["accel_fraction"]), cpu_util_mean=float(row["cpu_util_mean"]),
        accel_util_mean=float(row["accel_util_mean"]), degraded=flag == "1",
        timestamp=row["timestamp"], error=ERROR_MARK if flag == ERROR_MARK else None,
    )


def _json_line(r: RunRecord) -> str:
    d = asdict(r)
    for name in _FLOATS:
        if not math.isfinite(d[name]):
            d[name] = None
    return json.dumps(d, sort_keys=True)


def _from_json(d: dict) -> RunRecord:
    for name in _FLOATS:
        if d.get(name) is None:
            d[name] = math.nan
    return RunRecord(**d)


def _csv_text(records, header: bool) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        buf.write(CSV_HEADER + "\n")
    for r in records:
        w.writerow(_csv_row(r))
    return buf.getvalue()


def write_records(records, path: str | os.PathLike, format: str = "csv") -> None:
    """Write all records to `path` (overwrites). `format` is ``csv`` or ``jsonl``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "csv":
        text = _csv_text(records, header=True)
    elif format == "jsonl":
        text = "".join(_json_line(r) + "\n" for r in records)
    else:
        raise ValueError(f"format must be 'csv' or 'jsonl', got {format!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_records(path: str | os.PathLike) -> list[RunRecord]:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        if path.suffix == ".jsonl":
            return [_from_json(json.loads(line)) for line in fh if line.strip()]
        head = fh.readline().rstrip("\n")
        if head != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {head!r}")
        return [_from_csv_row(dict(zip(CSV_COLUMNS, row))) for row in csv.reader(fh)]


class RecordWriter:
    """Appends each record to ``results.csv`` and ``results.jsonl`` as it arrives.

    Every row is flushed and fsynced before the next cell starts, so an
    interrupted sweep leaves only complete rows behind.
    """

    def __init__(self, out_dir: str | os.PathLike):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.csv_path = self.out_dir / "results.csv"
        self.jsonl_path = self.out_dir / "results.jsonl"
        fresh = not self.csv_path.exists() or self.csv_path.stat().st_size == 0
        self._csv = open(self.csv_path, "a", encoding="utf-8", newline="")
        self._jsonl = open(self.jsonl_path, "a", encoding="utf-8", newline="")
        if fresh:
            self._csv.write(CSV_HEADER + "\n")
            self._sync(self._csv)

    @staticmethod
    def _sync(fh) -> None:
        fh.flush()
        os.fsync(fh.fileno())

    def append(self, record: RunRecord) -> None:
        self._csv.write(_csv_text([record], header=False))
        self._jsonl.write(_json_line(record) + "\n")
        self._sync(self._csv)
        self._sync(self._jsonl)

    def close(self) -> None:
        self._csv.close()
        self._jsonl.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
