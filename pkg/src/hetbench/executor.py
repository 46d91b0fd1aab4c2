"""Batch executors: a real multi-worker CPU back-end and a synthetic accelerator.

Both return :class:`BatchResult` with results in input order.  The synthetic
accelerator computes its results with the same kernel (so checksums agree
across back-ends) but reports wall time from a constant-then-linear law::

    T(N, S) = startup + S * step_wave_cost * ceil(N / capacity)
"""
from __future__ import annotations

import atexit
import enum
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import monitor
from .simkernel import (MASK64, ModelKind, NumericalBlowup, mix64,
                        simulate_batch)


class Mode(str, enum.Enum):
    MODELED = "modeled"
    EMULATED = "emulated"

    @classmethod
    def parse(cls, value: "str | Mode") -> "Mode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"mode must be 'modeled' or 'emulated', got {value!r}") from None

    def __str__(self) -> str:
        return self.value


class BatchFailed(NumericalBlowup):
    """Some variants of a batch blew up; the rest completed.

    ``failures`` maps seed -> NumericalBlowup and ``results`` holds the
    completed VariantResults (``None`` at failed positions).
    """

    def __init__(self, failures: dict, results: list):
        first = next(iter(failures.values()))
        seeds = ", ".join(str(s) for s in failures)
        super().__init__(f"{len(failures)} variant(s) blew up (seeds: {seeds}): {first}",
                         seed=first.seed, step=first.step)
        self.failures = failures
        self.results = results


@dataclass(frozen=True)
class BatchRequest:
    kind: ModelKind
    seeds: tuple
    steps: int

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("BatchRequest needs at least one seed")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")

    def subset(self, seeds: Sequence[int]) -> "BatchRequest":
        return BatchRequest(self.kind, tuple(seeds), self.steps)


@dataclass(frozen=True)
class BatchResult:
    results: tuple
    wall_time: float
    utilization_trace: tuple = ()

    def checksums(self) -> list[int]:
        return [r.checksum for r in self.results]


@dataclass(frozen=True)
class DevicePerfModel:
    startup: float
    capacity: int
    step_wave_cost: float
    jitter_fraction: float = 0.0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        if self.startup < 0:
            raise ValueError("startup must be >= 0")
        if not self.step_wave_cost > 0:
            raise ValueError("step_wave_cost must be > 0")
        if not 0.0 <= self.jitter_fraction < 1.0:
            raise ValueError("jitter_fraction must be in [0, 1)")

    @classmethod
    def from_mapping(cls, data: dict) -> "DevicePerfModel":
        known = {"startup_s", "capacity", "step_wave_cost_s", "jitter_fraction"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown device keys: {sorted(unknown)}")
        return cls(startup=float(data["startup_s"]), capacity=int(data["capacity"]),
                   step_wave_cost=float(data["step_wave_cost_s"]),
                   jitter_fraction=float(data.get("jitter_fraction", 0.0)))

    def to_mapping(self) -> dict:
        return {"startup_s": self.startup, "capacity": self.capacity,
                "step_wave_cost_s": self.step_wave_cost, "jitter_fraction": self.jitter_fraction}

    def waves(self, n: int) -> int:
        return -(-int(n) // self.capacity)

    def time(self, n: int, steps: int, jitter_key: int | None = None) -> float:
        """Modelled wall time for n variants of `steps` steps; zero variants cost nothing."""
        if n <= 0:
            return 0.0
        t = self.startup + steps * self.step_wave_cost * self.waves(n)
        if self.jitter_fraction > 0 and jitter_key is not None:
            u = (mix64(jitter_key & MASK64) >> 11) / float(1 << 53)
            t *= 1.0 + self.jitter_fraction * u
        return t

    def utilization(self, n: int) -> float:
        return min(100.0, 100.0 * n / self.capacity)


# --------------------------------------------------------------------------
# CPU back-end
# --------------------------------------------------------------------------

_POOLS: dict[int, ProcessPoolExecutor] = {}


def _pool(workers: int) -> ProcessPoolExecutor:
    pool = _POOLS.get(workers)
    if pool is None:
        pool = ProcessPoolExecutor(max_workers=workers)
        _POOLS[workers] = pool
    return pool


@atexit.register
def shutdown_pools() -> None:
    for pool in _POOLS.values():
        pool.shutdown(wait=False, cancel_futures=True)
    _POOLS.clear()


def _chunks(seeds: Sequence[int], parts: int) -> list[list[int]]:
    """Split into `parts` contiguous chunks whose sizes differ by at most one."""
    n = len(seeds)
    base, extra = divmod(n, parts)
    out, start = [], 0
    for i in range(parts):
        size = base + (1 if i < extra else 0)
        out.append(list(seeds[start:start + size]))
        start += size
    return [c for c in out if c]


def _run_chunk(kind: str, seeds: list[int], steps: int) -> list:
    return simulate_batch(kind, seeds, steps, errors="collect")


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def _finish(merged: list) -> tuple:
    failures = {r.seed: r for r in merged if isinstance(r, NumericalBlowup)}
    if failures:
        partial = [None if isinstance(r, NumericalBlowup) else r for r in merged]
        raise BatchFailed(failures, partial)
    return tuple(merged)


def run_batch_cpu(request: BatchRequest, workers: int = 1) -> BatchResult:
    """Run the batch on `workers` processes, one contiguous chunk each.

    Each worker simulates its chunk in lock-step through the vectorised kernel.
    ``workers == 1`` runs in the calling thread.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    chunks = _chunks(request.seeds, min(workers, len(request.seeds)))
    with monitor.Sampler() as sampler:
        t0 = time.perf_counter()
        if len(chunks) == 1:
            merged = _run_chunk(request.kind.value, chunks[0], request.steps)
        else:
            pool = _pool(workers)
            futures = [pool.submit(_run_chunk, request.kind.value, c, request.steps) for c in chunks]
            merged = [r for f in futures for r in f.result()]
        wall = time.perf_counter() - t0
    results = _finish(merged)
    return BatchResult(results, max(wall, 1e-9), tuple(sampler.cpu_trace()))


# --------------------------------------------------------------------------
# Synthetic accelerator
# --------------------------------------------------------------------------

def run_batch_synthetic(request: BatchRequest, model: DevicePerfModel,
                        mode: "Mode | str" = Mode.MODELED,
                        jitter_key: int | None = None) -> BatchResult:
    """Compute results with the kernel and report the device law's timing.

    Modeled mode returns immediately with ``wall_time = T(N, S)``.  Emulated
    mode also blocks until T(N, S) has elapsed since the call started, so a
    concurrent orchestrator observes a device that is busy for that long.
    """
    mode = Mode.parse(mode)
    n = len(request.seeds)
    modeled = model.time(n, request.steps, jitter_key)
    t0 = time.perf_counter()
    merged = simulate_batch(request.kind, request.seeds, request.steps, errors="collect")
    if mode is Mode.EMULATED:
        remaining = modeled - (time.perf_counter() - t0)
        if remaining > 0:
            time.sleep(remaining)
        wall = time.perf_counter() - t0
    else:
        wall = modeled
    results = _finish(merged)
    util = model.utilization(n)
    return BatchResult(results, wall, ((0.0, util), (wall, util)))


def executor_contract_check(kind: ModelKind, seeds: Sequence[int], steps: int,
                            workers: int = 1, model: DevicePerfModel | None = None,
                            synthetic: Callable[..., BatchResult] = run_batch_synthetic) -> bool:
    """True iff the CPU and synthetic back-ends agree checksum-for-checksum."""
    request = BatchRequest(kind, tuple(seeds), steps)
    model = model or DevicePerfModel(startup=0.0, capacity=1024, step_wave_cost=1e-6)
    cpu = run_batch_cpu(request, workers)
    acc = synthetic(request, model, Mode.MODELED)
    return ([r.seed for r in cpu.results] == [r.seed for r in acc.results]
            and cpu.checksums() == acc.checksums())


@dataclass
class Executors:
    """The pair of back-ends a hybrid run dispatches to.

    ``cpu`` and ``accel`` are callables taking a BatchRequest; the defaults
    wrap :func:`run_batch_cpu` and :func:`run_batch_synthetic`.  Tests swap in
    stubs to pin timings or inject failures.
    """
    device: DevicePerfModel
    workers: int = 1
    mode: Mode = Mode.MODELED
    cpu: Callable[[BatchRequest], BatchResult] | None = None
    accel: Callable[[BatchRequest], BatchResult] | None = None
    jitter_key: int | None = field(default=None)

    def __post_init__(self):
        self.mode = Mode.parse(self.mode)

    def run_cpu(self, request: BatchRequest) -> BatchResult:
        if self.cpu is not None:
            return self.cpu(request)
        return run_batch_cpu(request, self.workers)

    def run_accel(self, request: BatchRequest) -> BatchResult:
        if self.accel is not None:
            return self.accel(request)
        return run_batch_synthetic(request, self.device, self.mode, self.jitter_key)


def wall_law_points(model: DevicePerfModel, ns: Sequence[int], steps: int) -> list[tuple[int, float]]:
    """(n, modelled wall time) for each n; convenience for knee studies."""
    return [(int(n), model.time(int(n), steps)) for n in ns]


__all__ = [
    "BatchFailed", "BatchRequest", "BatchResult", "DevicePerfModel", "Executors", "Mode",
    "default_workers", "executor_contract_check", "run_batch_cpu",
    "run_batch_synthetic", "wall_law_points",
]
