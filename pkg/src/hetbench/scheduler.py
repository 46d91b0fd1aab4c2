"""Calibrate-then-split hybrid scheduling across the CPU and accelerator back-ends.

1. ``calibrate`` times a probe batch on each back-end, one after the other.
2. ``plan_allocation`` gives each back-end a share inversely proportional to
   its probe time: ``accel_fraction = t_cpu / (t_cpu + t_accel)``.
3. ``run_hybrid`` runs both shares concurrently and reports the combined wall
   clock including a fixed orchestration overhead.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

from .executor import BatchRequest, BatchResult, Executors, Mode
from .monitor import trace_mean
from .simkernel import ModelKind, NumericalBlowup

log = logging.getLogger(__name__)

DEFAULT_FLOOR_THRESHOLD = 0.5


@dataclass(frozen=True)
class CalibrationProfile:
    kind: ModelKind
    steps: int
    probe_n: int
    t_cpu: float
    t_accel: float
    failed: str | None = None  # "cpu" or "accel" when that back-end could not run the probe

    def __post_init__(self):
        if self.failed not in (None, "cpu", "accel"):
            raise ValueError(f"failed must be None, 'cpu' or 'accel', got {self.failed!r}")
        if self.failed is None and not (self.t_cpu > 0 and self.t_accel > 0):
            raise ValueError("calibration times must be positive")

    @property
    def ratio_accel_over_cpu(self) -> float:
        if self.failed == "accel":
            return math.inf
        if self.failed == "cpu":
            return 0.0
        return self.t_accel / self.t_cpu


@dataclass(frozen=True)
class AllocationPlan:
    n_total: int
    n_cpu: int
    n_accel: int
    target_fraction: float  # unrounded accelerator share the plan aims for

    def __post_init__(self):
        if self.n_cpu < 0 or self.n_accel < 0 or self.n_cpu + self.n_accel != self.n_total:
            raise ValueError(f"inconsistent plan: {self.n_cpu} + {self.n_accel} != {self.n_total}")

    @property
    def accel_fraction(self) -> float:
        return self.n_accel / self.n_total

    def describe(self) -> str:
        return f"cpu={self.n_cpu} accel={self.n_accel}"


@dataclass(frozen=True)
class HybridResult:
    wall_combined: float
    t_cpu_part: float
    t_accel_part: float
    overhead: float
    plan: AllocationPlan
    results: tuple
    cpu_batch: BatchResult | None
    accel_batch: BatchResult | None
    degraded: bool = False

    def cpu_util_mean(self) -> float:
        return trace_mean(self.cpu_batch.utilization_trace) if self.cpu_batch else 0.0

    def accel_util_mean(self) -> float:
        return trace_mean(self.accel_batch.utilization_trace) if self.accel_batch else 0.0


def _try(run: Callable[[BatchRequest], BatchResult], request: BatchRequest, label: str):
    try:
        return run(request), None
    except NumericalBlowup:
        raise
    except Exception as exc:  # any back-end fault other than a kernel blowup
        log.warning("%s back-end failed: %s", label, exc)
        return None, exc


def calibrate(kind: ModelKind, steps: int, probe_n: int, executors: Executors,
              repeats: int = 2) -> CalibrationProfile:
    """Time `probe_n` variants on the CPU, then on the accelerator.

    Each back-end is timed `repeats` times and the fastest run kept, so a
    cold first run (page faults, lazy allocation) does not skew the split.
    """
    if probe_n < 1:
        raise ValueError("probe_n must be >= 1")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    request = BatchRequest(kind, tuple(range(probe_n)), steps)

    def best(run, label):
        times = []
        for _ in range(repeats):
            res, err = _try(run, request, label)
            if err:
                return math.inf, err
            times.append(res.wall_time)
        return min(times), None

    t_cpu, cpu_err = best(executors.run_cpu, "cpu")
    t_acc, acc_err = best(executors.run_accel, "accel")
    if cpu_err and acc_err:
        raise RuntimeError(f"both back-ends failed during calibration: {cpu_err}; {acc_err}")
    failed = "cpu" if cpu_err else "accel" if acc_err else None
    return CalibrationProfile(kind=ModelKind.parse(kind), steps=steps, probe_n=probe_n,
                              t_cpu=t_cpu, t_accel=t_acc, failed=failed)


def reverse_ratio_fraction(t_cpu: float, t_accel: float) -> float:
    return t_cpu / (t_cpu + t_accel)


def plan_allocation(profile: CalibrationProfile, n_total: int,
                    floor_threshold: float = DEFAULT_FLOOR_THRESHOLD) -> AllocationPlan:
    """Split `n_total` variants by the reversed calibration time ratio.

    Shares are rounded half-up.  A share that rounds to zero but whose exact
    size (fraction * n_total) is at least `floor_threshold` gets one variant.
    """
    if n_total < 1:
        raise ValueError("n_total must be >= 1")
    if profile.failed == "accel":
        return AllocationPlan(n_total, n_total, 0, 0.0)
    if profile.failed == "cpu":
        return AllocationPlan(n_total, 0, n_total, 1.0)

    frac = reverse_ratio_fraction(profile.t_cpu, profile.t_accel)
    exact = frac * n_total
    n_accel = int(math.floor(exact + 0.5))
    n_accel = min(max(n_accel, 0), n_total)
    if n_total >= 2:
        if n_accel == 0 and exact >= floor_threshold:
            n_accel = 1
        elif n_accel == n_total and n_total - exact >= floor_threshold:
            n_accel = n_total - 1
    return AllocationPlan(n_total, n_total - n_accel, n_accel, frac)


def plan_allocation_optimal(cpu_time_fn: Callable[[int], float],
                            accel_time_fn: Callable[[int], float],
                            n_total: int) -> AllocationPlan:
    """Exhaustive search for the split minimising the slower back-end's time."""
    if n_total < 1:
        raise ValueError("n_total must be >= 1")
    best_k, best = 0, math.inf
    for k in range(n_total + 1):
        cost = max(cpu_time_fn(n_total - k), accel_time_fn(k))
        if cost < best:
            best_k, best = k, cost
    return AllocationPlan(n_total, n_total - best_k, best_k, best_k / n_total)


def naive_sum(t_cpu_seq: float, t_accel_seq: float) -> float:
    """Sequential CPU time plus sequential accelerator time for the same batch."""
    if t_cpu_seq < 0 or t_accel_seq < 0:
        raise ValueError("times must be non-negative")
    return t_cpu_seq + t_accel_seq


def _merge(request: BatchRequest, parts: list[BatchResult]) -> tuple:
    by_seed = {}
    for part in parts:
        for r in part.results:
            by_seed[r.seed] = r
    return tuple(by_seed[s] for s in request.seeds)


def run_hybrid(plan: AllocationPlan, request: BatchRequest, executors: Executors,
               orchestration_overhead: float = 0.0) -> HybridResult:
    """Run the first ``n_cpu`` seeds on the CPU and the rest on the accelerator.

    Emulated executors run both halves in parallel threads and the overhead
    is slept for real; Modeled executors compose the measured CPU time with
    the modelled accelerator time, ``max(cpu, accel) + overhead``.  If a
    back-end fails its seeds are re-run on the other one and the result is
    flagged degraded.
    """
    if plan.n_total != len(request.seeds):
        raise ValueError(f"plan covers {plan.n_total} variants but request has {len(request.seeds)}")
    if orchestration_overhead < 0:
        raise ValueError("orchestration_overhead must be >= 0")
    cpu_req = request.subset(request.seeds[:plan.n_cpu]) if plan.n_cpu else None
    acc_req = request.subset(request.seeds[plan.n_cpu:]) if plan.n_accel else None

    t0 = time.perf_counter()
    if executors.mode is Mode.EMULATED:
        with ThreadPoolExecutor(max_workers=2, thread_name_prefix="hybrid") as pool:
            fut_cpu = pool.submit(_try, executors.run_cpu, cpu_req, "cpu") if cpu_req else None
            fut_acc = pool.submit(_try, executors.run_accel, acc_req, "accel") if acc_req else None
            cpu, cpu_err = fut_cpu.result() if fut_cpu else (None, None)
            acc, acc_err = fut_acc.result() if fut_acc else (None, None)
    else:
        cpu, cpu_err = _try(executors.run_cpu, cpu_req, "cpu") if cpu_req else (None, None)
        acc, acc_err = _try(executors.run_accel, acc_req, "accel") if acc_req else (None, None)

    if cpu_err and acc_err:
        raise RuntimeError(f"both back-ends failed: {cpu_err}; {acc_err}")
    degraded = bool(cpu_err or acc_err)

    t_cpu_part = cpu.wall_time if cpu else 0.0
    t_acc_part = acc.wall_time if acc else 0.0
    if acc_err and acc_req:
        extra = executors.run_cpu(acc_req)
        t_cpu_part += extra.wall_time
        cpu = BatchResult((cpu.results if cpu else ()) + extra.results, t_cpu_part,
                          (cpu.utilization_trace if cpu else ()) + extra.utilization_trace)
    if cpu_err and cpu_req:
        extra = executors.run_accel(cpu_req)
        t_acc_part += extra.wall_time
        acc = BatchResult(extra.results + (acc.results if acc else ()), t_acc_part,
                          (acc.utilization_trace if acc else ()) + extra.utilization_trace)

    if executors.mode is Mode.EMULATED:
        if orchestration_overhead > 0:
            time.sleep(orchestration_overhead)
        wall = time.perf_counter() - t0
    else:
        wall = max(t_cpu_part, t_acc_part) + orchestration_overhead

    merged = _merge(request, [p for p in (cpu, acc) if p is not None])
    return HybridResult(wall, t_cpu_part, t_acc_part, orchestration_overhead, plan, merged,
                        cpu, acc, degraded)


def hybrid_cycle(kind: ModelKind, n_total: int, steps: int, executors: Executors,
                 probe_n: int | None = None, orchestration_overhead: float = 0.0,
                 floor_threshold: float = DEFAULT_FLOOR_THRESHOLD,
                 profile: CalibrationProfile | None = None):
    """Calibrate (unless a profile is given), plan and execute one hybrid run.

    The probe defaults to the full batch size.  Returns (profile, result).
    """
    if profile is None:
        profile = calibrate(kind, steps, probe_n or n_total, executors)
    plan = plan_allocation(profile, n_total, floor_threshold)
    request = BatchRequest(kind, tuple(range(n_total)), steps)
    return profile, run_hybrid(plan, request, executors, orchestration_overhead)
