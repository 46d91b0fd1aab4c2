"""Utilisation sampling, repetition statistics and saturation-knee detection."""
from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats as _st

SAMPLE_PERIOD = 0.05  # 20 Hz
KNEE_EPSILON = 0.05
SMALL_SAMPLE = 20


class UnsupportedPlatform(RuntimeError):
    pass


class EmptyInput(ValueError):
    pass


class NoKnee(ValueError):
    """All points lie in one regime.

    ``regime`` is ``"all-flat"`` or ``"all-linear"``; ``n`` is the sentinel
    (last n when flat, first n when linear).
    """

    def __init__(self, regime: str, n: int):
        super().__init__(f"no saturation knee: {regime} (sentinel n={n})")
        self.regime = regime
        self.n = n


@dataclass(frozen=True)
class UtilizationSample:
    t: float
    cpu_percent: float
    accel_percent: float = 0.0


def _psutil():
    try:
        import psutil
    except ImportError as exc:  # pragma: no cover - psutil is a hard dependency
        raise UnsupportedPlatform("psutil is not available") from exc
    return psutil


def sample_system_cpu(interval: float | None = 0.05) -> float:
    """Whole-system CPU utilisation in percent.

    ``interval=None`` returns the utilisation since the previous call without
    blocking, which is what the background sampler uses.
    """
    psutil = _psutil()
    try:
        value = psutil.cpu_percent(interval=interval)
    except (OSError, NotImplementedError) as exc:
        raise UnsupportedPlatform(str(exc)) from exc
    return min(100.0, max(0.0, float(value)))


class Sampler:
    """Background utilisation sampler, used as a context manager around a run.

    The accelerator column comes from ``accel_report`` (device self-report).
    On platforms without CPU accounting the trace is simply left empty.
    """

    def __init__(self, period: float = SAMPLE_PERIOD,
                 accel_report: Callable[[], float] | None = None):
        if period > 0.1:
            raise ValueError("sampling period must give at least 10 Hz")
        self.period = period
        self.accel_report = accel_report or (lambda: 0.0)
        self.samples: list[UtilizationSample] = []
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._t0 = 0.0
        self.supported = True

    def _take(self) -> None:
        try:
            cpu = sample_system_cpu(interval=None)
        except UnsupportedPlatform:
            self.supported = False
            return
        self.samples.append(UtilizationSample(time.perf_counter() - self._t0, cpu,
                                              float(self.accel_report())))

    def _loop(self) -> None:
        while not self._stop.wait(self.period):
            self._take()

    def __enter__(self) -> "Sampler":
        self._t0 = time.perf_counter()
        try:
            sample_system_cpu(interval=None)  # primes the psutil delta
        except UnsupportedPlatform:
            self.supported = False
            return self
        self._thread = threading.Thread(target=self._loop, name="util-sampler", daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
            self._take()

    def cpu_trace(self) -> list[tuple[float, float]]:
        return [(s.t, s.cpu_percent) for s in self.samples]


def trace_mean(trace: Sequence[tuple[float, float]]) -> float:
    if not trace:
        return 0.0
    return float(np.mean([u for _, u in trace]))


@dataclass(frozen=True)
class Stats:
    n: int
    mean: float
    std: float
    ci95_low: float
    ci95_high: float
    p95: float
    small_sample: bool = field(default=False)

    @property
    def ci_halfwidth(self) -> float:
        return (self.ci95_high - self.ci95_low) / 2.0


def t_critical(dof: int, level: float = 0.95) -> float:
    return float(_st.t.ppf(0.5 + level / 2.0, dof))


def summarize(samples: Sequence[float]) -> Stats:
    """Mean, sample std, Student-t 95% CI and interpolated p95 of repeated timings."""
    x = np.asarray(list(samples), dtype=np.float64)
    if x.size == 0:
        raise EmptyInput("summarize() needs at least one sample")
    x = np.sort(x)  # makes the result independent of input order
    n = x.size
    mean = float(x.mean())
    if n == 1 or np.all(x == x[0]):
        std = 0.0
        lo = hi = mean
    else:
        std = float(x.std(ddof=1))
        half = t_critical(n - 1) * std / math.sqrt(n)
        lo, hi = mean - half, mean + half
    p95 = float(np.percentile(x, 95, method="linear"))
    return Stats(n, mean, std, lo, hi, p95, small_sample=n < SMALL_SAMPLE)


def detect_saturation_knee(points: Sequence[tuple[int, float]],
                           epsilon: float = KNEE_EPSILON) -> int:
    """Largest batch size still on the flat prefix of a wall-time curve.

    Walks the points in order of n and keeps extending the prefix while each
    time stays within ``(1 + epsilon)`` of the prefix minimum.  Raises
    :class:`NoKnee` when the whole series is flat, or when only the first
    point is flat (the series is linear from the start).
    """
    pts = [(int(n), float(t)) for n, t in points]
    if len(pts) < 3:
        raise ValueError("knee detection needs at least 3 points")
    if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
        raise ValueError("n values must be strictly increasing")

    floor = pts[0][1]
    last_flat = 0
    for idx, (_, t) in enumerate(pts):
        floor = min(floor, t)
        if t <= (1.0 + epsilon) * floor:
            last_flat = idx
        else:
            break
    if last_flat == len(pts) - 1:
        raise NoKnee("all-flat", pts[-1][0])
    if last_flat == 0:
        raise NoKnee("all-linear", pts[0][0])
    return pts[last_flat][0]
