"""A small (mu + lambda) evolutionary loop with per-phase wall-clock accounting.

Genomes are variant seeds; fitness is the horizontal distance travelled by
body 0.  The loop is only here to show where an evolutionary run spends its
time and to give the executors a realistic caller.
"""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from .executor import BatchRequest, Executors, run_batch_cpu
from .scheduler import calibrate, plan_allocation, run_hybrid
from .simkernel import MASK64, ModelKind, derive_seed, mix64

PHASES = ("selection", "variation", "evaluation", "bookkeeping")


@dataclass
class Population:
    genomes: list
    fitnesses: list
    generation: int = 0
    best_history: list = field(default_factory=list)


@dataclass
class PhaseProfile:
    phases: dict = field(default_factory=lambda: {p: 0.0 for p in PHASES})
    total: float = 0.0
    unaccounted: float = 0.0

    def fraction(self, phase: str) -> float:
        return self.phases[phase] / self.total if self.total > 0 else 0.0

    @contextmanager
    def timed(self, phase: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.phases[phase] += time.perf_counter() - t0


def _evaluate(kind, genomes, steps, executor_choice, executors):
    request = BatchRequest(kind, tuple(genomes), steps)
    if executor_choice == "cpu":
        workers = executors.workers if executors else 1
        batch = run_batch_cpu(request, workers)
        results = batch.results
    elif executor_choice == "accel":
        results = executors.run_accel(request).results
    elif executor_choice == "hybrid":
        # genomes are not contiguous seeds, so plan against the real request
        profile = calibrate(kind, steps, len(genomes), executors)
        plan = plan_allocation(profile, len(genomes))
        results = run_hybrid(plan, request, executors).results
    else:
        raise ValueError(f"executor_choice must be cpu, accel or hybrid, got {executor_choice!r}")
    return [r.fitness for r in results]


def run_ea(kind: ModelKind, population_size: int, generations: int, steps: int = 1000,
           executor_choice: str = "cpu", executors: Executors | None = None,
           seed: int = 0):
    """Run the loop; returns ``(Population, PhaseProfile)``."""
    if population_size < 2:
        raise ValueError("population_size must be >= 2")
    if generations < 1:
        raise ValueError("generations must be >= 1")
    if executor_choice != "cpu" and executors is None:
        raise ValueError(f"executor_choice {executor_choice!r} needs an Executors instance")
    kind = ModelKind.parse(kind)
    mu = population_size // 2
    lam = population_size - mu
    profile = PhaseProfile()

    t_start = time.perf_counter()
    with profile.timed("bookkeeping"):
        genomes = [mix64((seed + i * 0x9E3779B97F4A7C15) & MASK64) for i in range(population_size)]
    with profile.timed("evaluation"):
        fitnesses = _evaluate(kind, genomes, steps, executor_choice, executors)
    with profile.timed("bookkeeping"):
        pop = Population(genomes, fitnesses, 0, [max(fitnesses)])

    for gen in range(1, generations + 1):
        with profile.timed("selection"):
            order = sorted(range(len(pop.genomes)),
                           key=lambda i: (-pop.fitnesses[i], pop.genomes[i]))
            parents = order[:mu]
        with profile.timed("variation"):
            children = [derive_seed(pop.genomes[parents[k % mu]], gen * population_size + k)
                        for k in range(lam)]
        with profile.timed("evaluation"):
            child_fit = _evaluate(kind, children, steps, executor_choice, executors)
        with profile.timed("bookkeeping"):
            pop = Population(
                [pop.genomes[i] for i in parents] + children,
                [pop.fitnesses[i] for i in parents] + child_fit,
                gen,
                pop.best_history + [max(max(pop.fitnesses[i] for i in parents), max(child_fit))],
            )

    profile.total = time.perf_counter() - t_start
    profile.unaccounted = max(0.0, profile.total - sum(profile.phases.values()))
    return pop, profile


def report_profile(profile: PhaseProfile) -> str:
    """Fixed-width table of phases by cumulative time, with fractions of the total."""
    total = profile.total if profile.total > 0 else sum(profile.phases.values())
    rows = sorted(profile.phases.items(), key=lambda kv: (-kv[1], kv[0]))
    lines = [f"{'phase':<12} {'seconds':>12} {'fraction':>9}", "-" * 35]
    for name, secs in rows:
        frac = secs / total if total > 0 else 0.0
        lines.append(f"{name:<12} {secs:>12.6f} {frac:>9.3f}")
    lines.append("-" * 35)
    lines.append(f"{'total':<12} {total:>12.6f} {1.0 if total > 0 else 0.0:>9.3f}")
    return "\n".join(lines)


def report_profile_kv(profile: PhaseProfile) -> str:
    """The same numbers as ``key=value`` lines for scripts."""
    total = profile.total if profile.total > 0 else sum(profile.phases.values())
    out = [f"total_s={total:.6f}", f"unaccounted_s={profile.unaccounted:.6f}"]
    for name, secs in sorted(profile.phases.items(), key=lambda kv: (-kv[1], kv[0])):
        frac = secs / total if total > 0 else 0.0
        out.append(f"{name}_s={secs:.6f}")
        out.append(f"{name}_fraction={frac:.3f}")
    return "\n".join(out)

