"""Per-model SVG figures with CSV sidecars of exactly the plotted statistics.

For every model and steps value:

* ``<model>_s<steps>_walltime``   wall time vs variants per strategy, 95% CI bands
* ``<model>_s<steps>_accel_util`` accelerator wall time coloured by utilisation
* ``<model>_s<steps>_hybrid``     sequential / naive-sum / combined + accel share bars

and, when a sweep has more than one steps value, ``<model>_n<n>_steps`` (wall
time vs steps).  All aggregation goes through :func:`monitor.summarize`.
"""
from __future__ import annotations

import csv
import logging
from pathlib import Path

from .. import monitor
from ..scheduler import naive_sum
from .records import fmt_float
from .svg import PALETTE, Chart, heat
from .sweep import SweepResults

log = logging.getLogger(__name__)

STRATEGY_LABELS = {"cpu_only": "CPU only", "accel_only": "Accelerator only", "hybrid": "Combined"}
STRATEGY_COLORS = {"cpu_only": PALETTE[0], "accel_only": PALETTE[1], "hybrid": PALETTE[2]}
STATS_COLUMNS = ["n", "mean", "std", "ci95_low", "ci95_high", "p95", "small_sample"]


def _stats_cells(s: monitor.Stats) -> list[str]:
    return [str(s.n), fmt_float(s.mean), fmt_float(s.std), fmt_float(s.ci95_low),
            fmt_float(s.ci95_high), fmt_float(s.p95), "1" if s.small_sample else "0"]


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _write_svg(path: Path, chart: Chart) -> Path:
    path.write_text(chart.render(), encoding="utf-8")
    return path


def _walltime(results: SweepResults, model: str, steps: int, out: Path) -> list[Path]:
    chart = Chart(f"{model}: wall time vs variants ({steps} steps)", "variants", "wall time [s]", log_x=True)
    rows = []
    for strategy in ("cpu_only", "accel_only", "hybrid"):
        st = results.stats(model, strategy, steps)
        if not st:
            continue
        ns = list(st)
        color = STRATEGY_COLORS[strategy]
        chart.band(ns, [s.ci95_low for s in st.values()], [s.ci95_high for s in st.values()], color)
        chart.line(ns, [s.mean for s in st.values()], color, STRATEGY_LABELS[strategy])
        rows += [[strategy, str(n), str(steps)] + _stats_cells(s) for n, s in st.items()]
    stem = f"{model}_s{steps}_walltime"
    return [_write_svg(out / f"{stem}.svg", chart),
            _write_csv(out / f"{stem}.csv", ["strategy", "n_variants", "steps"] + STATS_COLUMNS, rows)]


def _accel_util(results: SweepResults, model: str, steps: int, out: Path) -> list[Path]:
    wall = results.stats(model, "accel_only", steps)
    if not wall:
        log.info("no accelerator rows for %s at %d steps; utilisation figure omitted", model, steps)
        return []
    util = results.stats(model, "accel_only", steps, value="accel_util_mean")
    ns = list(wall)
    title = f"{model}: accelerator wall time by utilisation ({steps} steps)"
    try:
        if len(ns) >= 3:
            title += f", knee at n={monitor.detect_saturation_knee([(n, wall[n].mean) for n in ns])}"
    except monitor.NoKnee as exc:
        title += f", no knee ({exc.regime})"
    chart = Chart(title, "variants", "wall time [s]", log_x=True)
    chart.line(ns, [wall[n].mean for n in ns], "#999999")
    chart.points(ns, [wall[n].mean for n in ns], [heat(util[n].mean) for n in ns])
    chart.legend += [("utilisation 0%", heat(0)), ("utilisation 100%", heat(100))]
    rows = [[str(n), str(steps)] + _stats_cells(wall[n]) + [fmt_float(util[n].mean)] for n in ns]
    stem = f"{model}_s{steps}_accel_util"
    return [_write_svg(out / f"{stem}.svg", chart),
            _write_csv(out / f"{stem}.csv", ["n_variants", "steps"] + STATS_COLUMNS + ["accel_util_mean"], rows)]


def _hybrid(results: SweepResults, model: str, steps: int, out: Path) -> list[Path]:
    comb = results.stats(model, "hybrid", steps)
    if not comb:
        log.info("no hybrid rows for %s at %d steps; combined-run figure omitted", model, steps)
        return []
    frac = results.stats(model, "hybrid", steps, value="accel_fraction")
    cpu = results.stats(model, "cpu_only", steps)
    acc = results.stats(model, "accel_only", steps)
    ns = list(comb)
    chart = Chart(f"{model}: sequential vs combined ({steps} steps)", "variants", "wall time [s]",
                  log_x=True, y2label="variants on accelerator")
    chart.bars(ns, [frac[n].mean for n in ns], "#7f7f7f", "accelerator share")
    if cpu:
        chart.line(list(cpu), [s.mean for s in cpu.values()], STRATEGY_COLORS["cpu_only"], "Sequential CPU")
    if acc:
        chart.line(list(acc), [s.mean for s in acc.values()], STRATEGY_COLORS["accel_only"], "Sequential accelerator")
    naive = {n: naive_sum(cpu[n].mean, acc[n].mean) for n in ns if n in cpu and n in acc}
    if naive:
        chart.line(list(naive), list(naive.values()), "#ff7f0e", "Naive sum", dashed=True)
    chart.band(ns, [comb[n].ci95_low for n in ns], [comb[n].ci95_high for n in ns], STRATEGY_COLORS["hybrid"])
    chart.line(ns, [comb[n].mean for n in ns], STRATEGY_COLORS["hybrid"], "Combined")

    def cell(d, n):
        return fmt_float(d[n].mean) if n in d else ""

    rows = [[str(n), str(steps), cell(cpu, n), cell(acc, n),
             fmt_float(naive[n]) if n in naive else "", fmt_float(comb[n].mean),
             fmt_float(comb[n].ci95_low), fmt_float(comb[n].ci95_high), fmt_float(frac[n].mean)]
            for n in ns]
    stem = f"{model}_s{steps}_hybrid"
    header = ["n_variants", "steps", "cpu_mean", "accel_mean", "naive_sum", "combined_mean",
              "combined_ci95_low", "combined_ci95_high", "accel_fraction_mean"]
    return [_write_svg(out / f"{stem}.svg", chart), _write_csv(out / f"{stem}.csv", header, rows)]


def _by_steps(results: SweepResults, model: str, n: int, out: Path) -> list[Path]:
    chart = Chart(f"{model}: wall time vs steps ({n} variants)", "steps", "wall time [s]", log_x=True)
    rows = []
    for strategy in ("cpu_only", "accel_only", "hybrid"):
        st = results.stats_by_steps(model, strategy, n)
        if len(st) < 2:
            continue
        xs = list(st)
        color = STRATEGY_COLORS[strategy]
        chart.band(xs, [s.ci95_low for s in st.values()], [s.ci95_high for s in st.values()], color)
        chart.line(xs, [s.mean for s in st.values()], color, STRATEGY_LABELS[strategy])
        rows += [[strategy, str(n), str(s_)] + _stats_cells(s) for s_, s in st.items()]
    if not rows:
        return []
    stem = f"{model}_n{n}_steps"
    return [_write_svg(out / f"{stem}.svg", chart),
            _write_csv(out / f"{stem}.csv", ["strategy", "n_variants", "steps"] + STATS_COLUMNS, rows)]


def emit_figures(results: SweepResults, out_dir) -> list[Path]:
    """Write all figures for `results` into `out_dir`; returns the files written."""
    if not results.ok_records():
        raise ValueError("no successful records to plot")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    for model in results.models():
        rows = results.select(model)
        steps_values = sorted({r.steps for r in rows})
        for steps in steps_values:
            files += _walltime(results, model, steps, out)
            files += _accel_util(results, model, steps, out)
            files += _hybrid(results, model, steps, out)
        if len(steps_values) > 1:
            for n in sorted({r.n_variants for r in rows}):
                files += _by_steps(results, model, n, out)
    return files
