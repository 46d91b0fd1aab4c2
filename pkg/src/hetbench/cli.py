"""Command-line entry point: ``hetbench {bench,hybrid,ea,plot,knee}``.

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 degraded but complete.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import monitor
from .bench import config as bcfg
from .bench.figures import emit_figures
from .bench.sweep import SweepResults, run_sweep
from .evoloop import report_profile, report_profile_kv, run_ea
from .executor import DevicePerfModel, Executors, Mode, default_workers
from .scheduler import DEFAULT_FLOOR_THRESHOLD, hybrid_cycle, naive_sum
from .simkernel import ModelKind

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_DEGRADED = 0, 1, 2, 3

log = logging.getLogger("hetbench")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors as an exception instead of exiting 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage().rstrip()}")


def _kind(value: str) -> ModelKind:
    try:
        return ModelKind.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid int value: {value!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _nonneg_float(value: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float value: {value!r}") from None
    if not x >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return x


def _csv_list(conv):
    def parse(value: str) -> list:
        return [conv(v.strip()) for v in value.split(",") if v.strip()]
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hetbench", description="Batch simulation benchmarks on CPU and accelerator back-ends.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", metavar="{bench,hybrid,ea,plot,knee}", parser_class=_Parser)
    sub.required = True

    b = sub.add_parser("bench", help="run a sweep described by a config file")
    b.add_argument("--config", required=True, type=Path)
    b.add_argument("--resume", action="store_true", help="skip rows already in results.csv")
    # flags mirror config keys
    b.add_argument("--models", type=_csv_list(_kind))
    b.add_argument("--steps-list", dest="steps_list", type=_csv_list(_positive))
    b.add_argument("--repetitions", type=_positive)
    b.add_argument("--strategies", type=_csv_list(str))
    b.add_argument("--workers", type=_positive)
    b.add_argument("--mode", choices=[m.value for m in Mode])
    b.add_argument("--output-dir", dest="output_dir", type=Path)
    b.add_argument("--orchestration-overhead-s", dest="orchestration_overhead_s", type=_nonneg_float)
    b.add_argument("--probe-n", dest="probe_n", type=_positive)
    b.add_argument("--floor-threshold", dest="floor_threshold", type=_nonneg_float)
    b.add_argument("--no-figures", action="store_true", help="skip figure emission after the sweep")

    h = sub.add_parser("hybrid", help="one calibrate / plan / execute cycle")
    h.add_argument("--model", required=True, type=_kind)
    h.add_argument("--variants", required=True, type=_positive)
    h.add_argument("--steps", required=True, type=_positive)
    h.add_argument("--emulated", action="store_true", help="block in real time instead of modelling")
    h.add_argument("--device", default="gtx1070ti-like", help="device preset name")
    h.add_argument("--startup-s", dest="startup_s", type=_nonneg_float)
    h.add_argument("--capacity", type=_positive)
    h.add_argument("--step-wave-cost-s", dest="step_wave_cost_s", type=_nonneg_float)
    h.add_argument("--orchestration-overhead-s", dest="orchestration_overhead_s", type=_nonneg_float,
                   default=0.0)
    h.add_argument("--probe-n", dest="probe_n", type=_positive)
    h.add_argument("--floor-threshold", dest="floor_threshold", type=_nonneg_float,
                   default=DEFAULT_FLOOR_THRESHOLD)
    h.add_argument("--workers", type=_positive, default=None)

    e = sub.add_parser("ea", help="run the evolutionary loop and print its phase profile")
    e.add_argument("--model", required=True, type=_kind)
    e.add_argument("--pop", required=True, type=_positive)
    e.add_argument("--gens", required=True, type=_positive)
    e.add_argument("--steps", type=_positive, default=1000)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--executor", choices=["cpu", "accel", "hybrid"], default="cpu")
    e.add_argument("--device", default="gtx1070ti-like", help="device preset (accel/hybrid only)")
    e.add_argument("--workers", type=_positive, default=1)

    pl = sub.add_parser("plot", help="re-emit figures from persisted results")
    pl.add_argument("--input", required=True, type=Path)
    pl.add_argument("--out", required=True, type=Path)

    k = sub.add_parser("knee", help="print the saturation point of a strategy's wall-time curve")
    k.add_argument("--input", required=True, type=Path)
    k.add_argument("--model", required=True, type=_kind)
    k.add_argument("--steps", type=_positive)
    k.add_argument("--strategy", choices=list(bcfg.STRATEGIES), default="accel_only")
    k.add_argument("--epsilon", type=_nonneg_float, default=monitor.KNEE_EPSILON)
    p.subcommands = sub.choices
    return p


def _preset(name: str, kind: ModelKind) -> DevicePerfModel:
    try:
        return bcfg.DEVICE_PRESETS[name][kind]
    except KeyError:
        raise UsageError(f"hetbench: error: argument --device: unknown preset {name!r}; "
                         f"known: {', '.join(sorted(bcfg.DEVICE_PRESETS))}") from None


def make_executors(device: DevicePerfModel, workers: int, mode: Mode) -> Executors:
    """Executors used by the ``hybrid`` and ``ea`` subcommands (tests replace this)."""
    return Executors(device=device, workers=workers, mode=mode)


# -- subcommands ---------------------------------------------------------

def cmd_bench(args) -> int:
    try:
        config = bcfg.load_config(args.config)
    except FileNotFoundError as exc:
        raise UsageError(f"hetbench bench: error: argument --config: {exc}") from None
    overrides = {k: getattr(args, k) for k in ("models", "steps_list", "repetitions", "strategies",
                                               "workers", "output_dir", "orchestration_overhead_s",
                                               "probe_n", "floor_threshold")}
    overrides["mode"] = args.mode
    if args.models:
        # models without a grid in the file fall back to the reference grid
        overrides["variants_per_model"] = {**{m: bcfg.PAPER_VARIANTS[m] for m in args.models},
                                           **config.variants_per_model}
    config = bcfg.apply_overrides(config, overrides)

    total = config.cell_count()
    print(f"sweep: {total} rows -> {config.output_dir / 'results.csv'}")
    done = [0]

    def progress(rec):
        done[0] += 1
        status = "error" if not rec.ok else f"{rec.wall:.4g}s"
        log.info("[%d/%d] %s %s n=%d steps=%d rep=%d %s", done[0], total, rec.model, rec.strategy,
                 rec.n_variants, rec.steps, rec.rep_index, status)

    results = run_sweep(config, resume=args.resume, progress=progress)
    errors = [r for r in results.records if not r.ok]
    degraded = [r for r in results.records if r.degraded]
    print(f"rows: {len(results.records)}  errors: {len(errors)}  degraded: {len(degraded)}")
    if not args.no_figures and results.ok_records():
        files = emit_figures(results, config.output_dir / "figures")
        print(f"figures: {len(files)} files in {config.output_dir / 'figures'}")
    if errors:
        return EXIT_RUNTIME
    return EXIT_DEGRADED if degraded else EXIT_OK


def cmd_hybrid(args) -> int:
    device = _preset(args.device, args.model)
    custom = {"startup": args.startup_s, "capacity": args.capacity, "step_wave_cost": args.step_wave_cost_s}
    custom = {k: v for k, v in custom.items() if v is not None}
    if custom:
        try:
            device = DevicePerfModel(**{**device.__dict__, **custom})
        except ValueError as exc:
            raise UsageError(f"hetbench hybrid: error: {exc}") from None
    mode = Mode.EMULATED if args.emulated else Mode.MODELED
    ex = make_executors(device, args.workers or default_workers(), mode)
    profile, res = hybrid_cycle(args.model, args.variants, args.steps, ex, probe_n=args.probe_n,
                                orchestration_overhead=args.orchestration_overhead_s,
                                floor_threshold=args.floor_threshold)
    print(f"calibration: probe_n={profile.probe_n} t_cpu={profile.t_cpu:.6g}s "
          f"t_accel={profile.t_accel:.6g}s" + (f" failed={profile.failed}" if profile.failed else ""))
    print(f"plan: {res.plan.describe()}")
    print(f"target_fraction={res.plan.target_fraction:.6g} accel_fraction={res.plan.accel_fraction:.6g}")
    print(f"cpu_part_s={res.t_cpu_part:.6g} accel_part_s={res.t_accel_part:.6g} "
          f"overhead_s={res.overhead:.6g}")
    print(f"wall_combined_s={res.wall_combined:.6g}")
    print(f"naive_sum_s={naive_sum(res.t_cpu_part, res.t_accel_part):.6g}")
    if res.degraded:
        print("degraded: one back-end failed; its variants were re-dispatched")
        return EXIT_DEGRADED
    return EXIT_OK


def cmd_ea(args) -> int:
    ex = make_executors(_preset(args.device, args.model), args.workers, Mode.MODELED)
    pop, profile = run_ea(args.model, args.pop, args.gens, steps=args.steps,
                          executor_choice=args.executor, executors=ex, seed=args.seed)
    print(report_profile(profile))
    print()
    print(report_profile_kv(profile))
    print(f"best_fitness={pop.best_history[-1]:.6g}")
    return EXIT_OK


def cmd_plot(args) -> int:
    if not args.input.exists():
        raise UsageError(f"hetbench plot: error: argument --input: file not found: {args.input}")
    results = SweepResults.load(args.input)
    files = emit_figures(results, args.out)
    for f in files:
        print(f)
    return EXIT_OK


def cmd_knee(args) -> int:
    if not args.input.exists():
        raise UsageError(f"hetbench knee: error: argument --input: file not found: {args.input}")
    results = SweepResults.load(args.input)
    rows = results.select(args.model, args.strategy)
    steps_values = sorted({r.steps for r in rows})
    if not steps_values:
        print(f"no {args.strategy} rows for {args.model} in {args.input}", file=sys.stderr)
        return EXIT_RUNTIME
    steps = args.steps if args.steps is not None else steps_values[-1]
    stats = results.stats(args.model, args.strategy, steps)
    points = [(n, s.mean) for n, s in stats.items()]
    try:
        knee = monitor.detect_saturation_knee(points, args.epsilon)
    except monitor.NoKnee as exc:
        print(f"model={args.model} strategy={args.strategy} steps={steps} knee=none "
              f"regime={exc.regime} bound_n={exc.n}")
        return EXIT_OK
    print(f"model={args.model} strategy={args.strategy} steps={steps} knee={knee}")
    return EXIT_OK


COMMANDS = {"bench": cmd_bench, "hybrid": cmd_hybrid, "ea": cmd_ea, "plot": cmd_plot, "knee": cmd_knee}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        print(parser.subcommands[args.command].format_usage().rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except bcfg.ConfigError as exc:
        print(f"hetbench {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("interrupted; completed rows are already on disk", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"hetbench {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
