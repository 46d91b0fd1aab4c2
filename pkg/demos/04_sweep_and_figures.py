"""A small sweep written to CSV/JSON-lines, then turned into SVG figures.

Pass an output directory as the first argument (default: ./demo_sweep).
"""
import sys
from pathlib import Path

from hetbench.bench import SweepConfig, SweepResults, emit_figures, run_sweep
from hetbench.executor import DevicePerfModel
from hetbench.monitor import detect_saturation_knee

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_sweep")
config = SweepConfig(
    models=["box", "box_and_ball"],
    variants_per_model={"box": [32, 128, 512, 2048], "box_and_ball": [32, 128, 512, 2048]},
    steps_list=[50],
    repetitions=3,
    device=DevicePerfModel(startup=0.05, capacity=512, step_wave_cost=5e-4),
    output_dir=out,
    orchestration_overhead_s=0.01,
)
print(f"running {config.cell_count()} cells into {out}/results.csv")
results = run_sweep(config)

# everything downstream works from the persisted file alone
again = SweepResults.load(out / "results.csv")
for model in again.models():
    wall = again.stats(model, "accel_only", 50)
    print(model, "accelerator knee at", detect_saturation_knee([(n, s.mean) for n, s in wall.items()]))
    for n, s in again.stats(model, "cpu_only", 50).items():
        print(f"  cpu n={n:<5} mean={s.mean:.4f}s ci95=[{s.ci95_low:.4f}, {s.ci95_high:.4f}]")
for path in emit_figures(again, out / "figures"):
    print("wrote", path)
