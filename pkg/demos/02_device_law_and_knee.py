"""The synthetic accelerator: flat while it has spare lanes, linear after.

Wall time follows startup + steps * wave_cost * ceil(N / capacity).  The knee
detector walks the curve and reports the last batch size on the flat part.
"""
from hetbench.bench.config import PAPER_VARIANTS
from hetbench.executor import BatchRequest, DevicePerfModel, Mode, run_batch_synthetic
from hetbench.monitor import detect_saturation_knee
from hetbench.simkernel import ModelKind

device = DevicePerfModel(startup=0.5, capacity=1024, step_wave_cost=1e-4)
grid = PAPER_VARIANTS[ModelKind.BOX]
steps = 1000

print(f"{'variants':>9} {'wall [s]':>9} {'util %':>7}")
for n in grid:
    print(f"{n:>9} {device.time(n, steps):>9.3f} {device.utilization(n):>7.1f}")

points = [(n, device.time(n, steps)) for n in grid]
print("knee at", detect_saturation_knee(points), "variants (capacity", device.capacity, ")")

# Emulated mode really blocks, so an orchestrator sees a busy device
req = BatchRequest(ModelKind.BOX, tuple(range(32)), 100)
res = run_batch_synthetic(req, DevicePerfModel(0.2, 1024, 1e-4), Mode.EMULATED)
print(f"emulated 32 variants x 100 steps: {res.wall_time:.3f}s (law says 0.210s)")
