"""Split one batch across CPU and accelerator by the reversed time ratio.

Calibrate both back-ends on a probe batch, give each a share inversely
proportional to its time, run both halves, and compare with running
everything on either side.
"""
from hetbench.executor import BatchRequest, DevicePerfModel, Executors, Mode, run_batch_cpu
from hetbench.scheduler import hybrid_cycle, naive_sum
from hetbench.simkernel import ModelKind

kind, steps = ModelKind.BOX_AND_BALL, 100

for n, device in [(256, DevicePerfModel(startup=0.5, capacity=4096, step_wave_cost=1e-3)),
                  (8192, DevicePerfModel(startup=0.05, capacity=4096, step_wave_cost=1e-3))]:
    ex = Executors(device=device, mode=Mode.MODELED)
    cpu_only = run_batch_cpu(BatchRequest(kind, tuple(range(n)), steps)).wall_time
    accel_only = device.time(n, steps)
    profile, res = hybrid_cycle(kind, n, steps, ex, orchestration_overhead=0.02)
    print(f"N={n}: calibration cpu={profile.t_cpu:.3f}s accel={profile.t_accel:.3f}s -> {res.plan.describe()}")
    print(f"   cpu only {cpu_only:.3f}s | accel only {accel_only:.3f}s | "
          f"naive sum {naive_sum(cpu_only, accel_only):.3f}s | combined {res.wall_combined:.3f}s")
