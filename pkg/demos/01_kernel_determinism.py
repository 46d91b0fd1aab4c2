"""Same seed, same bits: the kernel is a pure function of (scene, seed, steps).

Batches are stepped in lock-step, yet every variant ends up bit-identical to
running it alone, which is what lets two very different back-ends agree on
checksums.
"""
from hetbench.simkernel import DT, ModelKind, build_model, energy, simulate, simulate_batch, step

for kind in ModelKind:
    world = build_model(kind, seed=7)
    print(f"{kind.value:<14} bodies={world.positions.shape[0]:>3} constraints={len(world.constraints):>3}")

seeds = [3, 1, 4, 1_000_003]
batch = simulate_batch(ModelKind.HUMANOID, seeds, steps=200)
alone = [simulate(ModelKind.HUMANOID, s, 200) for s in seeds]
print("batch == one-by-one:", batch == alone)
for r in batch:
    print(f"  seed={r.seed:<8} checksum={r.checksum:016x} fitness={r.fitness:.4f}")

# energy only goes down: damping, inelastic ground contact and the projection limiter
world = build_model(ModelKind.ARM_WITH_ROPE, seed=11)
trace = [energy(world)]
for _ in range(1000):
    world = step(world, DT)
    trace.append(energy(world))
print(f"arm_with_rope energy: {trace[0]:.4f} -> {trace[-1]:.4f} "
      f"(non-increasing: {all(b <= a + 1e-9 * abs(a) for a, b in zip(trace, trace[1:]))})")
