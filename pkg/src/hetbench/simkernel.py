"""Deterministic particle/constraint micro-simulation.

Four scene classes of increasing per-step cost stand in for rigid-body scenes.
Every world is a set of unit-mass point bodies connected by distance
constraints, integrated with semi-implicit Euler and stabilised by position
projection (Gauss-Seidel over colour classes of non-overlapping constraints).

All arithmetic is element-wise float64 (``+ - * /`` and ``sqrt`` only), so a
variant's trajectory is bit-identical whether it is simulated alone or inside
a batch of any size.  That is what lets executors split a batch arbitrarily.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

DT = 0.002
GRAVITY = -9.81
ITERATIONS = 8
BLOWUP_LIMIT = 1e6
CONTACT_TOLERANCE = 1e-6

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


class NumericalBlowup(ArithmeticError):
    """A coordinate became non-finite or left the simulation bounds."""

    def __init__(self, message: str, seed: int | None = None, step: int | None = None):
        super().__init__(message)
        self.seed = seed
        self.step = step


class ModelKind(str, enum.Enum):
    BOX = "box"
    BOX_AND_BALL = "box_and_ball"
    ARM_WITH_ROPE = "arm_with_rope"
    HUMANOID = "humanoid"

    @classmethod
    def parse(cls, name: "str | ModelKind") -> "ModelKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {"boxandball": "box_and_ball", "armwithrope": "arm_with_rope"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown model {name!r}; expected one of: {valid}") from None

    def __str__(self) -> str:
        return self.value


# --------------------------------------------------------------------------
# Counter-based random numbers (splitmix64 finaliser)
# --------------------------------------------------------------------------

def mix64(x: int) -> int:
    """splitmix64 finaliser on a Python int."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def uniform01(seeds: np.ndarray, counter: int) -> np.ndarray:
    """Uniform [0, 1) draw number ``counter`` for each seed; pure function of (seed, counter)."""
    offset = np.uint64(((counter + 1) * GOLDEN) & MASK64)
    with np.errstate(over="ignore"):
        bits = _mix64_array(seeds.astype(np.uint64) + offset)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def derive_seed(parent: int, counter: int) -> int:
    """Child seed from a parent seed and a counter (e.g. a generation index)."""
    return mix64(parent ^ mix64((counter * GOLDEN) & MASK64))


# --------------------------------------------------------------------------
# Checksums
# --------------------------------------------------------------------------

def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & MASK64
    return h


def _fnv1a64_rows(rows: np.ndarray) -> np.ndarray:
    """FNV-1a over each row of a (B, L) uint8 matrix."""
    h = np.full(rows.shape[0], FNV_OFFSET, dtype=np.uint64)
    prime = np.uint64(FNV_PRIME)
    with np.errstate(over="ignore"):
        for col in rows.T:
            h = (h ^ col.astype(np.uint64)) * prime
    return h


def state_bytes(positions: np.ndarray, velocities: np.ndarray) -> bytes:
    """Canonical encoding hashed by the checksum: positions then velocities, <f8, row-major."""
    return (np.asarray(positions, dtype="<f8").tobytes()
            + np.asarray(velocities, dtype="<f8").tobytes())


# --------------------------------------------------------------------------
# Scene topology
# --------------------------------------------------------------------------

RIGID = 1.0 / (DT * DT)  # projects a constraint fully in one pass at the default dt


@dataclass(frozen=True)
class Topology:
    kind: ModelKind
    template: np.ndarray            # (n, 3), lowest point at z = 0
    constraints: tuple              # ((i, j, rest, stiffness), ...)
    damping: float
    colors: tuple                   # ((I, J, rest, stiffness) arrays per colour class)

    @property
    def n_bodies(self) -> int:
        return self.template.shape[0]


def _links(points, pairs, stiffness):
    out = []
    for i, j in pairs:
        d = points[j] - points[i]
        rest = float(np.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]))
        out.append((i, j, rest, float(stiffness)))
    return out


def _greedy_colors(constraints):
    """Partition constraints into classes whose members share no body."""
    classes: list[list] = []
    used: list[set] = []
    for c in constraints:
        i, j = c[0], c[1]
        for members, bodies in zip(classes, used):
            if i not in bodies and j not in bodies:
                members.append(c)
                bodies.update((i, j))
                break
        else:
            classes.append([c])
            used.append({i, j})
    packed = []
    for members in classes:
        packed.append((
            np.array([c[0] for c in members], dtype=np.intp),
            np.array([c[1] for c in members], dtype=np.intp),
            np.array([c[2] for c in members], dtype=np.float64),
            np.array([c[3] for c in members], dtype=np.float64),
        ))
    return tuple(packed)


def _box():
    return np.zeros((1, 3)), [], 0.05


def _box_and_ball():
    pts = np.array([[0.0, 0.0, 0.0], [0.4, 0.0, 0.2]])
    return pts, _links(pts, [(0, 1)], RIGID), 0.1


def _arm_with_rope():
    arm = [[0.3 * k, 0.0, 0.8] for k in range(4)]
    rope = [[0.9, 0.0, 0.7 - 0.1 * k] for k in range(8)]
    pts = np.array(arm + rope)
    cons = _links(pts, [(0, 1), (1, 2), (2, 3)], RIGID)
    cons += _links(pts, [(0, 2), (1, 3)], RIGID / 2)
    cons += _links(pts, [(3, 4)] + [(4 + k, 5 + k) for k in range(7)], RIGID / 5)
    return pts, cons, 0.2


def _humanoid():
    torso = [[x, y, z] for z in (1.0, 1.25, 1.5) for y in (-0.1, 0.1) for x in (-0.15, 0.15)]
    head = [[0.0, 0.0, 1.7], [0.0, 0.0, 1.9]]
    arms = [[sx * d, 0.0, 1.5] for sx in (-1.0, 1.0) for d in (0.35, 0.6, 0.85, 1.0)]
    legs = [[sx * 0.1, 0.0, z] for sx in (-1.0, 1.0) for z in (0.8, 0.6, 0.4, 0.2, 0.0)]
    pts = np.array(torso + head + arms + legs)

    def t(ix, iy, iz):
        return iz * 4 + iy * 2 + ix

    torso_pairs = []
    for iz in range(3):
        for iy in range(2):
            torso_pairs.append((t(0, iy, iz), t(1, iy, iz)))
        for ix in range(2):
            torso_pairs.append((t(ix, 0, iz), t(ix, 1, iz)))
        torso_pairs.append((t(0, 0, iz), t(1, 1, iz)))
        torso_pairs.append((t(1, 0, iz), t(0, 1, iz)))
    for iz in range(2):
        for iy in range(2):
            for ix in range(2):
                torso_pairs.append((t(ix, iy, iz), t(ix, iy, iz + 1)))
            torso_pairs.append((t(0, iy, iz), t(1, iy, iz + 1)))
            torso_pairs.append((t(1, iy, iz), t(0, iy, iz + 1)))
        for ix in range(2):
            torso_pairs.append((t(ix, 0, iz), t(ix, 1, iz + 1)))
            torso_pairs.append((t(ix, 1, iz), t(ix, 0, iz + 1)))

    head0, head1 = 12, 13
    limb_pairs = [(t(ix, iy, 2), head0) for iy in range(2) for ix in range(2)]
    limb_pairs.append((head0, head1))
    for ix, base in ((0, 14), (1, 18)):
        limb_pairs += [(t(ix, 0, 2), base), (t(ix, 1, 2), base)]
        limb_pairs += [(base + k, base + k + 1) for k in range(3)]
    for ix, base in ((0, 22), (1, 27)):
        limb_pairs += [(t(ix, 0, 0), base), (t(ix, 1, 0), base)]
        limb_pairs += [(base + k, base + k + 1) for k in range(4)]

    cons = _links(pts, torso_pairs, RIGID) + _links(pts, limb_pairs, RIGID / 2)
    return pts, cons, 0.2


_BUILDERS = {
    ModelKind.BOX: _box,
    ModelKind.BOX_AND_BALL: _box_and_ball,
    ModelKind.ARM_WITH_ROPE: _arm_with_rope,
    ModelKind.HUMANOID: _humanoid,
}


@functools.lru_cache(maxsize=None)
def topology(kind: ModelKind) -> Topology:
    kind = ModelKind.parse(kind)
    pts, cons, damping = _BUILDERS[kind]()
    pts = np.asarray(pts, dtype=np.float64)
    pts = pts - np.array([0.0, 0.0, pts[:, 2].min()])
    pts.setflags(write=False)
    return Topology(kind, pts, tuple(cons), damping, _greedy_colors(cons))


def solver_work(kind: ModelKind) -> int:
    """Abstract per-step work: projection iterations x constraints plus body updates."""
    topo = topology(kind)
    return ITERATIONS * len(topo.constraints) + topo.n_bodies


# --------------------------------------------------------------------------
# State and results
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WorldState:
    kind: ModelKind
    positions: np.ndarray
    velocities: np.ndarray
    constraints: tuple
    damping: float
    time: float = 0.0
    seed: int = 0

    def same_bits(self, other: "WorldState") -> bool:
        return (self.kind == other.kind and self.seed == other.seed
                and self.time == other.time and self.damping == other.damping
                and self.constraints == other.constraints
                and state_bytes(self.positions, self.velocities)
                == state_bytes(other.positions, other.velocities))


@dataclass(frozen=True)
class VariantResult:
    seed: int
    fitness: float
    checksum: int
    steps_executed: int


def _initial_arrays(topo: Topology, seeds: np.ndarray):
    height = 0.5 + 1.5 * uniform01(seeds, 0)
    vx = 2.0 * uniform01(seeds, 1) - 1.0
    vy = 2.0 * uniform01(seeds, 2) - 1.0
    b = len(seeds)
    pos = np.empty((b, topo.n_bodies, 3))
    pos[:] = topo.template
    pos[:, :, 2] += height[:, None]
    vel = np.zeros((b, topo.n_bodies, 3))
    vel[:, :, 0] = vx[:, None]
    vel[:, :, 1] = vy[:, None]
    return pos, vel


def build_model(kind: ModelKind, seed: int) -> WorldState:
    kind = ModelKind.parse(kind)
    topo = topology(kind)
    pos, vel = _initial_arrays(topo, np.array([seed], dtype=np.uint64))
    return WorldState(kind, pos[0], vel[0], topo.constraints, topo.damping, 0.0, int(seed))


def _project(p: np.ndarray, colors, dt: float) -> None:
    dt2 = dt * dt
    for I, J, rest, stiff in colors:
        a = p[:, I, :]
        b = p[:, J, :]
        dx = b[..., 0] - a[..., 0]
        dy = b[..., 1] - a[..., 1]
        dz = b[..., 2] - a[..., 2]
        length = np.sqrt(dx * dx + dy * dy + dz * dz)
        ok = length > 1e-12
        safe = np.where(ok, length, 1.0)
        strength = np.minimum(stiff * dt2, 1.0)
        scale = np.where(ok, 0.5 * strength * (length - rest) / safe, 0.0)
        corr = np.stack((dx * scale, dy * scale, dz * scale), axis=-1)
        p[:, I, :] = a + corr
        p[:, J, :] = b - corr


def _row_sum(a: np.ndarray) -> np.ndarray:
    # fixed left-to-right order so the sum of a row never depends on batch shape
    flat = a.reshape(a.shape[0], -1)
    acc = flat[:, 0].copy()
    for k in range(1, flat.shape[1]):
        acc = acc + flat[:, k]
    return acc


def _mechanical(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return 0.5 * _row_sum(v * v) - GRAVITY * _row_sum(x[..., 2])


def _advance(x: np.ndarray, v: np.ndarray, topo: Topology, dt: float):
    e_before = _mechanical(x, v)
    keep = 1.0 - topo.damping * dt
    v = v.copy()
    v[..., 2] = v[..., 2] + GRAVITY * dt
    v = v * keep
    p = x + v * dt
    if topo.colors:
        for _ in range(ITERATIONS):
            _project(p, topo.colors, dt)
            p[..., 2] = np.maximum(p[..., 2], 0.0)
    else:
        p[..., 2] = np.maximum(p[..., 2], 0.0)
    v = (p - x) / dt

    # Projection and zero-restitution contact may not create mechanical energy.
    # Any excess is removed by scaling the variant's velocities uniformly.
    kinetic = 0.5 * _row_sum(v * v)
    budget = e_before + GRAVITY * _row_sum(p[..., 2])
    over = kinetic > budget
    if over.any():
        ratio = np.maximum(budget, 0.0) / np.where(kinetic > 0, kinetic, 1.0)
        v = v * np.where(over, np.sqrt(ratio), 1.0)[:, None, None]
    return p, v


def _bad_rows(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    b = p.shape[0]
    flat_p = p.reshape(b, -1)
    flat_v = v.reshape(b, -1)
    return ~(np.isfinite(flat_p).all(axis=1) & np.isfinite(flat_v).all(axis=1)
             & (np.abs(flat_p) <= BLOWUP_LIMIT).all(axis=1))


def step(state: WorldState, dt: float) -> WorldState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    topo = topology(state.kind)
    p, v = _advance(state.positions[None], state.velocities[None], topo, dt)
    if _bad_rows(p, v)[0]:
        raise NumericalBlowup(f"{state.kind} seed {state.seed} blew up at t={state.time + dt:.6g}",
                              seed=state.seed)
    return WorldState(state.kind, p[0], v[0], state.constraints, state.damping,
                      state.time + dt, state.seed)


def fitness_of(initial: np.ndarray, final: np.ndarray) -> float:
    dx = final[0, 0] - initial[0, 0]
    dy = final[0, 1] - initial[0, 1]
    return float(np.sqrt(dx * dx + dy * dy))


def result_from_state(initial: WorldState, final: WorldState, steps: int) -> VariantResult:
    return VariantResult(
        seed=int(final.seed),
        fitness=fitness_of(initial.positions, final.positions),
        checksum=fnv1a64(state_bytes(final.positions, final.velocities)),
        steps_executed=steps,
    )


def simulate_batch(kind: ModelKind, seeds, steps: int, dt: float = DT,
                   errors: str = "raise") -> list:
    """Simulate many variants of one scene in lock-step.

    With ``errors="collect"`` a variant that blows up is returned as its
    ``NumericalBlowup`` instance in place of a result and the others finish;
    with ``errors="raise"`` the first failure is raised after the batch ends.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    kind = ModelKind.parse(kind)
    seeds = [int(s) for s in seeds]
    if not seeds:
        return []
    topo = topology(kind)
    seed_arr = np.array(seeds, dtype=np.uint64)
    x, v = _initial_arrays(topo, seed_arr)
    start = x[:, 0, :2].copy()
    failed: dict[int, NumericalBlowup] = {}
    for k in range(steps):
        x, v = _advance(x, v, topo, dt)
        bad = _bad_rows(x, v)
        if bad.any():
            for row in np.flatnonzero(bad):
                if row not in failed:
                    failed[row] = NumericalBlowup(
                        f"{kind} seed {seeds[row]} blew up at step {k + 1}", seed=seeds[row], step=k + 1)
            # park failed rows on a harmless state so the batch can continue
            x[bad] = 0.0
            v[bad] = 0.0
    if failed and errors == "raise":
        raise failed[min(failed)]

    b = len(seeds)
    raw = np.concatenate((x.reshape(b, -1), v.reshape(b, -1)), axis=1).astype("<f8")
    sums = _fnv1a64_rows(np.ascontiguousarray(raw).view(np.uint8).reshape(b, -1))
    dx = x[:, 0, 0] - start[:, 0]
    dy = x[:, 0, 1] - start[:, 1]
    fit = np.sqrt(dx * dx + dy * dy)
    out: list = []
    for row, seed in enumerate(seeds):
        if row in failed:
            out.append(failed[row])
        else:
            out.append(VariantResult(seed, float(fit[row]), int(sums[row]), steps))
    return out


def simulate(kind: ModelKind, seed: int, steps: int) -> VariantResult:
    return simulate_batch(kind, [seed], steps)[0]


def energy(state: WorldState) -> float:
    """Kinetic plus gravitational energy per unit mass, summed over bodies."""
    return float(_mechanical(state.positions[None], state.velocities[None])[0])
