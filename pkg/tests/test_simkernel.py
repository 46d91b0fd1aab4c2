import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetbench import simkernel as sk
from hetbench.simkernel import DT, GRAVITY, ModelKind, NumericalBlowup

KINDS = list(ModelKind)


def fnv_oracle(data: bytes) -> int:
    # textbook FNV-1a 64, written out independently of the package
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) % (1 << 64)
    return h


def splitmix_oracle(x: int) -> int:
    # reference splitmix64 output finaliser on Python ints
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % (1 << 64)
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % (1 << 64)
    return z ^ (z >> 31)


# -- hashing and random numbers --------------------------------------------

def test_fnv_known_vectors():
    assert sk.fnv1a64(b"") == 0xCBF29CE484222325
    assert sk.fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert sk.fnv1a64(b"foobar") == 0x85944171F73967E8


@given(st.binary(max_size=200))
def test_fnv_matches_oracle(data):
    assert sk.fnv1a64(data) == fnv_oracle(data)


@given(st.lists(st.binary(min_size=16, max_size=16), min_size=1, max_size=8))
def test_row_hash_matches_scalar_hash(rows):
    arr = np.frombuffer(b"".join(rows), dtype=np.uint8).reshape(len(rows), 16)
    got = sk._fnv1a64_rows(arr)
    assert [int(g) for g in got] == [fnv_oracle(r) for r in rows]


@given(st.integers(min_value=0, max_value=(1 << 64) - 1))
def test_mix64_matches_oracle(x):
    assert sk.mix64(x) == splitmix_oracle(x)


@given(st.lists(st.integers(min_value=0, max_value=(1 << 64) - 1), min_size=1, max_size=20),
       st.integers(min_value=0, max_value=1000))
def test_uniform01_matches_counter_oracle(seeds, counter):
    u = sk.uniform01(np.array(seeds, dtype=np.uint64), counter)
    assert ((u >= 0) & (u < 1)).all()
    for s, ui in zip(seeds, u):
        z = splitmix_oracle((s + (counter + 1) * 0x9E3779B97F4A7C15) % (1 << 64))
        assert ui == (z >> 11) / 2.0 ** 53


def test_state_bytes_layout():
    pos = np.array([[1.0, 2.0, 3.0]])
    vel = np.array([[4.0, 5.0, 6.0]])
    assert sk.state_bytes(pos, vel) == struct.pack("<6d", 1, 2, 3, 4, 5, 6)


# -- model construction ----------------------------------------------------

def test_box_structure():
    w = sk.build_model(ModelKind.BOX, 0)
    assert w.positions.shape == (1, 3)
    assert len(w.constraints) == 0


def test_humanoid_structure():
    w = sk.build_model(ModelKind.HUMANOID, 7)
    assert w.positions.shape[0] == 32
    assert len(w.constraints) >= 40


def test_build_model_deterministic():
    assert sk.build_model(ModelKind.BOX, 42).same_bits(sk.build_model(ModelKind.BOX, 42))
    assert not sk.build_model(ModelKind.BOX, 42).same_bits(sk.build_model(ModelKind.BOX, 43))


@pytest.mark.parametrize("kind", KINDS)
def test_initial_state_above_ground(kind):
    for seed in range(20):
        w = sk.build_model(kind, seed)
        assert w.positions[:, 2].min() >= 0.5 - 1e-12
        assert w.positions[:, 2].min() <= 2.0 + 1e-12


def test_parse_aliases():
    assert ModelKind.parse("BoxAndBall") is ModelKind.BOX_AND_BALL
    assert ModelKind.parse("arm-with-rope") is ModelKind.ARM_WITH_ROPE
    with pytest.raises(ValueError):
        ModelKind.parse("sphere")


def test_solver_work_ordering():
    work = [sk.solver_work(k) for k in (ModelKind.BOX, ModelKind.BOX_AND_BALL,
                                        ModelKind.ARM_WITH_ROPE, ModelKind.HUMANOID)]
    assert work == sorted(work) and len(set(work)) == 4


@pytest.mark.parametrize("kind", KINDS)
def test_colouring_is_a_proper_colouring(kind):
    topo = sk.topology(kind)
    for I, J, _, _ in topo.colors:
        bodies = list(I) + list(J)
        assert len(bodies) == len(set(bodies))
    assert sum(len(I) for I, _, _, _ in topo.colors) == len(topo.constraints)


# -- stepping --------------------------------------------------------------

def test_body_at_rest_on_ground_stays_put():
    w = sk.build_model(ModelKind.BOX, 0)
    rest = sk.WorldState(w.kind, np.array([[0.3, -0.2, 0.0]]), np.zeros((1, 3)), (), w.damping)
    after = sk.step(rest, DT)
    assert np.abs(after.positions - rest.positions).max() <= 1e-9


def test_free_body_single_step_velocity():
    w = sk.build_model(ModelKind.BOX, 3)
    after = sk.step(w, DT)
    expected = GRAVITY * DT * (1 - w.damping * DT)  # hand-evaluated update rule
    assert after.velocities[0, 2] == pytest.approx(expected, rel=1e-9, abs=1e-12)
    assert after.time == DT


def test_step_rejects_nonpositive_dt():
    w = sk.build_model(ModelKind.BOX, 0)
    with pytest.raises(ValueError):
        sk.step(w, 0.0)


def test_step_raises_on_blowup():
    w = sk.build_model(ModelKind.BOX, 0)
    bad = sk.WorldState(w.kind, np.array([[0.0, 0.0, 1.0]]), np.array([[np.inf, 0.0, 0.0]]), (), w.damping,
                        seed=9)
    with pytest.raises(NumericalBlowup) as info:
        sk.step(bad, DT)
    assert info.value.seed == 9


def _energy_oracle(state):
    # per-unit-mass kinetic plus gravitational energy, computed independently
    v = state.velocities
    return 0.5 * float((v * v).sum()) + 9.81 * float(state.positions[:, 2].sum())


@pytest.mark.parametrize("kind", KINDS)
def test_energy_non_increasing_over_1000_steps(kind):
    for seed in (0, 1):
        w = sk.build_model(kind, seed)
        e0 = _energy_oracle(w)
        energies = [e0]
        for _ in range(1000):
            w = sk.step(w, DT)
            energies.append(_energy_oracle(w))
        assert energies[-1] <= e0 * (1 + 1e-9)
        # windows of 10 steps
        for a in range(0, 990, 10):
            assert energies[a + 10] <= energies[a] + 1e-9 * abs(energies[a]) + 1e-12


def test_energy_helper_matches_oracle():
    w = sk.build_model(ModelKind.ARM_WITH_ROPE, 5)
    for _ in range(50):
        w = sk.step(w, DT)
    assert sk.energy(w) == pytest.approx(_energy_oracle(w), rel=1e-12)


# -- simulate --------------------------------------------------------------

def test_simulate_deterministic():
    assert sk.simulate(ModelKind.BOX, 42, 1000) == sk.simulate(ModelKind.BOX, 42, 1000)


def test_simulate_rejects_zero_steps():
    with pytest.raises(ValueError):
        sk.simulate(ModelKind.BOX, 42, 0)


@pytest.mark.parametrize("kind", KINDS)
def test_simulate_matches_step_by_step(kind):
    steps = 1000 if kind is ModelKind.BOX_AND_BALL else 200
    w0 = sk.build_model(kind, 7)
    w = w0
    for _ in range(steps):
        w = sk.step(w, DT)
    oracle = fnv_oracle(sk.state_bytes(w.positions, w.velocities))
    res = sk.simulate(kind, 7, steps)
    assert res.checksum == oracle
    assert res.steps_executed == steps
    assert res.fitness == sk.fitness_of(w0.positions, w.positions)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(KINDS), st.lists(st.integers(min_value=0, max_value=(1 << 64) - 1),
                                         min_size=1, max_size=6, unique=True),
       st.integers(min_value=1, max_value=40))
def test_batch_equals_single(kind, seeds, steps):
    batch = sk.simulate_batch(kind, seeds, steps)
    assert [r.seed for r in batch] == seeds
    assert batch == [sk.simulate(kind, s, steps) for s in seeds]


def test_batch_collect_mode_isolates_failures(monkeypatch):
    real = sk._bad_rows

    def flaky(p, v):
        bad = real(p, v)
        if p.shape[0] > 1:
            bad = bad.copy()
            bad[1] = True
        return bad

    monkeypatch.setattr(sk, "_bad_rows", flaky)
    out = sk.simulate_batch(ModelKind.BOX, [10, 11, 12], 5, errors="collect")
    assert isinstance(out[1], NumericalBlowup) and out[1].seed == 11 and out[1].step == 1
    monkeypatch.setattr(sk, "_bad_rows", real)
    assert out[0] == sk.simulate(ModelKind.BOX, 10, 5)
    assert out[2] == sk.simulate(ModelKind.BOX, 12, 5)


def test_batch_raise_mode(monkeypatch):
    monkeypatch.setattr(sk, "_bad_rows", lambda p, v: np.ones(p.shape[0], dtype=bool))
    with pytest.raises(NumericalBlowup):
        sk.simulate_batch(ModelKind.BOX, [1, 2], 3)


def test_derive_seed_is_deterministic_and_spreads():
    kids = {sk.derive_seed(123, k) for k in range(1000)}
    assert len(kids) == 1000
    assert sk.derive_seed(123, 5) == sk.derive_seed(123, 5)


def test_cost_ordering_per_step():
    import statistics
    import time

    medians = {}
    for kind in (ModelKind.BOX, ModelKind.BOX_AND_BALL, ModelKind.ARM_WITH_ROPE, ModelKind.HUMANOID):
        w = sk.build_model(kind, 1)
        times = []
        for _ in range(1000):
            t0 = time.perf_counter()
            w = sk.step(w, DT)
            times.append(time.perf_counter() - t0)
        medians[kind] = statistics.median(times)
    assert (medians[ModelKind.HUMANOID] > medians[ModelKind.ARM_WITH_ROPE]
            > medians[ModelKind.BOX_AND_BALL] > medians[ModelKind.BOX])
