import pytest
from hypothesis import given, settings, strategies as st

from hetbench.evoloop import PHASES, PhaseProfile, report_profile, report_profile_kv, run_ea
from hetbench.executor import DevicePerfModel, Executors
from hetbench.simkernel import ModelKind, simulate

DEV = DevicePerfModel(startup=0.01, capacity=64, step_wave_cost=1e-5)


def test_cardinality():
    pop, prof = run_ea(ModelKind.BOX, 4, 1, steps=20)
    assert len(pop.fitnesses) == 4 and len(pop.genomes) == 4
    assert pop.generation == 1
    assert set(prof.phases) == set(PHASES)


def test_deterministic_trajectory():
    a, _ = run_ea(ModelKind.BOX_AND_BALL, 8, 3, steps=30, seed=11)
    b, _ = run_ea(ModelKind.BOX_AND_BALL, 8, 3, steps=30, seed=11)
    assert a == b
    c, _ = run_ea(ModelKind.BOX_AND_BALL, 8, 3, steps=30, seed=12)
    assert c.genomes != a.genomes


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 12), st.integers(1, 5), st.integers(0, 1000))
def test_elitism(pop_size, gens, seed):
    pop, _ = run_ea(ModelKind.BOX, pop_size, gens, steps=10, seed=seed)
    hist = pop.best_history
    assert len(hist) == gens + 1
    assert all(b >= a for a, b in zip(hist, hist[1:]))
    assert max(pop.fitnesses) == hist[-1]


def test_fitness_is_kernel_fitness():
    pop, _ = run_ea(ModelKind.BOX, 6, 2, steps=25)
    for g, f in zip(pop.genomes, pop.fitnesses):
        assert simulate(ModelKind.BOX, g, 25).fitness == f


@pytest.mark.parametrize("choice", ["accel", "hybrid"])
def test_other_executors_give_same_trajectory(choice):
    ref, _ = run_ea(ModelKind.BOX, 6, 2, steps=15)
    got, _ = run_ea(ModelKind.BOX, 6, 2, steps=15, executor_choice=choice, executors=Executors(DEV))
    assert got == ref


def test_phase_accounting():
    _, prof = run_ea(ModelKind.BOX, 16, 4, steps=200)
    accounted = sum(prof.phases.values())
    assert abs(prof.total - accounted) <= 0.05 * prof.total
    assert prof.unaccounted == pytest.approx(max(0.0, prof.total - accounted))


def test_validation():
    with pytest.raises(ValueError):
        run_ea(ModelKind.BOX, 1, 1)
    with pytest.raises(ValueError):
        run_ea(ModelKind.BOX, 4, 0)
    with pytest.raises(ValueError):
        run_ea(ModelKind.BOX, 4, 1, executor_choice="accel")
    with pytest.raises(ValueError):
        run_ea(ModelKind.BOX, 4, 1, executor_choice="tpu", executors=Executors(DEV))


def test_report_all_zero():
    text = report_profile(PhaseProfile())
    body = [l for l in text.splitlines() if l.split()[0] in PHASES]
    assert len(body) == 4
    assert all(l.split()[1] == "0.000000" and l.split()[2] == "0.000" for l in body)


def test_report_fractions_and_order():
    prof = PhaseProfile({"evaluation": 8.0, "selection": 1.0, "variation": 0.5, "bookkeeping": 0.5}, total=10.0)
    text = report_profile(prof)
    rows = [l.split() for l in text.splitlines() if l.split()[0] in PHASES]
    assert rows[0][0] == "evaluation" and rows[0][2] == "0.800"
    secs = [float(r[1]) for r in rows]
    assert secs == sorted(secs, reverse=True)
    kv = dict(l.split("=") for l in report_profile_kv(prof).splitlines())
    assert kv["evaluation_fraction"] == "0.800"
    assert prof.fraction("selection") == 0.1
