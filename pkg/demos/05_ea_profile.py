"""Where does an evolutionary run spend its time?

A (mu + lambda) loop over variant seeds, timed per phase.  Simulation
(evaluation) dwarfs everything else, which is why faster batch evaluation is
worth the trouble.
"""
from hetbench.evoloop import report_profile, run_ea
from hetbench.simkernel import ModelKind

population, profile = run_ea(ModelKind.BOX, population_size=32, generations=5, steps=500)
print(report_profile(profile))
print(f"evaluation share: {profile.fraction('evaluation'):.1%}")
print("best fitness per generation:", " ".join(f"{f:.3f}" for f in population.best_history))
