"""
Majority aggregation of evaluator rankings
==========================================

Pairwise majority passes on a bias held by more than half the panel but
not one held by a minority.  It can also be cyclic.
"""

# %%
from pathlib import Path

from overspec.aggregation import (BenchmarkProfile, check_deterministic_inheritance,
                                  majority_counterexample, majority_pairwise)
from overspec.scenario import default_scenario

DATA = Path(__file__).resolve().parent / "data"
cfg = default_scenario()
pair = ("YDyn", "YSorted")

# %%
# A strict-majority coalition ranking the overspecified output first.  No
# random profile lets the rest of the panel overturn it.
rep = check_deterministic_inheritance(cfg, "a#", ["YDyn", "YSorted", ""], pair, k=3, coalition=[0, 1],
                                      trials=2_000, seed=0)
print(f"k=3, coalition of 2: {rep.violations} violations in {rep.trials} profiles")

# %%
# With only one of three evaluators in the coalition, the other two win.
profile, coalition, cpair = majority_counterexample()
print("rankings:", profile.rankings)
print(f"aggregate prefers {cpair[0]} over {cpair[1]}:", majority_pairwise(profile).prefers(*cpair))

# %%
# Three evaluators with rotated rankings produce a Condorcet cycle.
cyclic = BenchmarkProfile.load(DATA / "profile_condorcet.json")
t = majority_pairwise(cyclic)
print("cycles:", t.cycles(), "| order:", t.order())
