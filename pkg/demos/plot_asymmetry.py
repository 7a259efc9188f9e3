"""
Loss aversion tilts scores against under-delivery
=================================================

When evaluators weigh missing features lambda times as heavily as extra
ones, the score drop for under-delivery exceeds the gain for
over-delivery by the alpha-weighted mean of lambda.
"""

# %%
from pathlib import Path

from overspec.aggregation import EvaluatorPopulation, lambda_eff, population_scores_asymmetric

DATA = Path(__file__).resolve().parent / "data"
pop = EvaluatorPopulation.load(DATA / "population_mixed.json")
print("alpha:", pop.alpha, "lambda:", pop.lam)
print("lambda_eff:", lambda_eff(pop))

# %%
# The third evaluator has lambda = 99 but alpha = 0, so it carries no
# weight.  The ratio of gaps is the same for every delta.
for delta in (1, 2, 4):
    res = population_scores_asymmetric(delta, pop)
    print(f"delta={delta}: gap over {res.gap_over:.3f}, gap under {res.gap_under:.3f}, ratio {res.ratio:.3f}")
