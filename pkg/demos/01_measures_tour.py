"""A tour of the objective catalog on a synthetic income task.

Trains one gradient-boosted model, then evaluates every measure the
optimizer can minimize: error, three fairness gaps, calibration,
perturbation robustness, sparsity and the two interpretability scores.
Run with: python demos/01_measures_tour.py
"""

from axmc import gbt
from axmc.data import SplitSpec, split
from axmc.gbt import BoosterParams
from axmc.measures import (
    EvalContext,
    RobustnessConfig,
    calibration_gap,
    fairness_gap,
    interaction_strength,
    main_effect_complexity,
    mmce,
    robustness_perturbation,
    sparsity,
)
from axmc.synthetic import income_like

# 5000 people, ten numeric features, protected group with biased labels.
data = income_like(n=5000, bias=0.15, seed=0)
train_ds, valid_ds, test_ds = split(data, SplitSpec(seed=1))
print(f"rows: train={train_ds.n} valid={valid_ds.n} test={test_ds.n}")
print(f"positive rate: {data.labels.mean():.3f}, group-1 share: {data.groups.mean():.3f}")

# One mid-sized booster. max_rounds doubles as the tunable round count.
params = BoosterParams(
    eta=0.1, max_depth=5, subsample=0.8, colsample=0.8, gamma=0.05, max_rounds=120, seed=7
)
model = gbt.train(train_ds, params)

# The context caches staged margins, so trying other (rounds, threshold)
# points later costs almost nothing.
ctx = EvalContext.build(model, valid_ds, thr=0.5, n=120)

print("\n-- predictive performance --")
print(f"mmce @ thr=0.5, all rounds: {mmce(ctx):.4f}")
print(f"mmce @ thr=0.3:             {mmce(ctx.at(0.3, 120)):.4f}")
print(f"mmce with 30 rounds only:   {mmce(ctx.at(0.5, 30)):.4f}")

print("\n-- fairness (absolute between-group gaps) --")
print(f"F1 gap:          {fairness_gap(ctx, kind='f1'):.4f}")
print(f"TPR gap:         {fairness_gap(ctx, kind='independence'):.4f}")
print(f"sufficiency gap: {fairness_gap(ctx, kind='sufficiency'):.4f}")
print(f"calibration gap: {calibration_gap(ctx):.4f}")

print("\n-- robustness: accuracy shift under feature noise --")
for eps in (0.001, 0.005, 0.01):
    value = robustness_perturbation(ctx, RobustnessConfig(epsilon=eps, seed=3))
    print(f"epsilon={eps:5.3f}: {value:.4f}")

print("\n-- structure and interpretability --")
print(f"sparsity (fraction of features used): {sparsity(ctx):.2f}")
print(f"interaction strength: {interaction_strength(model, valid_ds, n=120):.4f}")
print(f"main effect complexity: {main_effect_complexity(model, valid_ds, n=120):.2f}")

# Truncating the very same model changes the structural measures too.
print("\nwith only the first 20 trees:")
print(f"sparsity: {sparsity(ctx.at(0.5, 20)):.2f}")
print(f"interaction strength: {interaction_strength(model, valid_ds, n=20):.4f}")
