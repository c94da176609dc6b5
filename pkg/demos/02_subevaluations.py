"""Sub-evaluations: many operating points from one training run.

A trained boosting model can be re-scored at truncated round counts and
alternative decision thresholds for (almost) free, because the staged
margins are one cumulative pass over the trees. This script harvests the
candidate grid for a single model and shows which points survive the
Pareto filter against the full evaluation.
Run with: python demos/02_subevaluations.py
"""

import time

from axmc import engine, gbt
from axmc.data import SplitSpec, split
from axmc.gbt import BoosterParams
from axmc.measures import EvalContext, MeasureSpec, evaluate_all
from axmc.mobo import PipelineConfig
from axmc.pareto import Archive, EvalRecord, filter_subevals, pareto_front
from axmc.synthetic import income_like

data = income_like(n=5000, bias=0.15, seed=0)
train_ds, valid_ds, _ = split(data, SplitSpec(seed=1))
specs = (MeasureSpec("mmce"), MeasureSpec("f1_gap"))

params = BoosterParams(
    eta=0.1, max_depth=5, subsample=0.8, colsample=0.8, gamma=0.05, max_rounds=100, seed=7
)
config = PipelineConfig(booster=params, nrounds=100, thr=0.5)

t0 = time.perf_counter()
model = gbt.train(train_ds, params)
t_train = time.perf_counter() - t0

# The grid: {25%, 50%, 75%, 90%, 100%} of the rounds x thresholds 0.0..1.0,
# minus the pair the full evaluation already covers.
grid = engine.subevaluation_grid(config.nrounds, config.thr)
print(f"candidate grid: {len(grid)} points, round counts {sorted({n for n, _ in grid})}")

t0 = time.perf_counter()
margins = gbt.staged_margins(model, valid_ds)
candidates = engine.subevaluations(model, config, specs, valid_ds, margins=margins)
t_sub = time.perf_counter() - t0
print(f"training took {t_train:.2f}s; scoring all {len(candidates)} candidates took "
      f"{t_sub * 1000:.0f}ms ({t_sub / t_train:.1%} of training)")

# Archive the full evaluation, then keep only candidates that extend the front.
archive = Archive(k=2)
full_vector = evaluate_all(specs, EvalContext(model=model, data=valid_ds,
                                              margins=margins, thr=0.5, n=100))
archive.append(EvalRecord(config=config, measures=full_vector,
                          provenance="full", iteration=0, wall_time=t_train))
survivors = filter_subevals(archive, candidates)
for record in survivors:
    archive.append(record)

print(f"\nfull evaluation: mmce={full_vector.values[0]:.4f} f1_gap={full_vector.values[1]:.4f}")
print(f"surviving sub-evaluations: {len(survivors)} of {len(candidates)}")
print("\nfront after the harvest (sorted by error):")
front = sorted(pareto_front(archive.records), key=lambda r: r.measures.values[0])
for record in front:
    mmce_v, gap = record.measures.values
    print(f"  n={record.config.nrounds:3d} thr={record.config.thr:3.1f} "
          f"mmce={mmce_v:.4f} f1_gap={gap:.4f} [{record.provenance}]")
