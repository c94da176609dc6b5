"""The interactive workflow, headless: run, inspect, narrow, continue.

A first small budget maps out the trade-off between error and the F1
fairness gap; the operator then restricts the scalarization weights to
the interesting region and grants more budget. Finally the front is
re-scored on the untouched test split, the table an operator would pick
a deployment model from.
Run with: python demos/03_steered_search.py  (about a minute)
"""

from axmc import engine
from axmc.measures import MeasureSpec
from axmc.mobo import WeightBox
from axmc.synthetic import income_like

data = income_like(n=2000, bias=0.15, seed=0)
specs = (MeasureSpec("mmce"), MeasureSpec("f1_gap"))


def show(rows, title, limit=8):
    print(f"\n{title}")
    print(f"{'mmce':>8} {'f1_gap':>8} {'nrounds':>8} {'thr':>5}  provenance")
    for row in rows[:limit]:
        print(f"{row['mmce']:8.4f} {row['f1_gap']:8.4f} {row['nrounds']:8d} "
              f"{row['thr']:5.2f}  {row['provenance']}")
    if len(rows) > limit:
        print(f"  ... {len(rows) - limit} more")


# Stage 1: a first look with a small budget.
state = engine.init_session(data, specs, seed=7, session_id="steered-demo")
engine.run(state, iterations=10)
show(engine.report(state, "valid"), "front after 10 iterations (validation)")

# The operator decides: ignore the extremes, explore mid trade-offs.
engine.set_weight_box(state, WeightBox(bounds=((0.1, 0.9), (0.0, 1.0))))
print("\nweight box narrowed to w1 in [0.1, 0.9]; continuing with +15 iterations")

# Stage 2: continue in the focused region. The archive is kept; only the
# weight sampling changes.
engine.run(state, iterations=15)
show(engine.report(state, "valid"), "front after 25 iterations (validation)")

# Model selection happens on the untouched test split.
show(engine.report(state, "test"), "the same front re-scored on the test split")

path = engine.optimization_path(state)
best = path[-1]["best"]
print(f"\nbest single values seen: mmce={best['mmce']:.4f}, f1_gap={best['f1_gap']:.4f}")
print(f"archive size: {len(state.archive)} records "
      f"({state.m} initial + {state.budget.iterations_done} proposals + surviving sub-evals)")
