"""Multi-objective AutoML for a gradient-boosted-trees pipeline.

Tunes booster hyperparameters, the number of boosting rounds and the
decision threshold against a user-chosen vector of minimized objectives
(error, fairness gaps, robustness, interpretability, sparsity, inference
time) with weighted-scalarization Bayesian optimization, harvesting cheap
threshold/round sub-evaluations from every trained model. Sessions are
pausable: an operator can inspect the Pareto front, narrow the explored
trade-off region and continue with more budget.
"""

__version__ = "0.1.0"
