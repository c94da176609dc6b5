"""Objective catalog: every quantity the optimizer can minimize.

All measures are scalars over (model, dataset, threshold, rounds). The
threshold-derived ones (error, fairness gaps, calibration) read cached
staged margins, so sweeping (n, thr) over a trained model never touches
the trees again. Model-structure and prediction-based measures (sparsity,
ALE complexity, interaction strength, robustness) re-predict as needed.

ALE-based measures accept either a trained model or a plain callable
``X -> probabilities``, which keeps them checkable against analytic
predictors.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import gbt
from .data import Dataset
from .errors import (
    ArgumentError,
    ConfigurationError,
    DegenerateFeatureError,
    GroupCoverageError,
    InputError,
    NotApplicableError,
    UndefinedRateError,
)
from .gbt import BoostedModel

logger = logging.getLogger("axmc.measures")

MEASURE_IDS = (
    "mmce",
    "f1_gap",
    "tpr_gap",
    "suff_gap",
    "calib_gap",
    "robustness",
    "sparsity",
    "interaction_strength",
    "main_effect_complexity",
    "inference_time",
)
FAIRNESS_IDS = ("f1_gap", "tpr_gap", "suff_gap", "calib_gap")

DEFAULT_ALE_BINS = 20
DEFAULT_MEC_TOL = 0.95
DEFAULT_CALIBRATION_BINS = 10


@dataclass(frozen=True)
class MeasureSpec:
    """One minimized objective plus its measure-specific settings."""

    id: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.id not in MEASURE_IDS:
            raise ConfigurationError(f"unknown measure id {self.id!r}")


@dataclass(frozen=True)
class RobustnessConfig:
    """Perturbation settings: noise scale as a fraction of feature range."""

    epsilon: float = 0.005
    seed: int = 0
    repeats: int = 5

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 0.05:
            raise ArgumentError(f"epsilon={self.epsilon} outside sane range")
        if self.repeats < 1:
            raise ArgumentError("repeats must be >= 1")


@dataclass(frozen=True)
class MeasureVector:
    """Evaluation of one configuration under the session's ordered objectives."""

    values: tuple[float, ...]

    def __post_init__(self):
        if not all(np.isfinite(v) for v in self.values):
            raise ArgumentError(f"measure vector contains non-finite values: {self.values}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class EvalContext:
    """A trained model pinned to a dataset, threshold and round count.

    Carries the staged-margin cache so that re-evaluating at a different
    (n, thr) costs a couple of vector operations.
    """

    model: BoostedModel
    data: Dataset
    margins: np.ndarray
    thr: float
    n: int

    def __post_init__(self):
        if not 0.0 <= self.thr <= 1.0:
            raise ArgumentError(f"thr={self.thr} outside [0, 1]")
        if not 1 <= self.n <= self.model.rounds_trained:
            raise ArgumentError(f"n={self.n} outside [1, {self.model.rounds_trained}]")
        if self.margins.shape != (self.model.rounds_trained, self.data.n):
            raise ArgumentError("staged margin cache shape does not match model/data")

    @classmethod
    def build(cls, model: BoostedModel, data: Dataset, thr: float = 0.5, n: int | None = None):
        if data.n == 0:
            raise InputError("empty evaluation dataset")
        margins = gbt.staged_margins(model, data)
        return cls(model=model, data=data, margins=margins, thr=thr, n=n or model.rounds_trained)

    def at(self, thr: float, n: int) -> "EvalContext":
        """Same model/data/margins, different evaluation point."""
        return replace(self, thr=thr, n=n)

    def proba(self) -> np.ndarray:
        return gbt._sigmoid(self.margins[self.n - 1])

    def hard_labels(self) -> np.ndarray:
        return (self.proba() >= self.thr).astype(np.int8)


def mmce(ctx: EvalContext) -> float:
    """Mean misclassification error of thresholded predictions."""
    if ctx.data.n == 0:
        raise InputError("empty evaluation dataset")
    return float((ctx.hard_labels() != ctx.data.labels).mean())


def _confusion(hard: np.ndarray, y: np.ndarray) -> tuple[int, int, int, int]:
    tp = int(((hard == 1) & (y == 1)).sum())
    fp = int(((hard == 1) & (y == 0)).sum())
    fn = int(((hard == 0) & (y == 1)).sum())
    tn = int(((hard == 0) & (y == 0)).sum())
    return tp, fp, fn, tn


_warned_degenerate_f1 = False


def _degenerate_f1() -> float:
    # degenerate confusion cells yield F1 = 0 so extreme thresholds stay
    # defined; warn once per process, the grid sweep hits this constantly
    global _warned_degenerate_f1
    level = logging.DEBUG if _warned_degenerate_f1 else logging.WARNING
    logger.log(level, "undefined precision or recall (empty denominator); F1 set to 0")
    _warned_degenerate_f1 = True
    return 0.0


def _f1(tp: int, fp: int, fn: int) -> float:
    if tp + fp == 0 or tp + fn == 0:
        return _degenerate_f1()
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision + recall == 0.0:
        return _degenerate_f1()
    return 2.0 * precision * recall / (precision + recall)


def _group_split(ctx: EvalContext, groups: np.ndarray | None):
    if groups is None:
        groups = ctx.data.groups
    if groups is None:
        raise ConfigurationError("fairness measure requires a protected attribute")
    groups = np.asarray(groups)
    if groups.shape[0] != ctx.data.n:
        raise ArgumentError("group labels not aligned with dataset rows")
    masks = [groups == 0, groups == 1]
    for grp, mask in enumerate(masks):
        if not mask.any():
            raise GroupCoverageError(f"protected group {grp} absent from data")
    return masks


def fairness_gap(ctx: EvalContext, groups: np.ndarray | None = None, kind: str = "f1") -> float:
    """Absolute between-group gap of a confusion-table statistic.

    kind="independence": |TPR0 - TPR1|. kind="sufficiency":
    max(|FPR0 - FPR1|, |FNR0 - FNR1|). kind="f1": |F1_0 - F1_1|.
    """
    masks = _group_split(ctx, groups)
    hard = ctx.hard_labels()
    y = ctx.data.labels
    stats = []
    for mask in masks:
        tp, fp, fn, tn = _confusion(hard[mask], y[mask])
        if kind == "independence":
            if tp + fn == 0:
                raise UndefinedRateError("a group has no actual positives; TPR undefined")
            stats.append(tp / (tp + fn))
        elif kind == "sufficiency":
            if tp + fn == 0:
                raise UndefinedRateError("a group has no actual positives; FNR undefined")
            if fp + tn == 0:
                raise UndefinedRateError("a group has no actual negatives; FPR undefined")
            stats.append((fp / (fp + tn), fn / (tp + fn)))
        elif kind == "f1":
            stats.append(_f1(tp, fp, fn))
        else:
            raise ArgumentError(f"unknown fairness kind {kind!r}")
    if kind == "sufficiency":
        fpr_gap = abs(stats[0][0] - stats[1][0])
        fnr_gap = abs(stats[0][1] - stats[1][1])
        return float(max(fpr_gap, fnr_gap))
    return float(abs(stats[0] - stats[1]))


def _ece(proba: np.ndarray, y: np.ndarray, bins: int) -> float:
    idx = np.clip((proba * bins).astype(np.int64), 0, bins - 1)
    n = proba.shape[0]
    total = 0.0
    for b in range(bins):
        mask = idx == b
        nb = int(mask.sum())
        if nb == 0:
            continue
        total += nb / n * abs(float(proba[mask].mean()) - float(y[mask].mean()))
    return total


def calibration_gap(ctx: EvalContext, groups: np.ndarray | None = None, bins: int = DEFAULT_CALIBRATION_BINS) -> float:
    """Absolute difference of per-group expected calibration errors."""
    if bins < 2:
        raise ArgumentError("bins must be >= 2")
    masks = _group_split(ctx, groups)
    proba = ctx.proba()
    y = ctx.data.labels.astype(np.float64)
    eces = [_ece(proba[m], y[m], bins) for m in masks]
    return float(abs(eces[0] - eces[1]))


def robustness_perturbation(ctx: EvalContext, cfg: RobustnessConfig) -> float:
    """Accuracy shift under small Gaussian noise on numeric features.

    Noise sd per column is epsilon times that column's stored range;
    indicator (one-hot) columns are never perturbed. Returns the mean
    absolute accuracy difference over ``cfg.repeats`` seeded draws.
    """
    X = ctx.data.matrix()
    indicator = ctx.data.indicator_mask()
    if indicator.all():
        raise NotApplicableError("no numeric features to perturb")
    ranges = ctx.data.column_ranges()
    scale = np.where(indicator, 0.0, cfg.epsilon * (ranges[:, 1] - ranges[:, 0]))
    y = ctx.data.labels
    acc0 = float((ctx.hard_labels() == y).mean())
    rng = np.random.default_rng(cfg.seed)
    diffs = []
    for _ in range(cfg.repeats):
        noise = rng.standard_normal(X.shape) * scale
        proba = gbt.predict_proba_array(ctx.model, X + noise, ctx.n)
        hard = (proba >= ctx.thr).astype(np.int8)
        diffs.append(abs(acc0 - float((hard == y).mean())))
    return float(np.mean(diffs))


def sparsity(ctx: EvalContext) -> float:
    """Fraction of source features the first n trees actually split on."""
    used = gbt.features_used(ctx.model, ctx.n)
    return len(used) / len(ctx.model.source_names)


def _predictor(model, n: int | None):
    if callable(model):
        return model
    return lambda X: gbt.predict_proba_array(model, X, n)


def ale_curve(
    model,
    data: Dataset,
    feature: int,
    n: int | None = None,
    bins: int = DEFAULT_ALE_BINS,
) -> tuple[np.ndarray, np.ndarray]:
    """First-order accumulated-local-effects curve of one numeric feature.

    Returns (edges, values): quantile bin edges and the accumulated,
    data-centered effect at each edge. Empty bins contribute zero local
    effect. ``model`` may be a BoostedModel (evaluated at rounds ``n``)
    or any callable mapping a feature matrix to predictions.
    """
    if bins < 2:
        raise ArgumentError("bins must be >= 2")
    X = data.matrix()
    x = X[:, feature]
    valid = ~np.isnan(x)
    xv = x[valid]
    if np.unique(xv).size < 2:
        raise DegenerateFeatureError(f"feature {feature} is constant")
    predict = _predictor(model, n)
    edges = np.unique(np.quantile(xv, np.linspace(0.0, 1.0, bins + 1)))
    n_bins = edges.size - 1
    bin_of = np.clip(np.searchsorted(edges, xv, side="left") - 1, 0, n_bins - 1)
    local = np.zeros(n_bins)
    Xv = X[valid]
    for b in range(n_bins):
        rows = bin_of == b
        if not rows.any():
            continue
        upper = Xv[rows].copy()
        upper[:, feature] = edges[b + 1]
        lower = Xv[rows].copy()
        lower[:, feature] = edges[b]
        local[b] = float((predict(upper) - predict(lower)).mean())
    values = np.concatenate([[0.0], np.cumsum(local)])
    center = float(np.interp(xv, edges, values).mean())
    return edges, values - center


def _ale_features(data: Dataset, bins: int):
    """Columns eligible for ALE plus the per-column bin count."""
    X = data.matrix()
    out = []
    for j in range(X.shape[1]):
        x = X[:, j]
        distinct = np.unique(x[~np.isnan(x)]).size
        if distinct < 2:
            continue
        out.append((j, max(2, min(bins, distinct - 1))))
    return out


def _segment_sse(x: np.ndarray, v: np.ndarray) -> float:
    """SSE of the least-squares line through (x, v); constant fit fallback."""
    if x.size == 0:
        return 0.0
    xm = x.mean()
    vm = v.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx <= 0.0:
        return float(((v - vm) ** 2).sum())
    slope = float(((x - xm) * (v - vm)).sum()) / sxx
    resid = v - (vm + slope * (x - xm))
    return float((resid**2).sum())


def _piecewise_sse(x: np.ndarray, v: np.ndarray, cuts: list[float]) -> float:
    bounds = [-np.inf] + sorted(cuts) + [np.inf]
    total = 0.0
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        mask = (x >= lo) & (x < hi)
        total += _segment_sse(x[mask], v[mask])
    return total


def main_effect_complexity(
    model,
    data: Dataset,
    n: int | None = None,
    bins: int = DEFAULT_ALE_BINS,
    tol: float = DEFAULT_MEC_TOL,
) -> float:
    """Average number of linear segments needed to describe the ALE curves.

    Per feature, segments are added greedily at bin edges until the
    piecewise-linear fit explains at least ``tol`` of the per-row ALE
    variance; features are averaged weighted by that variance, so ignored
    features cost nothing. A model that uses no feature scores 0.
    """
    candidates = _ale_features(data, bins)
    if not candidates:
        raise NotApplicableError("all features constant; main effects undefined")
    X = data.matrix()
    weights, segs = [], []
    for j, bins_j in candidates:
        edges, values = ale_curve(model, data, j, n=n, bins=bins_j)
        x = X[:, j]
        valid = ~np.isnan(x)
        pointwise = np.interp(x[valid], edges, values)
        sst = float(((pointwise - pointwise.mean()) ** 2).sum())
        if sst <= 1e-12:
            continue
        interior = list(edges[1:-1])
        cuts: list[float] = []
        while True:
            sse = _piecewise_sse(x[valid], pointwise, cuts)
            if 1.0 - sse / sst >= tol or not interior:
                break
            best_edge, best_sse = None, None
            for e in interior:
                cand = _piecewise_sse(x[valid], pointwise, cuts + [e])
                if best_sse is None or cand < best_sse - 1e-15:
                    best_edge, best_sse = e, cand
            if best_sse is None or best_sse >= sse - 1e-15:
                break  # no edge improves the fit further
            cuts.append(best_edge)
            interior.remove(best_edge)
        weights.append(sst)
        segs.append(len(cuts) + 1)
    if not weights:
        return 0.0
    w = np.asarray(weights)
    return float((w * np.asarray(segs, dtype=np.float64)).sum() / w.sum())


def interaction_strength(
    model,
    data: Dataset,
    n: int | None = None,
    bins: int = DEFAULT_ALE_BINS,
) -> float:
    """Fraction of prediction variance the additive ALE surrogate misses.

    0 means the model is (empirically) purely additive in its features;
    a constant predictor is defined as 0.
    """
    candidates = _ale_features(data, bins)
    X = data.matrix()
    if X.shape[1] == 0:
        raise NotApplicableError("dataset has no features")
    predict = _predictor(model, n)
    f = predict(X)
    den = float(((f - f.mean()) ** 2).sum())
    if den <= 1e-18:
        return 0.0
    g = np.full(X.shape[0], float(f.mean()))
    for j, bins_j in candidates:
        edges, values = ale_curve(model, data, j, n=n, bins=bins_j)
        x = X[:, j]
        valid = ~np.isnan(x)
        g[valid] += np.interp(x[valid], edges, values)
    num = float(((f - g) ** 2).sum())
    return max(num / den, 0.0)


def inference_time(ctx: EvalContext, repeats: int = 5) -> float:
    """Median wall-clock milliseconds per 1000 rows for one prediction pass."""
    if repeats < 3:
        raise ArgumentError("repeats must be >= 3")
    X = ctx.data.matrix()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        gbt.predict_proba_array(ctx.model, X, ctx.n)
        times.append(time.perf_counter() - t0)
    return float(np.median(times) * 1000.0 * (1000.0 / ctx.data.n))


def validate_specs(specs: list[MeasureSpec] | tuple[MeasureSpec, ...]) -> None:
    ids = [s.id for s in specs]
    if len(ids) != len(set(ids)):
        raise ConfigurationError(f"duplicate measure ids in {ids}")
    if not 1 <= len(ids) <= 5:
        raise ConfigurationError("between 1 and 5 objectives are supported")


def evaluate_all(
    specs: list[MeasureSpec] | tuple[MeasureSpec, ...],
    ctx: EvalContext,
    groups: np.ndarray | None = None,
) -> MeasureVector:
    """Evaluate every objective at the context's (n, thr), in spec order."""
    validate_specs(specs)
    if groups is None:
        groups = ctx.data.groups
    values = []
    for spec in specs:
        p = spec.params
        if spec.id == "mmce":
            values.append(mmce(ctx))
        elif spec.id == "f1_gap":
            values.append(fairness_gap(ctx, groups, kind="f1"))
        elif spec.id == "tpr_gap":
            values.append(fairness_gap(ctx, groups, kind="independence"))
        elif spec.id == "suff_gap":
            values.append(fairness_gap(ctx, groups, kind="sufficiency"))
        elif spec.id == "calib_gap":
            values.append(
                calibration_gap(ctx, groups, bins=p.get("bins", DEFAULT_CALIBRATION_BINS))
            )
        elif spec.id == "robustness":
            cfg = RobustnessConfig(
                epsilon=p.get("epsilon", 0.005),
                seed=p.get("seed", 0),
                repeats=p.get("repeats", 5),
            )
            values.append(robustness_perturbation(ctx, cfg))
        elif spec.id == "sparsity":
            values.append(sparsity(ctx))
        elif spec.id == "interaction_strength":
            raw = interaction_strength(ctx.model, ctx.data, ctx.n, bins=p.get("bins", DEFAULT_ALE_BINS))
            if raw > 1.0:
                logger.warning("interaction_strength %.3f clipped to 1.0", raw)
                raw = 1.0
            values.append(raw)
        elif spec.id == "main_effect_complexity":
            values.append(
                main_effect_complexity(
                    ctx.model,
                    ctx.data,
                    ctx.n,
                    bins=p.get("bins", DEFAULT_ALE_BINS),
                    tol=p.get("tol", DEFAULT_MEC_TOL),
                )
            )
        elif spec.id == "inference_time":
            values.append(inference_time(ctx, repeats=p.get("repeats", 5)))
        else:  # pragma: no cover - guarded by MeasureSpec
            raise ConfigurationError(f"unknown measure id {spec.id!r}")
    return MeasureVector(values=tuple(float(v) for v in values))
