"""Gradient-boosted decision trees for binary classification with log loss.

Second-order (Newton) boosting with exact greedy split search on presorted
feature values. The trained ensemble supports prediction truncated to the
first n rounds, which is what makes threshold/round sub-evaluations cheap:
one staged pass yields every sub-model's margins without retraining.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .data import Dataset
from .errors import ArgumentError, DegenerateTargetError

# Tuning bounds of the searched hyperparameter space: (low, high, scale).
PARAM_BOUNDS = {
    "eta": (0.01, 0.3, "linear"),
    "max_depth": (1, 12, "linear"),
    "min_child_weight": (2.0**-4, 2.0**4, "log"),
    "subsample": (0.5, 1.0, "linear"),
    "colsample": (0.5, 1.0, "linear"),
    "reg_lambda": (2.0**-10, 2.0**10, "log"),
    "gamma": (2.0**-7, 2.0**6, "log"),
    "max_rounds": (10, 500, "linear"),
}

INTEGER_PARAMS = ("max_depth", "max_rounds")


@dataclass(frozen=True)
class BoosterParams:
    """Hyperparameters of one booster fit.

    Construction does not enforce the tuning-space bounds (tests and
    callers may use out-of-range values such as gamma=0); ``validate``
    checks them and is applied to every sampled configuration.
    """

    eta: float = 0.1
    max_depth: int = 6
    min_child_weight: float = 1.0
    subsample: float = 1.0
    colsample: float = 1.0
    reg_lambda: float = 1.0
    gamma: float = 2.0**-7
    max_rounds: int = 100
    seed: int = 0

    def validate(self) -> "BoosterParams":
        for name, (low, high, scale) in PARAM_BOUNDS.items():
            value = getattr(self, name)
            if not (low <= value <= high):
                raise ArgumentError(f"{name}={value} outside [{low}, {high}]")
            if scale == "log" and value <= 0:
                raise ArgumentError(f"{name} must be strictly positive")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BoosterParams":
        return cls(**d)


@dataclass(frozen=True)
class BoostedModel:
    """Immutable trained ensemble stored as flat node arrays.

    Node child ids are global indices into the concatenated arrays;
    ``offsets[t]`` is the root of tree t. ``feature_usage[t, s]`` counts
    splits on source feature s inside tree t (one-hot columns collapsed
    to their origin).
    """

    base_score: float
    params: BoosterParams
    rounds_trained: int
    feature_names: tuple[str, ...]
    source_names: tuple[str, ...]
    source_index: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    missing_left: np.ndarray
    left: np.ndarray
    right: np.ndarray
    is_leaf: np.ndarray
    leaf_value: np.ndarray
    offsets: np.ndarray
    feature_usage: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def to_json(self) -> str:
        """Serialize to JSON; ``from_json`` restores an identical model."""
        trees = []
        for t in range(self.rounds_trained):
            lo, hi = int(self.offsets[t]), int(self.offsets[t + 1])
            nodes = []
            for i in range(lo, hi):
                if self.is_leaf[i]:
                    nodes.append({"leaf": float(self.leaf_value[i])})
                else:
                    nodes.append(
                        {
                            "feature": int(self.feature[i]),
                            "threshold": float(self.threshold[i]),
                            "missing_left": bool(self.missing_left[i]),
                            "left": int(self.left[i]) - lo,
                            "right": int(self.right[i]) - lo,
                        }
                    )
            trees.append({"nodes": nodes})
        return json.dumps(
            {
                "base_score": self.base_score,
                "trees": trees,
                "params": self.params.to_dict(),
                "feature_map": {
                    "feature_names": list(self.feature_names),
                    "source_names": list(self.source_names),
                    "source_index": [int(s) for s in self.source_index],
                },
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "BoostedModel":
        raw = json.loads(text)
        feature, threshold, missing_left = [], [], []
        left, right, is_leaf, leaf_value = [], [], [], []
        offsets = [0]
        for tree in raw["trees"]:
            lo = offsets[-1]
            for node in tree["nodes"]:
                if "leaf" in node:
                    feature.append(-1)
                    threshold.append(math.nan)
                    missing_left.append(False)
                    left.append(-1)
                    right.append(-1)
                    is_leaf.append(True)
                    leaf_value.append(node["leaf"])
                else:
                    feature.append(node["feature"])
                    threshold.append(node["threshold"])
                    missing_left.append(node["missing_left"])
                    left.append(node["left"] + lo)
                    right.append(node["right"] + lo)
                    is_leaf.append(False)
                    leaf_value.append(0.0)
            offsets.append(len(feature))
        fmap = raw["feature_map"]
        source_index = np.array(fmap["source_index"], dtype=np.int64)
        model = cls(
            base_score=raw["base_score"],
            params=BoosterParams.from_dict(raw["params"]),
            rounds_trained=len(raw["trees"]),
            feature_names=tuple(fmap["feature_names"]),
            source_names=tuple(fmap["source_names"]),
            source_index=source_index,
            feature=np.array(feature, dtype=np.int32),
            threshold=np.array(threshold, dtype=np.float64),
            missing_left=np.array(missing_left, dtype=np.bool_),
            left=np.array(left, dtype=np.int32),
            right=np.array(right, dtype=np.int32),
            is_leaf=np.array(is_leaf, dtype=np.bool_),
            leaf_value=np.array(leaf_value, dtype=np.float64),
            offsets=np.array(offsets, dtype=np.int64),
            feature_usage=np.zeros((len(raw["trees"]), len(fmap["source_names"])), dtype=np.int64),
        )
        usage = _usage_from_nodes(model)
        object.__setattr__(model, "feature_usage", usage)
        return model


def _usage_from_nodes(model: BoostedModel) -> np.ndarray:
    usage = np.zeros((model.rounds_trained, len(model.source_names)), dtype=np.int64)
    for t in range(model.rounds_trained):
        lo, hi = int(model.offsets[t]), int(model.offsets[t + 1])
        for i in range(lo, hi):
            if not model.is_leaf[i]:
                usage[t, model.source_index[model.feature[i]]] += 1
    return usage


def _sigmoid(m: np.ndarray) -> np.ndarray:
    out = np.empty_like(m)
    pos = m >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-m[pos]))
    em = np.exp(m[~pos])
    out[~pos] = em / (1.0 + em)
    return out


def train(train_data: Dataset, params: BoosterParams) -> BoostedModel:
    """Fit ``params.max_rounds`` trees by exact greedy second-order boosting.

    Deterministic for fixed (data, params): row/feature subsampling comes
    from a generator seeded with ``params.seed`` and all accumulation
    orders are fixed. Trees that cannot place any split contribute zero,
    so a dataset without usable splits predicts the training base rate.
    """
    X = train_data.matrix()
    y = train_data.labels.astype(np.float64)
    n, p = X.shape
    if n == 0:
        raise DegenerateTargetError("empty training data")
    pos_rate = float(y.mean())
    if pos_rate <= 0.0 or pos_rate >= 1.0:
        raise DegenerateTargetError("training labels contain a single class")
    if params.max_rounds < 1:
        raise ArgumentError("max_rounds must be at least 1")
    base_score = math.log(pos_rate / (1.0 - pos_rate))

    sorted_idx = np.argsort(X, axis=0, kind="stable").T.astype(np.int32)
    sorted_idx = np.ascontiguousarray(sorted_idx)
    nan_counts = np.isnan(X).sum(axis=0).astype(np.int64)
    rng = np.random.default_rng(params.seed)

    margins = np.full(n, base_score, dtype=np.float64)
    parts: list[tuple] = []
    total_nodes = 0
    for _ in range(params.max_rounds):
        prob = _sigmoid(margins)
        g = prob - y
        h = prob * (1.0 - prob)
        if params.subsample < 1.0:
            mask = rng.random(n) < params.subsample
        else:
            mask = np.ones(n, dtype=bool)
        if params.colsample < 1.0:
            k = max(1, int(round(params.colsample * p)))
            feats = np.sort(rng.choice(p, size=k, replace=False)).astype(np.int64)
        else:
            feats = np.arange(p, dtype=np.int64)
        node_of = np.where(mask, 0, -1).astype(np.int32)
        n_nodes, *arrays = _kernels.build_tree(
            X,
            g,
            h,
            node_of,
            sorted_idx,
            nan_counts,
            feats,
            float(params.eta),
            float(params.reg_lambda),
            float(params.gamma),
            float(params.min_child_weight),
            int(params.max_depth),
        )
        parts.append(tuple(arrays))
        contribution = np.zeros(n, dtype=np.float64)
        _kernels.add_tree_predictions(X, *arrays, 0, contribution)
        margins += contribution
        total_nodes += n_nodes

    offsets = np.zeros(params.max_rounds + 1, dtype=np.int64)
    feature = np.empty(total_nodes, dtype=np.int32)
    threshold = np.empty(total_nodes, dtype=np.float64)
    missing_left = np.empty(total_nodes, dtype=np.bool_)
    left = np.empty(total_nodes, dtype=np.int32)
    right = np.empty(total_nodes, dtype=np.int32)
    is_leaf = np.empty(total_nodes, dtype=np.bool_)
    leaf_value = np.empty(total_nodes, dtype=np.float64)
    pos = 0
    for t, (tf, tt, tm, tl, tr, til, tlv) in enumerate(parts):
        size = tf.shape[0]
        sl = slice(pos, pos + size)
        feature[sl] = tf
        threshold[sl] = tt
        missing_left[sl] = tm
        left[sl] = np.where(tl >= 0, tl + pos, -1)
        right[sl] = np.where(tr >= 0, tr + pos, -1)
        is_leaf[sl] = til
        leaf_value[sl] = tlv
        pos += size
        offsets[t + 1] = pos

    source_names = tuple(train_data.feature_map)
    model = BoostedModel(
        base_score=base_score,
        params=params,
        rounds_trained=params.max_rounds,
        feature_names=train_data.feature_names,
        source_names=source_names,
        source_index=train_data.source_index(),
        feature=feature,
        threshold=threshold,
        missing_left=missing_left,
        left=left,
        right=right,
        is_leaf=is_leaf,
        leaf_value=leaf_value,
        offsets=offsets,
        feature_usage=np.zeros((params.max_rounds, len(source_names)), dtype=np.int64),
    )
    object.__setattr__(model, "feature_usage", _usage_from_nodes(model))
    return model


def _check_rows(model: BoostedModel, rows: Dataset) -> np.ndarray:
    if rows.feature_names != model.feature_names:
        raise ArgumentError("dataset columns do not match the model's training schema")
    return rows.matrix()


def _check_n(model: BoostedModel, n: int) -> int:
    if not 1 <= n <= model.rounds_trained:
        raise ArgumentError(f"n={n} outside [1, {model.rounds_trained}]")
    return int(n)


def predict_margin_array(model: BoostedModel, X: np.ndarray, n: int | None = None) -> np.ndarray:
    """Truncated-ensemble log-odds for a raw [n_rows, p] feature matrix."""
    n = model.rounds_trained if n is None else _check_n(model, n)
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(model.feature_names):
        raise ArgumentError(f"expected matrix with {len(model.feature_names)} columns")
    out = np.empty(X.shape[0], dtype=np.float64)
    _kernels.margins_upto(
        X,
        model.feature,
        model.threshold,
        model.missing_left,
        model.left,
        model.right,
        model.is_leaf,
        model.leaf_value,
        model.offsets,
        model.base_score,
        n,
        out,
    )
    return out


def predict_margin(model: BoostedModel, rows: Dataset, n: int | None = None) -> np.ndarray:
    """Log-odds using only the first n trees (default: all)."""
    return predict_margin_array(model, _check_rows(model, rows), n)


def predict_proba_array(model: BoostedModel, X: np.ndarray, n: int | None = None) -> np.ndarray:
    """Positive-class probability for a raw feature matrix."""
    return _sigmoid(predict_margin_array(model, X, n))


def predict_proba(model: BoostedModel, rows: Dataset, n: int | None = None) -> np.ndarray:
    """Probability of the positive class: sigmoid of the truncated margin."""
    return _sigmoid(predict_margin(model, rows, n))


def staged_margins(model: BoostedModel, rows: Dataset) -> np.ndarray:
    """[rounds_trained, n_rows] cumulative margins, one pass over all trees.

    Row ``t`` equals ``predict_margin(model, rows, t + 1)`` exactly.
    """
    X = _check_rows(model, rows)
    out = np.empty((model.rounds_trained, X.shape[0]), dtype=np.float64)
    _kernels.staged_margins_kernel(
        X,
        model.feature,
        model.threshold,
        model.missing_left,
        model.left,
        model.right,
        model.is_leaf,
        model.leaf_value,
        model.offsets,
        model.base_score,
        out,
    )
    return out


def features_used(model: BoostedModel, n: int) -> set[str]:
    """Source features appearing in at least one split of the first n trees."""
    n = _check_n(model, n)
    counts = model.feature_usage[:n].sum(axis=0)
    return {model.source_names[i] for i in np.flatnonzero(counts)}


def training_log_loss(model: BoostedModel, data: Dataset, n: int) -> float:
    """Mean log loss of the n-round sub-model on a dataset."""
    prob = predict_proba(model, data, n)
    y = data.labels.astype(np.float64)
    eps = 1e-15
    prob = np.clip(prob, eps, 1.0 - eps)
    return float(-(y * np.log(prob) + (1.0 - y) * np.log(1.0 - prob)).mean())
