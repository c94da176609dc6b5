"""Synthetic tabular tasks for demos and verification.

``income_like`` mimics a census income problem: ten numeric features with
mixed relevance, a binary protected attribute independent of the features,
and label bias injected by flipping a fraction of one group's positive
labels, so fairness gaps are real but fair accurate models exist.
"""

from __future__ import annotations

import csv

import numpy as np

from .data import Dataset, Schema

FEATURES = (
    "age",
    "education",
    "hours",
    "capital",
    "experience",
    "savings",
    "dependents",
    "commute",
    "score_a",
    "score_b",
)


def income_like(
    n: int = 5000,
    bias: float = 0.15,
    seed: int = 0,
    group_rate: float = 0.45,
) -> Dataset:
    """Binary income prediction with an injected group-label bias.

    The latent margin depends only on the features (never on the group),
    then ``bias`` of group-1 positives are flipped to negative, biasing
    observed labels against that group.
    """
    rng = np.random.default_rng(seed)
    cols = {
        "age": rng.uniform(18, 70, n),
        "education": np.clip(rng.normal(13, 3, n), 5, 21),
        "hours": np.clip(rng.normal(40, 10, n), 5, 90),
        "capital": rng.lognormal(1.0, 1.2, n),
        "experience": rng.uniform(0, 40, n),
        "savings": rng.lognormal(2.0, 1.0, n),
        "dependents": rng.integers(0, 6, n).astype(np.float64),
        "commute": rng.uniform(0, 120, n),
        "score_a": rng.normal(0, 1, n),
        "score_b": rng.normal(0, 1, n),
    }
    groups = (rng.random(n) < group_rate).astype(np.int8)
    margin = (
        0.06 * (cols["age"] - 40)
        + 0.35 * (cols["education"] - 13)
        + 0.05 * (cols["hours"] - 40)
        + 0.45 * np.log1p(cols["capital"])
        + 0.04 * cols["experience"]
        + 0.8 * cols["score_a"]
        + 0.5 * np.where(cols["score_b"] > 0.5, 1.0, 0.0)
    )
    margin = margin - np.quantile(margin, 0.7)  # ~30% positives
    labels = (margin + rng.normal(scale=1.0, size=n) > 0).astype(np.int8)
    flip = (groups == 1) & (labels == 1) & (rng.random(n) < bias)
    labels[flip] = 0

    schema = Schema(
        columns=FEATURES + ("grp", "income"),
        kinds={**{f: "numeric" for f in FEATURES}, "grp": "categorical", "income": "categorical"},
        target="income",
        positive_label="high",
        protected="grp",
    )
    return Dataset(
        schema=schema,
        feature_names=FEATURES,
        columns=cols,
        labels=labels,
        groups=groups,
        ranges={f: (float(cols[f].min()), float(cols[f].max())) for f in FEATURES},
        feature_map={f: (f,) for f in FEATURES},
        label_levels=("low", "high"),
        group_levels=("g0", "g1"),
    )


def write_csv(data: Dataset, path: str) -> None:
    """Write a raw CSV (features, protected column, target) for a Dataset."""
    schema = data.schema
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(schema.columns)
        for i in range(data.n):
            row = []
            for col in schema.columns:
                if col == schema.target:
                    row.append(data.label_levels[data.labels[i]])
                elif col == schema.protected:
                    levels = data.group_levels or ("0", "1")
                    row.append(levels[data.groups[i]] if data.groups is not None else levels[0])
                else:
                    row.append(repr(float(data.columns[col][i])))
            writer.writerow(row)
