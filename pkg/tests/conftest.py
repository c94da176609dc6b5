import numpy as np
import pytest

from axmc.data import Dataset, Schema


def numeric_dataset(X, y, groups=None, names=None):
    """Wrap arrays in a Dataset with all-numeric features."""
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    names = tuple(names) if names else tuple(f"x{i}" for i in range(p))
    columns = names + (("grp",) if groups is not None else ()) + ("y",)
    kinds = {**{nm: "numeric" for nm in names}, "y": "categorical"}
    if groups is not None:
        kinds["grp"] = "categorical"
    schema = Schema(
        columns=columns,
        kinds=kinds,
        target="y",
        positive_label="1",
        protected="grp" if groups is not None else None,
    )
    ranges = {}
    for i, nm in enumerate(names):
        col = X[:, i]
        finite = col[~np.isnan(col)]
        ranges[nm] = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 0.0)
    return Dataset(
        schema=schema,
        feature_names=names,
        columns={nm: X[:, i].copy() for i, nm in enumerate(names)},
        labels=np.asarray(y, dtype=np.int8),
        groups=None if groups is None else np.asarray(groups, dtype=np.int8),
        ranges=ranges,
        feature_map={nm: (nm,) for nm in names},
        label_levels=("0", "1"),
        group_levels=("a", "b") if groups is not None else None,
    )


@pytest.fixture
def small_task():
    """600-row task with a protected attribute and injected label bias."""
    rng = np.random.default_rng(11)
    n = 600
    X = rng.normal(size=(n, 5))
    groups = (rng.random(n) < 0.4).astype(np.int8)
    margin = 1.2 * X[:, 0] - 0.8 * X[:, 1] + 0.5 * X[:, 2]
    y = ((margin + rng.normal(scale=0.6, size=n)) > 0).astype(np.int8)
    flip = (groups == 1) & (y == 1) & (rng.random(n) < 0.15)
    y[flip] = 0
    return numeric_dataset(X, y, groups=groups)
