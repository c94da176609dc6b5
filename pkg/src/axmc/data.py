"""Tabular dataset ingestion, schema handling, one-hot encoding and splitting.

Datasets are column-major and immutable after construction. Numeric columns
are float64 with NaN marking missing cells; categorical columns are string
arrays where missing cells were mapped to a dedicated ``"missing"`` level.
The binary target and the optional protected attribute are carried as
metadata (0/1 vectors), never as model features unless explicitly opted in.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CardinalityError, InputError, ParseError, SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

DEFAULT_MISSING_TOKENS = ("", "NA", "?")
MISSING_LEVEL = "missing"
MAX_CATEGORICAL_LEVELS = 1024


@dataclass(frozen=True)
class Schema:
    """Declared layout of a CSV source: feature columns, target, protected."""

    columns: tuple[str, ...]
    kinds: dict[str, str]
    target: str
    positive_label: str
    protected: str | None = None

    def __post_init__(self):
        if self.target not in self.columns:
            raise SchemaError(f"target column {self.target!r} not declared")
        if self.protected is not None:
            if self.protected not in self.columns:
                raise SchemaError(f"protected column {self.protected!r} not declared")
            if self.protected == self.target:
                raise SchemaError("protected column cannot equal target column")
            if self.kinds.get(self.protected) != CATEGORICAL:
                raise SchemaError("protected column must be categorical")
        for name in self.columns:
            kind = self.kinds.get(name)
            if kind not in (NUMERIC, CATEGORICAL):
                raise SchemaError(f"column {name!r} has unknown kind {kind!r}")

    @property
    def feature_columns(self) -> tuple[str, ...]:
        """Columns usable as model inputs (excludes target and protected)."""
        drop = {self.target, self.protected}
        return tuple(c for c in self.columns if c not in drop)

    @classmethod
    def from_json(cls, text: str) -> "Schema":
        """Parse the sidecar format {columns:[{name,kind}],target,protected,positive_label}."""
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema sidecar is not valid JSON: {exc}") from exc
        try:
            columns = tuple(c["name"] for c in raw["columns"])
            kinds = {c["name"]: c["kind"] for c in raw["columns"]}
            return cls(
                columns=columns,
                kinds=kinds,
                target=raw["target"],
                positive_label=str(raw["positive_label"]),
                protected=raw.get("protected"),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"schema sidecar missing field: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(
            {
                "columns": [{"name": c, "kind": self.kinds[c]} for c in self.columns],
                "target": self.target,
                "protected": self.protected,
                "positive_label": self.positive_label,
            }
        )


@dataclass(frozen=True)
class SplitSpec:
    """Three-way split fractions plus the seed that fixes the partition."""

    fractions: tuple[float, float, float] = (0.70, 0.15, 0.15)
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise InputError(f"split fractions {self.fractions} do not sum to 1")
        if any(not (0.0 < f < 1.0) for f in self.fractions):
            raise InputError("each split fraction must lie in (0, 1)")


@dataclass(frozen=True)
class Dataset:
    """Column-major table with binary labels and optional group metadata.

    ``feature_map`` maps each source feature to the column names derived
    from it (identity before encoding, one entry per one-hot level after),
    so downstream feature counts collapse indicators back to their origin.
    """

    schema: Schema
    feature_names: tuple[str, ...]
    columns: dict[str, np.ndarray]
    labels: np.ndarray
    groups: np.ndarray | None
    ranges: dict[str, tuple[float, float]]
    feature_map: dict[str, tuple[str, ...]]
    label_levels: tuple[str, str]  # (negative, positive) raw values
    group_levels: tuple[str, str] | None = None
    warnings: tuple[str, ...] = ()
    _matrix_cache: list = field(default_factory=list, compare=False, repr=False)

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    @property
    def n_source_features(self) -> int:
        return len(self.feature_map)

    @property
    def encoded(self) -> bool:
        return all(
            np.issubdtype(self.columns[c].dtype, np.floating) for c in self.feature_names
        )

    def matrix(self) -> np.ndarray:
        """Dense [n, p] float64 feature matrix; requires all-numeric columns."""
        if not self.encoded:
            raise SchemaError("dataset has unencoded categorical columns")
        if not self._matrix_cache:
            if self.feature_names:
                mat = np.column_stack([self.columns[c] for c in self.feature_names])
            else:
                mat = np.empty((self.n, 0))
            mat = np.ascontiguousarray(mat, dtype=np.float64)
            mat.setflags(write=False)
            self._matrix_cache.append(mat)
        return self._matrix_cache[0]

    def source_index(self) -> np.ndarray:
        """Per matrix column, the index of its source feature."""
        sources = list(self.feature_map)
        derived_to_source = {
            d: sources.index(s) for s, ds in self.feature_map.items() for d in ds
        }
        return np.array([derived_to_source[c] for c in self.feature_names], dtype=np.int64)

    def indicator_mask(self) -> np.ndarray:
        """Per matrix column, True when the column is a one-hot indicator."""
        derived_to_source = {d: s for s, ds in self.feature_map.items() for d in ds}
        return np.array(
            [
                self.schema.kinds[derived_to_source[c]] == CATEGORICAL
                for c in self.feature_names
            ],
            dtype=bool,
        )

    def column_ranges(self) -> np.ndarray:
        """[p, 2] per-column (min, max) aligned with matrix column order."""
        return np.array([self.ranges[c] for c in self.feature_names], dtype=np.float64)

    def subset(self, indices: np.ndarray, warnings: tuple[str, ...] = ()) -> "Dataset":
        """Row subset; ranges and feature_map are inherited from the parent."""
        return replace(
            self,
            columns={c: v[indices] for c, v in self.columns.items()},
            labels=self.labels[indices],
            groups=None if self.groups is None else self.groups[indices],
            warnings=warnings,
            _matrix_cache=[],
        )


def _parse_numeric(token: str, row_no: int, col: str, missing: frozenset[str]) -> float:
    if token in missing:
        return math.nan
    try:
        return float(token)
    except ValueError:
        raise ParseError(row_no, f"cannot parse {token!r} as numeric in column {col!r}")


def ingest_csv(
    path: str,
    schema: Schema,
    missing_tokens: tuple[str, ...] = DEFAULT_MISSING_TOKENS,
    include_protected: bool = False,
) -> Dataset:
    """Read an RFC-4180-style CSV into a Dataset under a declared schema.

    The header row must contain exactly the schema's columns (any order).
    Missing numeric cells become NaN (routed by the learner's default
    directions); missing categorical cells become the ``"missing"`` level.
    Set ``include_protected`` to also expose the protected column as a
    model feature; by default it is metadata only.
    """
    missing = frozenset(missing_tokens)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if sorted(header) != sorted(schema.columns):
            raise SchemaError(
                f"header {header} does not match schema columns {list(schema.columns)}"
            )
        col_pos = {name: header.index(name) for name in schema.columns}
        raw: dict[str, list] = {name: [] for name in schema.columns}
        row_no = 1
        for row in reader:
            row_no += 1
            if len(row) != len(header):
                raise ParseError(row_no, f"expected {len(header)} cells, got {len(row)}")
            for name in schema.columns:
                raw[name].append(row[col_pos[name]].strip())
    if not raw[schema.target]:
        raise InputError(f"{path}: no data rows")

    target_raw = raw[schema.target]
    if any(t in missing for t in target_raw):
        raise SchemaError("target column contains missing values")
    distinct = sorted(set(target_raw))
    if len(distinct) != 2:
        raise SchemaError(
            f"target column must have exactly 2 distinct values, found {distinct}"
        )
    if schema.positive_label not in distinct:
        raise SchemaError(
            f"positive label {schema.positive_label!r} absent from target values {distinct}"
        )
    negative = next(v for v in distinct if v != schema.positive_label)
    labels = np.array([1 if t == schema.positive_label else 0 for t in target_raw], dtype=np.int8)

    groups = None
    group_levels = None
    if schema.protected is not None:
        prot_raw = [v if v not in missing else MISSING_LEVEL for v in raw[schema.protected]]
        levels = sorted(set(prot_raw))
        if len(levels) != 2:
            raise SchemaError(
                f"protected column must have exactly 2 distinct values, found {levels}"
            )
        groups = np.array([levels.index(v) for v in prot_raw], dtype=np.int8)
        group_levels = (levels[0], levels[1])

    feature_names = list(schema.feature_columns)
    if include_protected and schema.protected is not None:
        feature_names.append(schema.protected)

    columns: dict[str, np.ndarray] = {}
    ranges: dict[str, tuple[float, float]] = {}
    for name in feature_names:
        if schema.kinds[name] == NUMERIC:
            vals = np.array(
                [_parse_numeric(t, i + 2, name, missing) for i, t in enumerate(raw[name])],
                dtype=np.float64,
            )
            observed = vals[~np.isnan(vals)]
            if observed.size:
                ranges[name] = (float(observed.min()), float(observed.max()))
            else:
                ranges[name] = (0.0, 0.0)
            columns[name] = vals
        else:
            columns[name] = np.array(
                [t if t not in missing else MISSING_LEVEL for t in raw[name]], dtype=object
            )

    return Dataset(
        schema=schema,
        feature_names=tuple(feature_names),
        columns=columns,
        labels=labels,
        groups=groups,
        ranges=ranges,
        feature_map={name: (name,) for name in feature_names},
        label_levels=(negative, schema.positive_label),
        group_levels=group_levels,
    )


def encode_categoricals(data: Dataset) -> Dataset:
    """Replace each categorical column by one 0/1 indicator per level.

    Derived columns are named ``<col>=<level>`` and recorded in
    ``feature_map`` so that sparsity counts them as one source feature.
    Idempotent: a dataset without categorical columns is returned as is.
    """
    if data.encoded:
        return data
    feature_names: list[str] = []
    columns: dict[str, np.ndarray] = {}
    ranges: dict[str, tuple[float, float]] = {}
    feature_map: dict[str, tuple[str, ...]] = {}
    for name in data.feature_names:
        col = data.columns[name]
        if np.issubdtype(col.dtype, np.floating):
            feature_names.append(name)
            columns[name] = col
            ranges[name] = data.ranges[name]
            feature_map[name] = (name,)
            continue
        levels = sorted(set(col.tolist()))
        if len(levels) > MAX_CATEGORICAL_LEVELS:
            raise CardinalityError(
                f"column {name!r} has {len(levels)} levels "
                f"(limit {MAX_CATEGORICAL_LEVELS})"
            )
        derived = []
        for level in levels:
            dname = f"{name}={level}"
            vals = (col == level).astype(np.float64)
            feature_names.append(dname)
            columns[dname] = vals
            ranges[dname] = (float(vals.min()), float(vals.max()))
            derived.append(dname)
        feature_map[name] = tuple(derived)
    return replace(
        data,
        feature_names=tuple(feature_names),
        columns=columns,
        ranges=ranges,
        feature_map=feature_map,
        _matrix_cache=[],
    )


def _allocate(n: int, fractions: tuple[float, ...]) -> list[int]:
    """Largest-remainder allocation of n items to fractions (exact total)."""
    exact = [n * f for f in fractions]
    sizes = [int(math.floor(e)) for e in exact]
    remainder = n - sum(sizes)
    order = sorted(range(len(fractions)), key=lambda i: exact[i] - sizes[i], reverse=True)
    for i in range(remainder):
        sizes[order[i]] += 1
    return sizes


def split_indices(data: Dataset, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index sets of the train/valid/test partition (disjoint, exhaustive).

    Stratified mode allocates each label class separately (largest
    remainder), keeping per-split label proportions within one count of
    exact. Indices within each split are returned sorted.
    """
    n = data.n
    rng = np.random.default_rng(spec.seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    if spec.stratified:
        strata = [np.flatnonzero(data.labels == cls) for cls in (0, 1)]
    else:
        strata = [np.arange(n)]
    for stratum in strata:
        rng.shuffle(stratum)
        sizes = _allocate(len(stratum), spec.fractions)
        start = 0
        for k, size in enumerate(sizes):
            parts[k].append(stratum[start : start + size])
            start += size
    return tuple(np.sort(np.concatenate(p)) for p in parts)  # type: ignore[return-value]


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministic three-way partition of a dataset.

    Same seed gives the identical partition. If a protected attribute is
    set and a split misses one group, that split carries a warning rather
    than failing.
    """
    n = data.n
    if n < 10:
        raise InputError(f"need at least 10 rows to split, got {n}")
    splits = []
    names = ("train", "valid", "test")
    for k, indices in enumerate(split_indices(data, spec)):
        if indices.size == 0:
            raise InputError(f"{names[k]} split is empty for n={n}")
        warnings: tuple[str, ...] = ()
        if data.groups is not None:
            present = set(np.unique(data.groups[indices]).tolist())
            if present != {0, 1}:
                warnings = (f"{names[k]} split covers only protected group(s) {sorted(present)}",)
        splits.append(data.subset(indices, warnings=warnings))
    return splits[0], splits[1], splits[2]
