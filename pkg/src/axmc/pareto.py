"""Pareto dominance, non-dominated filtering and the evaluation archive.

The archive is append-only: every full evaluation and every surviving
sub-evaluation stays in it forever (dominated records still inform the
surrogate), and the front is computed on demand. Records with identical
measure vectors are all kept on the front; strict dominance never
eliminates equals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import ArgumentError
from .measures import MeasureVector

if TYPE_CHECKING:  # avoids a runtime cycle; mobo imports Archive from here
    from .mobo import PipelineConfig

FULL = "full"
SUB = "sub"


@dataclass(frozen=True)
class EvalRecord:
    """One evaluated configuration: (config, measure vector, provenance)."""

    config: "PipelineConfig"
    measures: MeasureVector
    provenance: str
    iteration: int
    wall_time: float
    parent: int | None = None  # archive index of the originating full record

    def __post_init__(self):
        if self.provenance not in (FULL, SUB):
            raise ArgumentError(f"provenance must be 'full' or 'sub', got {self.provenance!r}")
        if self.provenance == SUB and self.parent is None:
            raise ArgumentError("sub-evaluation records must reference a parent")
        if self.provenance == FULL and self.parent is not None:
            raise ArgumentError("full records cannot carry a parent reference")


@dataclass
class Archive:
    """Append-only list of evaluation records sharing one objective count."""

    k: int
    records: list[EvalRecord] = field(default_factory=list)

    def append(self, record: EvalRecord) -> int:
        if len(record.measures) != self.k:
            raise ArgumentError(
                f"record has {len(record.measures)} objectives, archive expects {self.k}"
            )
        self.records.append(record)
        return len(self.records) - 1

    def __len__(self) -> int:
        return len(self.records)

    def matrix(self) -> np.ndarray:
        """[n_records, k] objective matrix in append order."""
        if not self.records:
            return np.empty((0, self.k))
        return np.array([r.measures.values for r in self.records], dtype=np.float64)


def dominates(a: MeasureVector | np.ndarray, b: MeasureVector | np.ndarray) -> bool:
    """True when a is no worse everywhere and strictly better somewhere."""
    av = a.as_array() if isinstance(a, MeasureVector) else np.asarray(a, dtype=np.float64)
    bv = b.as_array() if isinstance(b, MeasureVector) else np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise ArgumentError(f"objective count mismatch: {av.shape} vs {bv.shape}")
    return bool((av <= bv).all() and (av < bv).any())


def non_dominated_mask(values: np.ndarray) -> np.ndarray:
    """Boolean mask of non-dominated rows of a [n, k] objective matrix."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        le = (values <= values[i]).all(axis=1)
        lt = (values < values[i]).any(axis=1)
        if (le & lt).any():
            mask[i] = False
    return mask


def pareto_front(records: list[EvalRecord]) -> list[EvalRecord]:
    """Records dominated by no other record, in input order (ties all kept)."""
    if not records:
        raise ArgumentError("pareto_front of an empty record list")
    values = np.array([r.measures.values for r in records], dtype=np.float64)
    mask = non_dominated_mask(values)
    return [r for r, keep in zip(records, mask) if keep]


def filter_subevals(archive: Archive, candidates: list[EvalRecord]) -> list[EvalRecord]:
    """Sub-evaluation candidates surviving the front of archive + candidates.

    The archive itself is left untouched; the caller appends survivors.
    """
    if any(c.provenance != SUB for c in candidates):
        raise ArgumentError("filter_subevals expects sub-evaluation candidates only")
    if not candidates:
        return []
    combined = archive.records + candidates
    front = pareto_front(combined)
    keep = {id(r) for r in front}
    return [c for c in candidates if id(c) in keep]
