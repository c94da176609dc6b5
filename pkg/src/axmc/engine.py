"""The optimization loop and the pausable session around it.

One iteration: draw weights from the box, scalarize the archive, fit the
surrogate, propose a configuration, train it, evaluate the full measure
vector on the validation split, then harvest threshold/round
sub-evaluations from the trained model and keep the ones that land on the
combined Pareto front. The session checkpoints after every iteration, so
an operator can pause, narrow the weight box and continue with more
budget; everything downstream of the seed is deterministic.
"""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
import time
import uuid
from dataclasses import dataclass, field, replace

import numpy as np

from . import gbt, measures, mobo, pareto
from .data import Dataset, Schema, SplitSpec, encode_categoricals, split
from .errors import ArgumentError, AxmcError, ConfigurationError, RestoreError
from .gbt import BoostedModel
from .measures import EvalContext, MeasureSpec, MeasureVector
from .mobo import ConfigSpace, PipelineConfig, ScalarizerConfig, WeightBox
from .pareto import FULL, SUB, Archive, EvalRecord

logger = logging.getLogger("axmc.engine")

SNAPSHOT_FORMAT = "axmc-session-v1"
SNAPSHOT_FILE = "session.json"
LOG_FILE = "log.jsonl"

SUBEVAL_FRACTIONS = (0.25, 0.50, 0.75, 0.90)
SUBEVAL_THRESHOLDS = tuple(i / 10 for i in range(11))

# measures whose value depends on the round count but not the threshold;
# cached across the threshold sweep of one sub-evaluation harvest
N_ONLY_IDS = frozenset(
    {"sparsity", "interaction_strength", "main_effect_complexity", "inference_time"}
)

IDLE, RUNNING, PAUSED, DONE = "idle", "running", "paused", "done"


@dataclass
class Budget:
    iterations_done: int = 0
    iterations_allowed: int = 0
    wall_seconds_allowed: float | None = None

    def to_dict(self) -> dict:
        return {
            "iterations_done": self.iterations_done,
            "iterations_allowed": self.iterations_allowed,
            "wall_seconds_allowed": self.wall_seconds_allowed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Budget":
        return cls(
            iterations_done=d["iterations_done"],
            iterations_allowed=d["iterations_allowed"],
            wall_seconds_allowed=d.get("wall_seconds_allowed"),
        )


@dataclass
class SessionState:
    """Everything a resumable optimization needs, plus transient caches."""

    id: str
    seed: int
    m: int
    specs: tuple[MeasureSpec, ...]
    train: Dataset
    valid: Dataset
    test: Dataset
    space: ConfigSpace
    archive: Archive
    box: WeightBox
    rng: np.random.Generator
    budget: Budget
    status: str = IDLE
    rho: float = mobo.DEFAULT_RHO
    n_candidates: int = mobo.DEFAULT_CANDIDATES
    forest_size: int = mobo.DEFAULT_FOREST_SIZE
    # transient: archive index of a full record -> its trained model
    models: dict[int, BoostedModel] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.specs)

    @property
    def measure_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.specs)


def _with_seed(config: PipelineConfig, seed: int) -> PipelineConfig:
    return replace(config, booster=replace(config.booster, seed=seed))


def _measure_vector(
    specs: tuple[MeasureSpec, ...], ctx: EvalContext, cache: dict | None = None
) -> MeasureVector:
    """Evaluate specs, memoizing threshold-independent measures per round count."""
    values = []
    for spec in specs:
        if cache is not None and spec.id in N_ONLY_IDS:
            key = (spec.id, ctx.n)
            if key not in cache:
                cache[key] = measures.evaluate_all((spec,), ctx).values[0]
            values.append(cache[key])
        else:
            values.append(measures.evaluate_all((spec,), ctx).values[0])
    return MeasureVector(values=tuple(values))


def subevaluation_grid(nrounds: int, full_thr: float) -> list[tuple[int, float]]:
    """Candidate (rounds, threshold) pairs for one trained model.

    Round counts are the 25/50/75/90 percent marks rounded up to the next
    integer plus the full count (threshold sweeps there are free);
    collided counts are deduplicated and the already-recorded full
    evaluation pair is excluded.
    """
    ns = sorted({min(math.ceil(f * nrounds), nrounds) for f in SUBEVAL_FRACTIONS} | {nrounds})
    return [
        (n, thr)
        for n in ns
        for thr in SUBEVAL_THRESHOLDS
        if not (n == nrounds and thr == full_thr)
    ]


def subevaluations(
    model: BoostedModel,
    config: PipelineConfig,
    specs: tuple[MeasureSpec, ...],
    valid: Dataset,
    margins: np.ndarray | None = None,
    parent: int = 0,
    iteration: int = 0,
) -> list[EvalRecord]:
    """Score the sub-evaluation grid against cached staged margins.

    No retraining happens here: threshold-derived measures are a couple
    of vector operations per candidate, model-structure measures read the
    tree prefix, and only prediction-based measures re-predict.
    """
    if margins is None:
        margins = gbt.staged_margins(model, valid)
    ctx = EvalContext(model=model, data=valid, margins=margins, thr=config.thr, n=config.nrounds)
    records = []
    cache: dict = {}
    for n, thr in subevaluation_grid(config.nrounds, config.thr):
        t0 = time.perf_counter()
        vector = _measure_vector(specs, ctx.at(thr, n), cache)
        sub_config = PipelineConfig(booster=model.params, nrounds=n, thr=thr)
        records.append(
            EvalRecord(
                config=sub_config,
                measures=vector,
                provenance=SUB,
                iteration=iteration,
                wall_time=time.perf_counter() - t0,
                parent=parent,
            )
        )
    return records


def _penalty_vector(archive: Archive, k: int) -> MeasureVector:
    """Archive-observed per-objective maxima (1.0 each on an empty archive)."""
    if len(archive) == 0:
        return MeasureVector(values=tuple(1.0 for _ in range(k)))
    worst = archive.matrix().max(axis=0)
    return MeasureVector(values=tuple(float(v) for v in worst))


def _evaluate_full(state: SessionState, config: PipelineConfig, iteration: int) -> None:
    """Train, evaluate, archive, then harvest and archive sub-evaluations."""
    t0 = time.perf_counter()
    try:
        model = gbt.train(state.train, config.booster)
        margins = gbt.staged_margins(model, state.valid)
        ctx = EvalContext(
            model=model, data=state.valid, margins=margins, thr=config.thr, n=config.nrounds
        )
        vector = _measure_vector(state.specs, ctx)
    except AxmcError as exc:
        logger.warning("evaluation of %s failed (%s); recording penalized vector", config, exc)
        record = EvalRecord(
            config=config,
            measures=_penalty_vector(state.archive, state.k),
            provenance=FULL,
            iteration=iteration,
            wall_time=time.perf_counter() - t0,
        )
        state.archive.append(record)
        return
    record = EvalRecord(
        config=config,
        measures=vector,
        provenance=FULL,
        iteration=iteration,
        wall_time=time.perf_counter() - t0,
    )
    idx = state.archive.append(record)
    state.models[idx] = model
    subs = subevaluations(
        model, config, state.specs, state.valid, margins=margins, parent=idx, iteration=iteration
    )
    for survivor in pareto.filter_subevals(state.archive, subs):
        state.archive.append(survivor)


def init_session(
    data: Dataset,
    specs: list[MeasureSpec] | tuple[MeasureSpec, ...],
    budget: int | None = None,
    seed: int = 0,
    m: int | None = None,
    split_spec: SplitSpec | None = None,
    rho: float = mobo.DEFAULT_RHO,
    n_candidates: int = mobo.DEFAULT_CANDIDATES,
    forest_size: int = mobo.DEFAULT_FOREST_SIZE,
    session_id: str | None = None,
) -> SessionState:
    """Encode, split, evaluate the random initial design, return the session.

    ``budget`` pre-grants loop iterations: 0 means the session is already
    done after the initial design, None defers the grant to ``run``.
    """
    specs = tuple(specs)
    measures.validate_specs(specs)
    fairness_requested = [s.id for s in specs if s.id in measures.FAIRNESS_IDS]
    if fairness_requested and data.groups is None:
        raise ConfigurationError(
            f"measures {fairness_requested} need a protected attribute in the schema"
        )
    k = len(specs)
    if m is None:
        m = max(8, 4 + 2 * k)
    if m < 4:
        raise ArgumentError("initial design needs at least 4 evaluations")
    if budget is not None and budget < 0:
        raise ArgumentError("budget cannot be negative")

    encoded = encode_categoricals(data)
    train_ds, valid_ds, test_ds = split(encoded, split_spec or SplitSpec(seed=seed))
    for ds in (train_ds, valid_ds, test_ds):
        for warning in ds.warnings:
            logger.warning("%s", warning)

    state = SessionState(
        id=session_id or uuid.uuid4().hex[:12],
        seed=seed,
        m=m,
        specs=specs,
        train=train_ds,
        valid=valid_ds,
        test=test_ds,
        space=ConfigSpace(),
        archive=Archive(k=k),
        box=WeightBox.default(k),
        rng=np.random.default_rng(seed),
        budget=Budget(iterations_allowed=budget if budget is not None else 0),
        status=IDLE,
        rho=rho,
        n_candidates=n_candidates,
        forest_size=forest_size,
    )
    for _ in range(m):
        config = state.space.sample(state.rng)
        config = _with_seed(config, int(state.rng.integers(0, 2**31 - 1)))
        _evaluate_full(state, config, iteration=0)
    if budget is not None and budget == 0:
        state.status = DONE
    return state


def run_iteration(state: SessionState) -> SessionState:
    """One loop pass: weights, surrogate, proposal, evaluation, harvest."""
    if state.status != RUNNING:
        raise ArgumentError(f"run_iteration requires a running session, status={state.status}")
    if state.budget.iterations_done >= state.budget.iterations_allowed:
        state.status = DONE
        return state
    w = mobo.sample_weights(state.box, state.rng)
    scal_cfg = ScalarizerConfig.from_archive(state.archive, rho=state.rho)
    scalars = mobo.scalarize_archive(state.archive, w, scal_cfg)
    best_idx = int(np.argmin(scalars))
    surrogate_seed = int(state.rng.integers(0, 2**31 - 1))
    surrogate = mobo.fit_surrogate(
        state.archive, w, scal_cfg, state.space, seed=surrogate_seed, n_trees=state.forest_size
    )
    config = mobo.propose(
        surrogate,
        state.space,
        best=float(scalars[best_idx]),
        rng=state.rng,
        n_candidates=state.n_candidates,
        incumbent=state.archive.records[best_idx].config,
    )
    config = _with_seed(config, int(state.rng.integers(0, 2**31 - 1)))
    iteration = state.budget.iterations_done + 1
    _evaluate_full(state, config, iteration)
    state.budget.iterations_done = iteration
    if state.budget.iterations_done >= state.budget.iterations_allowed:
        state.status = DONE
    return state


def run(
    state: SessionState,
    iterations: int | None = None,
    seconds: float | None = None,
    out_dir: str | None = None,
    pause=None,
) -> SessionState:
    """Run until the iteration grant or wall budget is exhausted or paused.

    ``iterations`` adds to the remaining allowance; ``seconds`` caps wall
    time for this call (an extra iteration is granted per pass while the
    clock allows, when no iteration grant was given). ``pause`` is any
    object with ``is_set()``; it takes effect at iteration boundaries.
    With ``out_dir`` the session is checkpointed and the iteration log
    appended after every iteration.
    """
    if state.status == RUNNING:
        raise ArgumentError("session is already running")
    if iterations is not None:
        if iterations < 0:
            raise ArgumentError("iterations cannot be negative")
        state.budget.iterations_allowed += iterations
    if seconds is not None:
        if seconds <= 0:
            raise ArgumentError("seconds must be positive")
        state.budget.wall_seconds_allowed = seconds
    deadline = None if seconds is None else time.monotonic() + seconds
    state.status = RUNNING
    while True:
        if pause is not None and pause.is_set():
            state.status = PAUSED
            break
        if deadline is not None and time.monotonic() >= deadline:
            state.status = DONE
            break
        if deadline is not None and iterations is None:
            # pure wall-clock budget: extend the allowance while time remains
            if state.budget.iterations_done == state.budget.iterations_allowed:
                state.budget.iterations_allowed += 1
        if state.budget.iterations_done >= state.budget.iterations_allowed:
            state.status = DONE
            break
        before = len(state.archive)
        run_iteration(state)
        if out_dir is not None:
            checkpoint(state, out_dir, new_records_from=before)
        if state.status != RUNNING:
            break
    return state


def set_weight_box(state: SessionState, box: WeightBox) -> SessionState:
    """Replace the weight box between runs; archive untouched."""
    if state.status == RUNNING:
        raise ArgumentError("cannot change the weight box while running")
    if box.k != state.k:
        raise ArgumentError(f"box has {box.k} bounds, session has {state.k} objectives")
    state.box = box
    return state


# ---------------------------------------------------------------------------
# serialization


def _dataset_to_dict(ds: Dataset) -> dict:
    return {
        "feature_names": list(ds.feature_names),
        "columns": {c: np.asarray(ds.columns[c], dtype=np.float64).tolist() for c in ds.feature_names},
        "labels": ds.labels.tolist(),
        "groups": None if ds.groups is None else ds.groups.tolist(),
        "ranges": {c: list(ds.ranges[c]) for c in ds.feature_names},
        "feature_map": {s: list(d) for s, d in ds.feature_map.items()},
        "label_levels": list(ds.label_levels),
        "group_levels": None if ds.group_levels is None else list(ds.group_levels),
        "warnings": list(ds.warnings),
    }


def _dataset_from_dict(d: dict, schema: Schema) -> Dataset:
    return Dataset(
        schema=schema,
        feature_names=tuple(d["feature_names"]),
        columns={c: np.array(d["columns"][c], dtype=np.float64) for c in d["feature_names"]},
        labels=np.array(d["labels"], dtype=np.int8),
        groups=None if d["groups"] is None else np.array(d["groups"], dtype=np.int8),
        ranges={c: (r[0], r[1]) for c, r in d["ranges"].items()},
        feature_map={s: tuple(v) for s, v in d["feature_map"].items()},
        label_levels=tuple(d["label_levels"]),
        group_levels=None if d["group_levels"] is None else tuple(d["group_levels"]),
        warnings=tuple(d["warnings"]),
    )


def _record_to_dict(r: EvalRecord) -> dict:
    return {
        "config": r.config.to_dict(),
        "measures": list(r.measures.values),
        "provenance": r.provenance,
        "iteration": r.iteration,
        "wall_time": r.wall_time,
        "parent": r.parent,
    }


def _record_from_dict(d: dict) -> EvalRecord:
    return EvalRecord(
        config=PipelineConfig.from_dict(d["config"]),
        measures=MeasureVector(values=tuple(d["measures"])),
        provenance=d["provenance"],
        iteration=d["iteration"],
        wall_time=d["wall_time"],
        parent=d.get("parent"),
    )


def snapshot(state: SessionState) -> dict:
    """Serializable session image; restoring it continues bit-identically.

    Trained models are not embedded: they are retrained on demand (the
    learner is deterministic) when a restored session needs test-split
    re-evaluation.
    """
    status = PAUSED if state.status == RUNNING else state.status
    return {
        "format": SNAPSHOT_FORMAT,
        "id": state.id,
        "seed": state.seed,
        "m": state.m,
        "rho": state.rho,
        "n_candidates": state.n_candidates,
        "forest_size": state.forest_size,
        "status": status,
        "schema": json.loads(state.train.schema.to_json()),
        "specs": [{"id": s.id, "params": s.params} for s in state.specs],
        "box": state.box.to_list(),
        "budget": state.budget.to_dict(),
        "rng_state": state.rng.bit_generator.state,
        "splits": {
            "train": _dataset_to_dict(state.train),
            "valid": _dataset_to_dict(state.valid),
            "test": _dataset_to_dict(state.test),
        },
        "archive": [_record_to_dict(r) for r in state.archive.records],
    }


def restore(raw: dict | str | bytes) -> SessionState:
    """Rebuild a session from a snapshot; corrupt input raises RestoreError."""
    try:
        obj = json.loads(raw) if isinstance(raw, (str, bytes)) else raw
        if not isinstance(obj, dict):
            raise RestoreError("snapshot is not a JSON object")
        if obj.get("format") != SNAPSHOT_FORMAT:
            raise RestoreError(f"unknown snapshot format {obj.get('format')!r}")
        schema = Schema.from_json(json.dumps(obj["schema"]))
        specs = tuple(MeasureSpec(id=s["id"], params=s.get("params", {})) for s in obj["specs"])
        archive = Archive(k=len(specs))
        for rec in obj["archive"]:
            archive.append(_record_from_dict(rec))
        rng = np.random.default_rng(0)
        rng.bit_generator.state = obj["rng_state"]
        state = SessionState(
            id=obj["id"],
            seed=obj["seed"],
            m=obj["m"],
            specs=specs,
            train=_dataset_from_dict(obj["splits"]["train"], schema),
            valid=_dataset_from_dict(obj["splits"]["valid"], schema),
            test=_dataset_from_dict(obj["splits"]["test"], schema),
            space=ConfigSpace(),
            archive=archive,
            box=WeightBox.from_list(obj["box"]),
            rng=rng,
            budget=Budget.from_dict(obj["budget"]),
            status=obj["status"],
            rho=obj["rho"],
            n_candidates=obj["n_candidates"],
            forest_size=obj.get("forest_size", mobo.DEFAULT_FOREST_SIZE),
        )
        return state
    except RestoreError:
        raise
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise RestoreError(f"snapshot corrupt or incomplete: {exc}") from exc


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_snapshot(state: SessionState, path: str) -> None:
    _atomic_write(path, json.dumps(snapshot(state)))


def load_snapshot(path: str) -> SessionState:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise RestoreError(f"cannot read snapshot: {exc}") from exc
    return restore(text)


def checkpoint(state: SessionState, out_dir: str, new_records_from: int = 0) -> None:
    """Write the snapshot and append freshly archived records to the log."""
    os.makedirs(out_dir, exist_ok=True)
    save_snapshot(state, os.path.join(out_dir, SNAPSHOT_FILE))
    new = state.archive.records[new_records_from:]
    if new:
        with open(os.path.join(out_dir, LOG_FILE), "a", encoding="utf-8") as fh:
            for record in new:
                fh.write(json.dumps(_record_to_dict(record)) + "\n")


# ---------------------------------------------------------------------------
# reporting


CONFIG_COLUMNS = (
    "eta",
    "max_depth",
    "min_child_weight",
    "subsample",
    "colsample",
    "reg_lambda",
    "gamma",
    "nrounds",
    "thr",
)


def _config_cells(config: PipelineConfig) -> dict:
    cells = {name: getattr(config.booster, name) for name in CONFIG_COLUMNS if name not in ("nrounds", "thr")}
    cells["nrounds"] = config.nrounds
    cells["thr"] = config.thr
    return cells


def _model_for(state: SessionState, idx: int) -> BoostedModel:
    if idx not in state.models:
        record = state.archive.records[idx]
        logger.info("retraining archived configuration %d for test evaluation", idx)
        state.models[idx] = gbt.train(state.train, record.config.booster)
    return state.models[idx]


def report(state: SessionState, split: str = "valid") -> list[dict]:
    """Front table sorted ascending by the first objective.

    split="valid" returns the archived validation vectors; split="test"
    re-evaluates every front configuration on the untouched test split
    (fresh staged margins, no weight updates). Each row carries the
    flattened configuration, the measure values and the provenance.
    """
    if len(state.archive) == 0:
        raise ArgumentError("archive is empty")
    if split not in ("valid", "test"):
        raise ArgumentError(f"split must be 'valid' or 'test', got {split!r}")
    index_of = {id(r): i for i, r in enumerate(state.archive.records)}
    front = pareto.pareto_front(state.archive.records)
    # ties (identical vectors) all live on the front; display keeps the first
    seen: set[tuple] = set()
    deduped = []
    for record in front:
        key = record.measures.values
        if key not in seen:
            seen.add(key)
            deduped.append(record)
    margin_cache: dict[int, np.ndarray] = {}
    rows = []
    for record in deduped:
        row = {"provenance": record.provenance, "iteration": record.iteration}
        row.update(_config_cells(record.config))
        if split == "valid":
            values = record.measures.values
        else:
            idx = index_of[id(record)]
            model_idx = idx if record.provenance == FULL else record.parent
            try:
                model = _model_for(state, model_idx)
            except AxmcError as exc:
                logger.warning("skipping front row %d in test report: %s", idx, exc)
                continue
            if model_idx not in margin_cache:
                margin_cache[model_idx] = gbt.staged_margins(model, state.test)
            ctx = EvalContext(
                model=model,
                data=state.test,
                margins=margin_cache[model_idx],
                thr=record.config.thr,
                n=record.config.nrounds,
            )
            values = _measure_vector(state.specs, ctx).values
        for mid, value in zip(state.measure_ids, values):
            row[mid] = value
        rows.append(row)
    first = state.measure_ids[0]
    rows.sort(key=lambda r: r[first])
    return rows


def optimization_path(state: SessionState) -> list[dict]:
    """Per full evaluation: its measure values and the running best-so-far."""
    best: dict[str, float] = {}
    out = []
    for record in state.archive.records:
        if record.provenance != FULL:
            continue
        values = dict(zip(state.measure_ids, record.measures.values))
        for mid, v in values.items():
            best[mid] = min(best.get(mid, math.inf), v)
        out.append({"iteration": record.iteration, "values": values, "best": dict(best)})
    return out


def front_csv(state: SessionState, split: str = "valid") -> str:
    """Front table as CSV: config columns, measure columns, provenance."""
    rows = report(state, split)
    columns = list(CONFIG_COLUMNS) + list(state.measure_ids) + ["provenance", "iteration"]
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_csv_cell(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
