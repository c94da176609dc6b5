"""Acceptance suite: one criterion per test, one PASS/FAIL line each.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines as the
criteria complete. The reference end-to-end experiment takes a few
minutes; everything else finishes in seconds.
"""

import json
import time

import numpy as np
import pytest

from axmc import engine, gbt, measures, mobo, pareto
from axmc.data import SplitSpec, split
from axmc.gbt import BoosterParams
from axmc.measures import EvalContext, MeasureSpec, MeasureVector, RobustnessConfig
from axmc.mobo import PipelineConfig, ScalarizerConfig, WeightBox
from axmc.pareto import EvalRecord
from axmc.synthetic import income_like

from conftest import numeric_dataset


def verdict(name: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert ok, f"acceptance criterion failed: {name} {detail}"


def _record(values) -> EvalRecord:
    config = PipelineConfig(booster=BoosterParams(max_rounds=10), nrounds=10, thr=0.5)
    return EvalRecord(
        config=config,
        measures=MeasureVector(values=tuple(float(v) for v in values)),
        provenance="full",
        iteration=0,
        wall_time=0.0,
    )


def pairwise_matrix_front(values: np.ndarray) -> np.ndarray:
    """Brute-force oracle: materialize the full pairwise dominance matrix."""
    le = (values[:, None, :] <= values[None, :, :]).all(axis=2)
    lt = (values[:, None, :] < values[None, :, :]).any(axis=2)
    dom = le & lt
    np.fill_diagonal(dom, False)
    return ~dom.any(axis=0)


def test_pareto_oracle_equivalence():
    rng = np.random.default_rng(99)
    t0 = time.perf_counter()
    for trial in range(500):
        n = int(rng.integers(1, 201))
        k = int(rng.choice([2, 3, 4]))
        values = np.round(rng.random((n, k)), 2)  # rounding forces duplicates/ties
        records = [_record(v) for v in values]
        got = pareto.pareto_front(records)
        oracle_mask = pairwise_matrix_front(values)
        expected = [r for r, keep in zip(records, oracle_mask) if keep]
        assert got == expected, f"mismatch on trial {trial}"
    elapsed = time.perf_counter() - t0
    verdict(
        "pareto oracle equivalence (500 random archives, n<=200, k in 2..4)",
        elapsed < 10.0,
        f"{elapsed:.2f}s < 10s",
    )


def test_scalarization_dominance_consistency():
    rng = np.random.default_rng(17)
    t0 = time.perf_counter()
    checked = 0
    for k in (2, 3, 4):
        cfg = ScalarizerConfig(normalization=tuple((0.0, 1.0) for _ in range(k)))
        batch = 100_000 // 3 + 1
        a = rng.random((batch, k)) * 0.7
        delta = rng.random((batch, k)) * 0.29
        strict = rng.integers(0, k, batch)
        delta[np.arange(batch), strict] += 1e-3
        b = a + delta
        w = rng.uniform(1e-3, 1.0, (batch, k))
        w /= w.sum(axis=1, keepdims=True)
        for i in range(batch):
            assert mobo.scalarize(a[i], w[i], cfg) < mobo.scalarize(b[i], w[i], cfg)
            checked += 1
    elapsed = time.perf_counter() - t0
    verdict(
        "scalarization dominance consistency",
        checked >= 100_000 and elapsed < 5.0,
        f"{checked} triples, {elapsed:.2f}s < 5s",
    )


def test_weight_box_compliance():
    box = WeightBox(bounds=((0.1, 0.9), (0.0, 1.0)))
    rng = np.random.default_rng(4)
    ok = True
    for _ in range(100_000):
        w = mobo.sample_weights(box, rng)
        if not (0.1 <= w[0] <= 0.9) or abs(w[0] + w[1] - 1.0) > 1e-12:
            ok = False
            break
    verdict("weight-box compliance (1e5 samples, w1 in [0.1, 0.9])", ok)


def test_subevaluation_grid_and_cost():
    grid = engine.subevaluation_grid(100, full_thr=0.5)
    ns = sorted({n for n, _ in grid})
    grid_ok = ns == [25, 50, 75, 90, 100] and len(grid) == 54 and (100, 0.5) not in grid

    data = income_like(n=5000, seed=0)
    train_ds, valid_ds, _ = split(data, SplitSpec(seed=1))
    params = BoosterParams(
        eta=0.1, max_depth=6, subsample=0.8, colsample=0.8, gamma=0.05, max_rounds=100, seed=3
    )
    specs = (MeasureSpec("mmce"), MeasureSpec("f1_gap"))
    config = PipelineConfig(booster=params, nrounds=100, thr=0.5)

    def once():
        t0 = time.perf_counter()
        model = gbt.train(train_ds, params)
        t_train = time.perf_counter() - t0
        t0 = time.perf_counter()
        margins = gbt.staged_margins(model, valid_ds)
        subs = engine.subevaluations(model, config, specs, valid_ds, margins=margins)
        t_sub = time.perf_counter() - t0
        assert len(subs) == 54
        return t_train, t_sub

    trains, subs_t = zip(*(once() for _ in range(3)))
    ratio = float(np.median(subs_t) / np.median(trains))
    verdict(
        "sub-evaluation grid and staged-margin cost",
        grid_ok and ratio < 0.05,
        f"grid exact, eval/train = {ratio * 100:.2f}% < 5%",
    )


def test_gbt_sanity():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 2))
    y = (X[:, 0] + X[:, 1] > 0).astype(np.int8)
    ds = numeric_dataset(X, y)
    model = gbt.train(
        ds, BoosterParams(eta=0.1, max_depth=3, gamma=2.0**-7, max_rounds=50, seed=0)
    )
    hard = (gbt.predict_proba(model, ds) >= 0.5).astype(np.int8)
    mmce_train = float((hard != y).mean())

    y2 = np.array([1, 1, 0, 0, 0, 1, 0, 0, 1, 0], dtype=np.int8)
    const = numeric_dataset(np.ones((10, 3)), y2)
    const_model = gbt.train(const, BoosterParams(max_rounds=25, subsample=0.7, seed=2))
    base_dev = float(np.abs(gbt.predict_proba(const_model, const) - 0.4).max())

    staged = gbt.staged_margins(model, ds)
    exact = np.array_equal(staged[-1], gbt.predict_margin(model, ds))

    verdict(
        "GBT sanity (separable error, base-rate prediction, staged identity)",
        mmce_train < 0.05 and base_dev < 1e-9 and exact,
        f"mmce={mmce_train:.3f}, base-rate dev={base_dev:.1e}, staged==full: {exact}",
    )


def _probas_context(probas, labels, groups):
    from test_measures import context_from_probas

    return context_from_probas(probas, labels, groups=groups)


def test_measure_unit_oracles():
    # hand-computed confusion tables: TPR gap 0.2 and F1 gap 0.3
    probas, labels, groups = [], [], []

    def add(count, group, actual, predicted):
        probas.extend([0.9 if predicted else 0.1] * count)
        labels.extend([actual] * count)
        groups.extend([group] * count)

    add(40, 0, 1, 1), add(10, 0, 1, 0), add(10, 0, 0, 1), add(40, 0, 0, 0)
    add(30, 1, 1, 1), add(20, 1, 1, 0), add(20, 1, 0, 1), add(30, 1, 0, 0)
    ctx = _probas_context(probas, labels, groups)
    tpr_ok = abs(measures.fairness_gap(ctx, kind="independence") - 0.2) < 1e-12

    probas, labels, groups = [], [], []
    add(40, 0, 1, 1), add(10, 0, 0, 1), add(10, 0, 1, 0), add(40, 0, 0, 0)
    add(20, 1, 1, 1), add(20, 1, 0, 1), add(20, 1, 1, 0), add(40, 1, 0, 0)
    ctx = _probas_context(probas, labels, groups)
    f1_ok = abs(measures.fairness_gap(ctx, kind="f1") - 0.3) < 1e-12

    rng = np.random.default_rng(3)
    n = 500
    X = rng.uniform(-1, 1, size=(n, 4))
    y = ((X[:, 0] + 0.5 * X[:, 1] - 0.3 * X[:, 2] + rng.normal(scale=0.3, size=n)) > 0).astype(np.int8)
    stump_ds = numeric_dataset(X, y)
    stumps = gbt.train(
        stump_ds, BoosterParams(eta=0.1, max_depth=1, gamma=1e-3, max_rounds=60, seed=1)
    )
    ias = measures.interaction_strength(stumps, stump_ds, n=60, bins=20)

    mec = measures.main_effect_complexity(lambda Z: 2.0 * Z[:, 0], stump_ds, bins=20)

    model = gbt.train(stump_ds, BoosterParams(max_depth=2, gamma=0.01, max_rounds=20, seed=0))
    rob_ctx = EvalContext.build(model, stump_ds)
    rob = measures.robustness_perturbation(rob_ctx, RobustnessConfig(epsilon=0.0, seed=5))

    verdict(
        "fairness/interpretability/robustness unit oracles",
        tpr_ok and f1_ok and ias < 0.05 and mec == 1.0 and rob == 0.0,
        f"tpr_gap@1e-12: {tpr_ok}, f1_gap@1e-12: {f1_ok}, stump IAS={ias:.3f}, "
        f"linear MEC={mec}, eps->0 robustness={rob}",
    )


REFERENCE_SEED = 7


def _staged_reference_run(data):
    state = engine.init_session(
        data,
        (MeasureSpec("mmce"), MeasureSpec("f1_gap")),
        seed=REFERENCE_SEED,
        session_id="reference",
    )
    engine.run(state, iterations=20)
    front20 = engine.report(state, "valid")
    engine.set_weight_box(state, WeightBox(bounds=((0.1, 0.9), (0.0, 1.0))))
    engine.run(state, iterations=50)
    engine.run(state, iterations=50)
    return state, front20


def _fingerprint(state):
    return [
        (r.config.to_dict(), r.measures.values, r.provenance, r.iteration, r.parent)
        for r in state.archive.records
    ]


@pytest.mark.slow
def test_reference_end_to_end():
    t_start = time.perf_counter()
    data = income_like(n=5000, bias=0.15, seed=0)

    state, front20 = _staged_reference_run(data)
    front120 = engine.report(state, "valid")

    baseline = engine.init_session(
        data, (MeasureSpec("mmce"),), seed=REFERENCE_SEED, session_id="baseline"
    )
    engine.run(baseline, iterations=120)
    best_single = min(r.measures.values[0] for r in baseline.archive.records)

    repeat, _ = _staged_reference_run(data)
    deterministic = _fingerprint(repeat) == _fingerprint(state)

    qualifying = [
        r for r in front120 if r["f1_gap"] < 0.01 and r["mmce"] <= best_single + 0.05
    ]
    growth_ok = len(front120) >= len(front20)
    elapsed = time.perf_counter() - t_start
    verdict(
        "reference end-to-end run (20 -> 70 -> 120, box narrowed to [0.1, 0.9])",
        bool(qualifying) and growth_ok and deterministic and elapsed < 300.0,
        f"qualifying points={len(qualifying)} (best single mmce={best_single:.4f}), "
        f"front {len(front20)}->{len(front120)}, deterministic={deterministic}, "
        f"{elapsed:.0f}s < 300s",
    )


def test_pause_restore_fidelity(small_task):
    specs = (MeasureSpec("mmce"), MeasureSpec("f1_gap"))
    uninterrupted = engine.init_session(small_task, specs, seed=33, m=4, session_id="fid")
    engine.run(uninterrupted, iterations=6)

    resumed = engine.init_session(small_task, specs, seed=33, m=4, session_id="fid")
    engine.run(resumed, iterations=3)
    snap = json.dumps(engine.snapshot(resumed))
    restored = engine.restore(snap)
    engine.run(restored, iterations=3)

    def canonical(state):
        doc = engine.snapshot(state)
        for record in doc["archive"]:
            record["wall_time"] = 0.0
        doc["budget"]["wall_seconds_allowed"] = None
        return json.dumps(doc, sort_keys=True)

    identical = canonical(restored) == canonical(uninterrupted)
    verdict("pause/restore fidelity (snapshot -> restore -> continue)", identical)
