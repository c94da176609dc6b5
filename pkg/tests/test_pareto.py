import numpy as np
import pytest

from axmc.errors import ArgumentError
from axmc.gbt import BoosterParams
from axmc.measures import MeasureVector
from axmc.mobo import PipelineConfig
from axmc.pareto import Archive, EvalRecord, dominates, filter_subevals, pareto_front


def record(*values, provenance="full", parent=None, iteration=0):
    config = PipelineConfig(booster=BoosterParams(max_rounds=10), nrounds=10, thr=0.5)
    return EvalRecord(
        config=config,
        measures=MeasureVector(values=tuple(float(v) for v in values)),
        provenance=provenance,
        iteration=iteration,
        wall_time=0.0,
        parent=parent,
    )


def brute_force_front(records):
    """Independent oracle: per-record scan for any dominator."""
    out = []
    for i, a in enumerate(records):
        av = np.array(a.measures.values)
        dominated = False
        for j, b in enumerate(records):
            if i == j:
                continue
            bv = np.array(b.measures.values)
            if (bv <= av).all() and (bv < av).any():
                dominated = True
                break
        if not dominated:
            out.append(a)
    return out


class TestDominates:
    def test_componentwise(self):
        assert dominates((0.1, 0.2), (0.2, 0.3))

    def test_incomparable(self):
        assert not dominates((0.1, 0.3), (0.2, 0.2))
        assert not dominates((0.2, 0.2), (0.1, 0.3))

    def test_self_not_dominating(self):
        assert not dominates((0.4, 0.4), (0.4, 0.4))

    def test_length_mismatch(self):
        with pytest.raises(ArgumentError):
            dominates((0.1,), (0.1, 0.2))


class TestParetoFront:
    def test_single_record(self):
        r = record(0.3, 0.3)
        assert pareto_front([r]) == [r]

    def test_hand_case(self):
        records = [record(0.1, 0.9), record(0.9, 0.1), record(0.5, 0.5), record(0.6, 0.6)]
        assert pareto_front(records) == records[:3]

    def test_empty_rejected(self):
        with pytest.raises(ArgumentError):
            pareto_front([])

    def test_matches_brute_force_on_random_sets(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            n = int(rng.integers(1, 120))
            k = int(rng.integers(2, 5))
            records = [record(*rng.random(k)) for _ in range(n)]
            assert pareto_front(records) == brute_force_front(records)

    def test_ties_all_kept(self):
        records = [record(0.2, 0.2), record(0.2, 0.2), record(0.3, 0.3)]
        assert pareto_front(records) == records[:2]

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        records = [record(*rng.random(3)) for _ in range(80)]
        front = pareto_front(records)
        assert pareto_front(front) == front

    def test_no_internal_dominance_and_witnesses(self):
        rng = np.random.default_rng(8)
        records = [record(*rng.random(2)) for _ in range(100)]
        front = pareto_front(records)
        for a in front:
            for b in front:
                assert not dominates(a.measures, b.measures)
        excluded = [r for r in records if r not in front]
        for r in excluded:
            assert any(dominates(f.measures, r.measures) for f in front)

    def test_appending_dominated_record_keeps_front(self):
        rng = np.random.default_rng(9)
        records = [record(*rng.random(2)) for _ in range(50)]
        front = pareto_front(records)
        worst = record(1.5, 1.5)
        assert pareto_front(records + [worst]) == front


class TestArchive:
    def test_append_only_and_k_check(self):
        archive = Archive(k=2)
        archive.append(record(0.1, 0.2))
        with pytest.raises(ArgumentError):
            archive.append(record(0.1, 0.2, 0.3))
        assert len(archive) == 1

    def test_provenance_invariants(self):
        with pytest.raises(ArgumentError):
            record(0.1, 0.2, provenance="sub")  # sub without parent
        with pytest.raises(ArgumentError):
            record(0.1, 0.2, provenance="full", parent=3)
        with pytest.raises(ArgumentError):
            record(0.1, 0.2, provenance="other")


class TestFilterSubevals:
    def make_archive(self, *vectors):
        archive = Archive(k=2)
        for v in vectors:
            archive.append(record(*v))
        return archive

    def test_dominated_candidate_dropped(self):
        archive = self.make_archive((0.2, 0.2))
        candidate = record(0.5, 0.5, provenance="sub", parent=0)
        assert filter_subevals(archive, [candidate]) == []

    def test_equal_candidate_retained(self):
        archive = self.make_archive((0.2, 0.2))
        candidate = record(0.2, 0.2, provenance="sub", parent=0)
        assert filter_subevals(archive, [candidate]) == [candidate]

    def test_mixed_provenance_rejected(self):
        archive = self.make_archive((0.2, 0.2))
        with pytest.raises(ArgumentError):
            filter_subevals(archive, [record(0.1, 0.1)])

    def test_archive_unchanged(self):
        archive = self.make_archive((0.2, 0.2), (0.4, 0.1))
        before = list(archive.records)
        filter_subevals(archive, [record(0.1, 0.3, provenance="sub", parent=0)])
        assert archive.records == before

    def test_matches_brute_force_union(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            archive = self.make_archive(*(rng.random(2) for _ in range(int(rng.integers(1, 40)))))
            candidates = [
                record(*rng.random(2), provenance="sub", parent=0)
                for _ in range(int(rng.integers(1, 30)))
            ]
            got = filter_subevals(archive, candidates)
            oracle_front = brute_force_front(archive.records + candidates)
            expected = [c for c in candidates if any(c is f for f in oracle_front)]
            assert got == expected
