import numpy as np
import pytest

from musprune.cnf import CnfFormula
from musprune.mus import (EnumerationTrace, MusRecord, brute_force_muses,
                          critical_clauses, enumerate_marco, is_mus,
                          lift_muses, shrink, truth_table_satisfiable)
from musprune.sat import SatEngine

F1 = CnfFormula(2, [[1], [-1], [1, 2], [-2]])


def mus_sets(records):
    return sorted(tuple(sorted(r.clause_indices)) for r in records)


def random_unsat(rng, n_hi=5, m_hi=10):
    while True:
        n = int(rng.integers(2, n_hi + 1))
        m = int(rng.integers(3, m_hi + 1))
        clauses = []
        for _ in range(m):
            k = int(rng.integers(1, min(3, n) + 1))
            vs = rng.choice(n, size=k, replace=False) + 1
            signs = rng.integers(0, 2, size=k) * 2 - 1
            clauses.append([int(v * s) for v, s in zip(vs, signs)])
        f = CnfFormula(n, clauses)
        if not truth_table_satisfiable(f):
            return f


class TestIsMus:
    def test_f1_core_pair(self):
        assert is_mus(F1, {0, 1})

    def test_f1_non_minimal(self):
        assert not is_mus(F1, {0, 1, 2})

    def test_sat_subset(self):
        assert not is_mus(F1, {0, 2})

    def test_every_brute_force_mus_validates(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            f = random_unsat(rng)
            for record in brute_force_muses(f):
                assert is_mus(f, record.clause_indices)


class TestShrink:
    def test_f1_full_seed(self):
        assert shrink(F1, {0, 1, 2, 3}).sorted_indices() == [1, 2, 3]

    def test_already_minimal(self):
        assert shrink(F1, {0, 1}).sorted_indices() == [0, 1]

    def test_sat_seed_rejected(self):
        with pytest.raises(ValueError, match="satisfiable"):
            shrink(F1, {0, 2})

    def test_output_is_mus_and_contained(self):
        rng = np.random.default_rng(1)
        for _ in range(15):
            f = random_unsat(rng)
            seed = set(range(f.num_clauses))
            record = shrink(f, seed)
            assert record.clause_indices <= seed
            assert is_mus(f, record.clause_indices)


class TestCriticalClauses:
    def test_mus_is_all_critical(self):
        assert critical_clauses(F1, {0, 1}) == {0, 1}

    def test_f1_full_set(self):
        assert critical_clauses(F1, {0, 1, 2, 3}) == {1}

    def test_sat_subset_rejected(self):
        with pytest.raises(ValueError):
            critical_clauses(F1, {0, 2})

    def test_definition_by_removal(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            f = random_unsat(rng)
            full = set(range(f.num_clauses))
            crit = critical_clauses(f, full)
            for c in full:
                without = f.induced(full - {c})
                assert truth_table_satisfiable(without) == (c in crit)


class TestBruteForce:
    def test_f1(self):
        assert mus_sets(brute_force_muses(F1)) == [(0, 1), (1, 2, 3)]

    def test_single_pair(self):
        f = CnfFormula(1, [[1], [-1]])
        assert mus_sets(brute_force_muses(f)) == [(0, 1)]

    def test_sat_formula_has_none(self):
        assert brute_force_muses(CnfFormula(2, [[1, 2]])) == set()

    def test_guard(self):
        f = CnfFormula(1, [[1]] * 21)
        with pytest.raises(ValueError, match="clauses"):
            brute_force_muses(f)

    def test_empty_clause_is_singleton_mus(self):
        f = CnfFormula(1, [[], [1], [-1]])
        assert mus_sets(brute_force_muses(f)) == [(0,), (1, 2)]


class TestEnumerateMarco:
    def test_f1_exhaustive(self):
        trace = enumerate_marco(F1, 30.0)
        assert trace.exhausted
        assert mus_sets(trace.muses) == [(0, 1), (1, 2, 3)]

    def test_sat_input_rejected(self):
        with pytest.raises(ValueError, match="satisfiable"):
            enumerate_marco(CnfFormula(2, [[1, 2]]), 1.0)

    def test_nonpositive_budget_rejected(self):
        with pytest.raises(ValueError, match="budget"):
            enumerate_marco(F1, 0.0)

    def test_records_distinct_and_sound(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            f = random_unsat(rng)
            trace = enumerate_marco(f, 30.0)
            as_sets = [r.clause_indices for r in trace.muses]
            assert len(set(as_sets)) == len(as_sets)
            for indices in as_sets:
                assert is_mus(f, indices)

    def test_matches_brute_force_when_exhausted(self):
        rng = np.random.default_rng(4)
        for _ in range(15):
            f = random_unsat(rng, n_hi=4, m_hi=9)
            trace = enumerate_marco(f, 30.0)
            assert trace.exhausted
            assert mus_sets(trace.muses) == mus_sets(brute_force_muses(f))

    def test_timestamps_nondecreasing(self):
        trace = enumerate_marco(F1, 30.0)
        assert trace.timestamps == sorted(trace.timestamps)

    def test_sink_called_per_mus(self):
        collected = []
        trace = enumerate_marco(F1, 30.0, sink=collected.append)
        assert collected == trace.muses

    def test_tiny_budget_contract(self):
        rng = np.random.default_rng(5)
        f = random_unsat(rng, n_hi=5, m_hi=10)
        trace = enumerate_marco(f, 1e-9)
        assert not trace.exhausted
        assert trace.muses == []


class TestLiftMuses:
    def test_identity_map(self):
        trace = EnumerationTrace(muses=[MusRecord(frozenset({0, 1}))],
                                 timestamps=[0.1], seeds_tested=1,
                                 exhausted=True)
        lifted = lift_muses(trace, [0, 1])
        assert lifted.muses[0].clause_indices == frozenset({0, 1})

    def test_relabeling(self):
        trace = EnumerationTrace(muses=[MusRecord(frozenset({0, 1}))])
        lifted = lift_muses(trace, [2, 5])
        assert lifted.muses[0].clause_indices == frozenset({2, 5})

    def test_unmapped_index(self):
        trace = EnumerationTrace(muses=[MusRecord(frozenset({3}))])
        with pytest.raises(IndexError, match="index map"):
            lift_muses(trace, [0, 1])

    def test_metadata_preserved(self):
        trace = EnumerationTrace(muses=[MusRecord(frozenset({0}))],
                                 timestamps=[0.5], seeds_tested=7,
                                 exhausted=False)
        lifted = lift_muses(trace, [4])
        assert lifted.timestamps == [0.5]
        assert lifted.seeds_tested == 7
        assert lifted.exhausted is False


class TestSubsetMusProperty:
    def test_mus_of_subset_is_mus_of_whole(self):
        # Any MUS found inside an UNSAT subset validates on the full formula.
        rng = np.random.default_rng(6)
        checked = 0
        while checked < 10:
            f = random_unsat(rng)
            full = set(range(f.num_clauses))
            sub = {c for c in full if rng.random() < 0.8}
            if truth_table_satisfiable(f.induced(sub)):
                continue
            induced = f.induced(sub)
            order = sorted(sub)
            for record in brute_force_muses(induced):
                original_indices = {order[i] for i in record.clause_indices}
                assert is_mus(f, original_indices)
            checked += 1
