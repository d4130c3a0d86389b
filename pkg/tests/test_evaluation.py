import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from odontorank import aggregators as A
from odontorank import datagen
from odontorank.core import Odontogram
from odontorank.evaluation import (PairedCaseSet, RankingStats, build_ranking, cmc,
                                   compute_stats, correct_position, evaluate_all,
                                   normalize_rank_stats, positions_from_scores, split_data)
from odontorank.learned import LinearModel


class Constant:
    lexicographic = False

    def scores(self, rows):
        return np.zeros(np.asarray(rows).shape[:-1])


class TestCorrectPosition:
    def test_single_candidate(self):
        assert correct_position([0.3], 0) == 1

    def test_tie_with_one_other(self):
        assert correct_position([0.5, 0.5, 0.1], 0) == 2
        assert correct_position([0.5, 0.5, 0.1], 0, ties="optimistic") == 1

    def test_strict_best_of_42(self):
        s = np.linspace(0, 1, 42)
        assert correct_position(s, 41) == 1

    @settings(max_examples=500, deadline=None)
    @given(st.lists(st.integers(0, 3), min_size=1, max_size=6), st.data())
    def test_against_enumeration(self, scores, data):
        t = data.draw(st.integers(0, len(scores) - 1))
        for ties in ("pessimistic", "optimistic"):
            assert correct_position(scores, t, ties) == oracles.position_by_enumeration(
                scores, t, ties)

    def test_unknown_tie_rule(self):
        with pytest.raises(ValueError):
            correct_position([1, 2], 0, ties="random")

    def test_matrix_form_uses_diagonal(self):
        s = np.array([[3, 1, 2], [5, 0, 0], [0, 0, 1]], dtype=float)
        assert positions_from_scores(s).tolist() == [1, 3, 1]


def small_cases(seed=0, n=20):
    return datagen.generate(datagen.GenConfig(n_cases=n, seed=seed))


class TestRankingAndEvaluate:
    def test_ranking_agrees_with_evaluate_all(self):
        cases = small_cases()
        for model in (A.aa_order(), A.lo_order(), LinearModel(0.5, (0, 1, -1, 0, 0, 0, -1)),
                      A.OwaModel(tuple(A.owa_named_weights("linear")))):
            ev = evaluate_all(cases, model)
            for k, pm in enumerate(cases.pms):
                r = build_ranking(pm, cases.ams, model)
                assert r.correct_position == ev.positions[k]
                assert len(r.entries) == len(cases)

    def test_constant_model_worst_case(self):
        cases = small_cases()
        ev = evaluate_all(cases, Constant())
        assert ev.positions.tolist() == [len(cases)] * len(cases)
        assert ev.stats.average == len(cases)

    def test_perfect_model(self):
        cases = datagen.generate(datagen.GenConfig(n_cases=20, progression=0, n_rate=0,
                                                   am_n_rate=0, seed=2))
        ev = evaluate_all(cases, LinearModel(0, (0, 0, 0, 0, 0, 0, -1)))
        assert ev.stats.average == 1.0 and ev.stats.max == 1
        assert len(ev.positions) == len(cases)

    def test_true_record_must_be_candidate(self):
        cases = small_cases()
        with pytest.raises(ValueError):
            build_ranking(cases.pms[0], cases.ams[1:], A.aa_order())

    def test_candidate_order_is_deterministic(self):
        cases = small_cases()
        a = build_ranking(cases.pms[3], cases.ams, A.aa_order())
        b = build_ranking(cases.pms[3], cases.ams, A.aa_order())
        assert a == b


class TestStats:
    def test_all_first(self):
        s = compute_stats([1, 1, 1, 1])
        assert s == RankingStats(1.0, 1, 1, 1, 1, 1, 1)

    def test_nearest_rank_percentiles(self):
        s = compute_stats(range(1, 101))
        assert (s.p95, s.p99, s.q1, s.q2, s.q3) == (95, 99, 25, 50, 75)

    def test_skewed(self):
        s = compute_stats([1, 1, 1, 6, 16, 34])
        assert s.q2 == 1 and s.max == 34

    @given(st.lists(st.integers(1, 300), min_size=1, max_size=200))
    def test_ordering_of_quantiles(self, p):
        s = compute_stats(p)
        assert min(p) <= s.q1 <= s.q2 <= s.q3 <= s.p95 <= s.p99 <= s.max == max(p)
        for q in (s.q1, s.q2, s.q3, s.p95, s.p99):
            assert q in p

    def test_header(self):
        assert RankingStats.HEADER == ("Average", "Q1", "Q2", "Q3", "P95", "P99", "Max")

    def test_normalized(self):
        s = compute_stats([1] * 34)
        n = normalize_rank_stats(s, 34)
        assert round(n.max, 4) == 0.0294 and round(n.average, 4) == 0.0294
        worst = normalize_rank_stats(compute_stats([34]), 34)
        assert worst.max == 1.0
        a, b = compute_stats([1, 2, 3]), compute_stats([2, 3, 9])
        assert normalize_rank_stats(a, 34).average < normalize_rank_stats(b, 34).average


class TestCmc:
    def test_examples(self):
        assert cmc([1, 1, 1], 3)[0] == (1, 100.0)
        assert cmc([1, 2], 2) == [(1, 50.0), (2, 100.0)]

    @given(st.lists(st.integers(1, 40), min_size=1, max_size=50))
    def test_monotone_and_total(self, p):
        curve = cmc(p, 40)
        assert len(curve) == 40 and curve[-1][1] == 100.0
        assert all(a[1] <= b[1] for a, b in zip(curve, curve[1:]))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            cmc([3], 2)


class TestSplit:
    def test_published_sizes(self, large_cases):
        split = split_data(large_cases, seed=0)
        pops = large_cases.populations
        assert len(split.test) == 42
        assert sum(pops[i] == "IL" for i in split.test) == 25
        assert sum(pops[i] == "CL" for i in split.test) == 17
        assert {len(v) for _, v in split.folds} <= {34, 35}
        assert any(len(t) == 139 and len(v) == 34 for t, v in split.folds)

    def test_partition(self, large_cases):
        split = split_data(large_cases, seed=4)
        n = len(large_cases)
        assign = split.assignment(n)
        assert all(a for a in assign)
        seen = list(split.test) + [i for _, v in split.folds for i in v]
        assert sorted(seen) == list(range(n))
        for train, val in split.folds:
            assert set(train).isdisjoint(val)
            assert set(train) | set(val) | set(split.test) == set(range(n))

    def test_deterministic(self, large_cases):
        assert split_data(large_cases, 9) == split_data(large_cases, 9)
        assert split_data(large_cases, 9) != split_data(large_cases, 10)

    def test_population_too_small(self):
        cases = datagen.generate(datagen.GenConfig(n_cases=30, populations=(("A", 25), ("B", 5))))
        with pytest.raises(ValueError, match="B"):
            split_data(cases, 0)


class TestPairedCaseSet:
    def test_pairs_by_case_id(self):
        cases = small_cases(n=5)
        shuffled = cases.pms[::-1] + cases.ams
        again = PairedCaseSet.from_records(shuffled)
        assert again.case_ids == cases.case_ids[::-1]

    def test_missing_am(self):
        pm = Odontogram.from_string("Z", "PM", "V" * 32)
        with pytest.raises(ValueError):
            PairedCaseSet.from_records([pm])

    def test_subset_criteria(self):
        cases = small_cases(n=8)
        full = cases.criteria()
        sub = cases.subset([1, 4, 6])
        fresh = PairedCaseSet(sub.pairs).criteria()
        assert np.array_equal(sub.criteria(), fresh)
        assert np.array_equal(sub.criteria(), full[np.ix_([1, 4, 6], [1, 4, 6])])
