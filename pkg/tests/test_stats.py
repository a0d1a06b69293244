from __future__ import annotations

import random

import numpy as np
import pytest

from lithub.errors import PeriodMismatch
from lithub.stats import (
    GrowthSeries,
    cooccurrence,
    growth,
    growth_csv,
    load_baseline,
    load_trending,
    share_ratio,
    trending,
)

from conftest import FIXTURES, corpus_1000, make_record


class TestGrowth:
    def test_monthly_hand_bucketing(self):
        records = [
            make_record(pmid=1, pub_date="2020-03-01"),
            make_record(pmid=2, pub_date="2020-03-15"),
            make_record(pmid=3, pub_date="2020-04-02"),
        ]
        series = growth(records, "month")
        assert [(r.period, r.new, r.cumulative) for r in series.rows] == [
            ("2020-03", 2, 2),
            ("2020-04", 1, 3),
        ]

    def test_empty_collection(self):
        assert growth([], "month").rows == ()

    def test_gap_months_emitted_with_zero(self):
        records = [
            make_record(pmid=1, pub_date="2020-01-10"),
            make_record(pmid=2, pub_date="2020-04-10"),
        ]
        series = growth(records, "month")
        assert [r.period for r in series.rows] == ["2020-01", "2020-02", "2020-03", "2020-04"]
        assert [r.new for r in series.rows] == [1, 0, 0, 1]

    def test_quarter_labels(self):
        records = [make_record(pmid=1, pub_date="2021-11-30")]
        assert growth(records, "quarter").rows[0].period == "2021-Q4"

    def test_fixture_totals_match_recount(self, corpus_1000):
        series = growth(corpus_1000, "month")
        recount: dict[str, int] = {}
        for record in corpus_1000:
            period = record.pub_date[:7]
            recount[period] = recount.get(period, 0) + 1
        by_period = {r.period: r.new for r in series.rows}
        for period, count in recount.items():
            assert by_period[period] == count
        assert series.total == len(corpus_1000)

    def test_cumulative_non_decreasing(self, corpus_1000):
        series = growth(corpus_1000, "day")
        cumulative = [r.cumulative for r in series.rows]
        assert cumulative == sorted(cumulative)
        assert sum(r.new for r in series.rows) == series.total

    def test_csv_shape(self):
        series = growth([make_record(pmid=1, pub_date="2021-01-05")], "month")
        assert growth_csv(series) == "period,new,cumulative\n2021-01,1,1\n"


class TestShareRatio:
    def test_nine_percent_magnitude(self):
        series = GrowthSeries("quarter", growth([make_record(pmid=i, pub_date="2020-05-01") for i in range(1, 10)], "quarter").rows)
        ratios = share_ratio(series, {"2020-Q2": 100})
        assert ratios == [("2020-Q2", 0.09)]

    def test_zero_baseline_yields_none(self):
        series = growth([make_record(pmid=1, pub_date="2021-01-01")], "month")
        assert share_ratio(series, {"2021-01": 0}) == [("2021-01", None)]

    def test_missing_period_raises(self):
        series = growth([make_record(pmid=1, pub_date="2021-01-01")], "month")
        with pytest.raises(PeriodMismatch):
            share_ratio(series, {"2020-12": 5})

    def test_self_ratio_is_one(self, corpus_1000):
        series = growth(corpus_1000, "month")
        baseline = {r.period: r.new for r in series.rows}
        for period, ratio in share_ratio(series, baseline):
            if baseline[period]:
                assert ratio == 1.0

    def test_fixture_baseline_hand_division(self, corpus_1000):
        baseline = load_baseline(FIXTURES / "baseline_month.tsv")
        series = growth(corpus_1000, "month")
        for period, ratio in share_ratio(series, baseline):
            new = next(r.new for r in series.rows if r.period == period)
            assert ratio == pytest.approx(new / baseline[period])


class TestCooccurrence:
    def test_hand_counted_pairing(self):
        sets = [frozenset({"Long COVID", "Diagnosis"}), frozenset({"Long COVID"})]
        matrix = cooccurrence(sets, topics=("Diagnosis", "Long COVID"))
        assert matrix.entry("Long COVID", "Diagnosis") == 1
        assert matrix.entry("Long COVID", "Long COVID") == 2
        assert matrix.entry("Diagnosis", "Diagnosis") == 1

    def test_empty(self):
        matrix = cooccurrence([], topics=("A", "B"))
        assert not matrix.matrix.any()

    def test_symmetry_and_diagonal_bound(self, corpus_truth):
        sets = [frozenset(t["topics"]) for t in corpus_truth.values()]
        matrix = cooccurrence(sets)
        assert np.array_equal(matrix.matrix, matrix.matrix.T)
        diag = np.diag(matrix.matrix)
        for i in range(len(matrix.topics)):
            for j in range(len(matrix.topics)):
                assert matrix.matrix[i, j] <= min(diag[i], diag[j])

    def test_matches_brute_force(self, corpus_truth):
        sets = [frozenset(t["topics"]) for t in corpus_truth.values()]
        matrix = cooccurrence(sets)
        rng = random.Random(3)
        for _ in range(20):
            a, b = rng.sample(matrix.topics, 2)
            expected = sum(1 for s in sets if a in s and b in s)
            assert matrix.entry(a, b) == expected


class TestTrending:
    def test_filters_to_members(self):
        ranked = trending({2}, [(1, 0.9), (2, 0.8)])
        assert ranked == [(2, 0.8)]

    def test_empty_external(self):
        assert trending({1, 2}, []) == []

    def test_cap_and_order(self):
        external = [(i, i / 10) for i in range(1, 11)]
        ranked = trending(set(range(1, 11)), external, top_n=6)
        assert len(ranked) == 6
        assert [p for p, _ in ranked] == [10, 9, 8, 7, 6, 5]

    def test_double_subset_property(self, corpus_1000):
        members = {r.pmid for r in corpus_1000}
        external = load_trending(FIXTURES / "trending.tsv")
        ranked = trending(members, external, top_n=50)
        ranked_pmids = {p for p, _ in ranked}
        assert ranked_pmids <= members
        assert ranked_pmids <= {p for p, _ in external}

    def test_matches_intersection_sort_oracle(self, corpus_1000):
        members = {r.pmid for r in corpus_1000}
        external = load_trending(FIXTURES / "trending.tsv")
        expected = sorted(
            ((p, s) for p, s in external if p in members),
            key=lambda t: (-t[1], -t[0]),
        )[:6]
        assert trending(members, external) == expected
