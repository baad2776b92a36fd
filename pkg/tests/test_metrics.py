from datetime import timedelta
import math
from typing import List, Set

from hypothesis import given, settings, strategies as st
import pytest

from trirec.metrics import (METRIC_FIELDS, EmptyRelevantSetError, EvaluationCase, KSettings, MetricReport,
                            aggregate, average_precision_at_k, best_metrics, f1_at_k, mrr_paper_at_k,
                            mrr_standard_at_k, ndcg_at_k, precision_at_k, recall_at_k, score_case)


@st.composite
def cases(draw: st.DrawFn) -> EvaluationCase:
    universe = draw(st.integers(1, 30))
    ordering = draw(st.permutations(list(range(universe))))
    recommended = ordering[:draw(st.integers(0, universe))]
    relevant = draw(st.sets(st.integers(0, universe - 1), min_size=1))
    return EvaluationCase(recommended, relevant)


def brute_ap(recommended: List[int], relevant: Set[int], k: int) -> float:
    total = 0.0
    for i in range(1, k + 1):
        if i <= len(recommended) and recommended[i - 1] in relevant:
            total += len([x for x in recommended[:i] if x in relevant]) / i
    return total / min(len(relevant), k)


def brute_ndcg(recommended: List[int], relevant: Set[int], k: int) -> float:
    gains = [1.0 if x in relevant else 0.0 for x in recommended[:k]]
    dcg = sum(g / math.log2(i + 2) for i, g in enumerate(gains))
    ideal = sorted([1.0] * min(len(relevant), k), reverse=True)
    return dcg / sum(g / math.log2(i + 2) for i, g in enumerate(ideal))


@pytest.mark.fast
def test_worked_examples() -> None:
    case = EvaluationCase(['a', 'b', 'c'], {'b', 'z'})
    assert precision_at_k(case, 1) == 0.0
    assert precision_at_k(case, 2) == 0.5
    assert recall_at_k(case, 3) == 0.5
    assert f1_at_k(case, 2) == pytest.approx(0.5)
    assert mrr_standard_at_k(case, 3) == 0.5
    assert mrr_paper_at_k(case, 3) == pytest.approx(0.25)
    # one hit at rank 2 of two relevant items
    assert average_precision_at_k(case, 10) == pytest.approx(0.25)
    assert average_precision_at_k(EvaluationCase(['b', 'a'], {'a'}), 10) == pytest.approx(0.5)
    assert ndcg_at_k(EvaluationCase(['x', 'a'], {'a'}), 10) == pytest.approx(0.63093, abs=1e-5)


@pytest.mark.fast
def test_short_lists_count_as_misses() -> None:
    case = EvaluationCase(['a'], {'a'})
    assert precision_at_k(case, 5) == pytest.approx(0.2)
    assert recall_at_k(case, 5) == 1.0
    assert ndcg_at_k(case, 10) == 1.0


@pytest.mark.fast
def test_perfect_list_bounds() -> None:
    relevant = set(range(10))
    case = EvaluationCase(list(range(10)), relevant)
    scores = score_case(case)
    assert scores.p_at_1 == 1.0
    assert scores.r_at_10 == 1.0
    assert scores.map_at_10 == pytest.approx(1.0)
    assert scores.ndcg_at_10 == pytest.approx(1.0)
    assert scores.mrr_standard_at_10 == 1.0
    harmonic = sum(1 / i for i in range(1, 11))
    assert scores.mrr_paper_at_10 == pytest.approx(harmonic / 10)
    assert scores.mrr_paper_at_10 == pytest.approx(0.2928968, abs=1e-7)


@pytest.mark.fast
def test_invalid_arguments() -> None:
    case = EvaluationCase(['a'], {'a'})
    for metric in [precision_at_k, recall_at_k, mrr_standard_at_k, ndcg_at_k]:
        with pytest.raises(ValueError):
            metric(case, 0)
    empty = EvaluationCase(['a'], set())
    for metric in [recall_at_k, mrr_paper_at_k, average_precision_at_k, ndcg_at_k]:
        with pytest.raises(EmptyRelevantSetError):
            metric(empty, 10)


@pytest.mark.fast
@given(cases(), st.integers(1, 12))
@settings(max_examples=500, deadline=timedelta(milliseconds=2000))
def test_metrics_against_brute_force(case: EvaluationCase, k: int) -> None:
    recommended, relevant = list(case.recommended), set(case.relevant)
    hits = [x for x in recommended[:k] if x in relevant]
    assert precision_at_k(case, k) == pytest.approx(len(hits) / k)
    assert recall_at_k(case, k) == pytest.approx(len(hits) / len(relevant))
    assert average_precision_at_k(case, k) == pytest.approx(brute_ap(recommended, relevant, k))
    assert ndcg_at_k(case, k) == pytest.approx(brute_ndcg(recommended, relevant, k))
    first = next((i for i, x in enumerate(recommended[:k], start=1) if x in relevant), None)
    assert mrr_standard_at_k(case, k) == (1.0 / first if first else 0.0)


@pytest.mark.fast
@given(cases())
@settings(max_examples=500, deadline=timedelta(milliseconds=2000))
def test_mrr_variants(case: EvaluationCase) -> None:
    all_hits = mrr_paper_at_k(case, 10)
    standard = mrr_standard_at_k(case, 10)
    assert 0.0 <= all_hits <= 1.0
    # the sum over all hits is divided by |relevant|
    harmonic = sum(1 / i for i in range(1, min(len(case.relevant), 10) + 1))
    assert all_hits <= harmonic / len(case.relevant) + 1e-12
    if standard == 0.0:
        assert all_hits == 0.0
    if len(case.relevant) == 1:
        assert all_hits == pytest.approx(standard)
    for value in score_case(case):
        assert 0.0 <= value <= 1.0 + 1e-12


@pytest.mark.fast
def test_aggregate() -> None:
    report = aggregate([EvaluationCase(['a'], {'a'}), EvaluationCase(['b'], {'a'})])
    assert report.n_cases == 2
    assert report.p_at_1 == pytest.approx(0.5)
    assert report.defined
    empty = aggregate([])
    assert not empty.defined
    assert all(value is None for value in empty.values().values())
    assert aggregate([EvaluationCase(['a', 'b'], {'b'})], KSettings(p=2)).p_at_1 == pytest.approx(0.5)


@pytest.mark.fast
def test_best_metrics() -> None:
    mp = MetricReport(n_cases=1, **{name: 0.5 for name in METRIC_FIELDS})
    cf = MetricReport(n_cases=1, **{**{name: 0.5 for name in METRIC_FIELDS}, 'p_at_1': 0.25, 'r_at_10': 0.75})
    best = best_metrics([mp, cf])
    assert 'P@1' in best[0] and 'P@1' not in best[1]
    assert 'R@10' in best[1] and 'R@10' not in best[0]
    assert 'nDCG@10' in best[0] and 'nDCG@10' in best[1]
    assert best_metrics([MetricReport(), MetricReport()]) == [[], []]
