"""Top-k ranking metrics with binary relevance.

Two MRR variants are provided. mrr_standard_at_k is the usual reciprocal rank
of the first hit. mrr_paper_at_k averages the reciprocal ranks of all hits over
the number of relevant items; this is the variant behind the published MRR@10
column, which is bounded by H_10 / 10 ~= 0.2929 when ten items are withheld.
"""
import math
from typing import AbstractSet, Any, Dict, Iterable, List, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field


class EmptyRelevantSetError(ValueError):
    pass


class EvaluationCase(NamedTuple):
    recommended: Sequence[Any]  # ordered ids, no duplicates
    relevant: AbstractSet[Any]  # the withheld test items


class KSettings(NamedTuple):
    """The cut-off used for each reported metric."""
    p: int = 1
    f1: int = 5
    r: int = 10
    mrr: int = 10
    map: int = 10
    ndcg: int = 10


class CaseScores(NamedTuple):
    p_at_1: float
    f1_at_5: float
    r_at_10: float
    mrr_paper_at_10: float
    mrr_standard_at_10: float
    map_at_10: float
    ndcg_at_10: float


METRIC_FIELDS = list(CaseScores._fields)

# Column labels, in the published column order (plus the standard MRR next to the all-hits variant).
METRIC_LABELS: Dict[str, str] = {
    'p_at_1': 'P@1',
    'f1_at_5': 'F1@5',
    'r_at_10': 'R@10',
    'mrr_paper_at_10': 'MRR@10(paper)',
    'mrr_standard_at_10': 'MRR@10(standard)',
    'map_at_10': 'MAP@10',
    'ndcg_at_10': 'nDCG@10',
}


def _check_k(k: int) -> None:
    if k < 1:
        raise ValueError(f'k must be >= 1, got {k}')


def _require_relevant(case: EvaluationCase) -> None:
    if not case.relevant:
        raise EmptyRelevantSetError('relevant set is empty; such cases must be excluded before scoring')


def _hits(case: EvaluationCase, k: int) -> List[int]:
    """1-based ranks of the relevant items within the top k."""
    return [rank for rank, item in enumerate(case.recommended[:k], start=1) if item in case.relevant]


def precision_at_k(case: EvaluationCase, k: int) -> float:
    _check_k(k)
    return len(_hits(case, k)) / k


def recall_at_k(case: EvaluationCase, k: int) -> float:
    _check_k(k)
    _require_relevant(case)
    return len(_hits(case, k)) / len(case.relevant)


def f1_at_k(case: EvaluationCase, k: int) -> float:
    """Harmonic mean of precision_at_k and recall_at_k (0 when both are 0)."""
    p = precision_at_k(case, k)
    r = recall_at_k(case, k)
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def mrr_standard_at_k(case: EvaluationCase, k: int) -> float:
    _check_k(k)
    hits = _hits(case, k)
    return 1.0 / hits[0] if hits else 0.0


def mrr_paper_at_k(case: EvaluationCase, k: int) -> float:
    """(1/|relevant|) * sum of 1/rank over the relevant items found in the top k."""
    _check_k(k)
    _require_relevant(case)
    return sum(1.0 / rank for rank in _hits(case, k)) / len(case.relevant)


def average_precision_at_k(case: EvaluationCase, k: int) -> float:
    """(1/min(|relevant|, k)) * sum over hit ranks i <= k of P@i."""
    _check_k(k)
    _require_relevant(case)
    hits = _hits(case, k)
    # The n-th hit (1-based) at rank i contributes P@i = n / i
    total = sum(n / rank for n, rank in enumerate(hits, start=1))
    return total / min(len(case.relevant), k)


def ndcg_at_k(case: EvaluationCase, k: int) -> float:
    """Binary-gain nDCG with the log2(i + 1) discount starting at rank 1."""
    _check_k(k)
    _require_relevant(case)
    dcg = sum(1.0 / math.log2(rank + 1) for rank in _hits(case, k))
    idcg = sum(1.0 / math.log2(rank + 1) for rank in range(1, min(len(case.relevant), k) + 1))
    return dcg / idcg


def score_case(case: EvaluationCase, ks: KSettings = KSettings()) -> CaseScores:
    return CaseScores(
        p_at_1=precision_at_k(case, ks.p),
        f1_at_5=f1_at_k(case, ks.f1),
        r_at_10=recall_at_k(case, ks.r),
        mrr_paper_at_10=mrr_paper_at_k(case, ks.mrr),
        mrr_standard_at_10=mrr_standard_at_k(case, ks.mrr),
        map_at_10=average_precision_at_k(case, ks.map),
        ndcg_at_10=ndcg_at_k(case, ks.ndcg),
    )


UnitInterval = Optional[float]


class MetricReport(BaseModel):
    """Mean per-case metrics for one (use case, algorithm) run.
    All values are None (undefined) when no case was evaluated."""
    p_at_1: UnitInterval = Field(default=None, ge=0.0, le=1.0)
    f1_at_5: UnitInterval = Field(default=None, ge=0.0, le=1.0)
    r_at_10: UnitInterval = Field(default=None, ge=0.0, le=1.0)
    mrr_paper_at_10: UnitInterval = Field(default=None, ge=0.0, le=1.0)
    mrr_standard_at_10: UnitInterval = Field(default=None, ge=0.0, le=1.0)
    map_at_10: UnitInterval = Field(default=None, ge=0.0, le=1.0)
    ndcg_at_10: UnitInterval = Field(default=None, ge=0.0, le=1.0)
    n_cases: int = Field(default=0, ge=0)

    @property
    def defined(self) -> bool:
        return self.n_cases > 0

    def values(self) -> Dict[str, Optional[float]]:
        return {name: getattr(self, name) for name in METRIC_FIELDS}


def aggregate(cases: Iterable[EvaluationCase], ks: KSettings = KSettings()) -> MetricReport:
    """Scores every case and takes the arithmetic mean of each metric.
    Cases with an empty relevant set must be excluded by the caller.

    Args:
        cases (Iterable[EvaluationCase]): The evaluated cases
        ks (KSettings, optional): The cut-offs. Defaults to KSettings().

    Returns:
        MetricReport: The means, together with the number of cases
    """
    scores = [score_case(case, ks) for case in cases]
    if not scores:
        return MetricReport(n_cases=0)
    matrix = np.asarray(scores, dtype=np.float64)
    means = matrix.mean(axis=0)
    # Clip float noise so that e.g. a mean of 1.0s can never exceed the [0, 1] bound.
    values = {name: float(min(max(mean, 0.0), 1.0)) for name, mean in zip(METRIC_FIELDS, means)}
    return MetricReport(n_cases=len(scores), **values)


def best_metrics(reports: Sequence[MetricReport]) -> List[List[str]]:
    """For reports of one use case (one per algorithm), the metric labels each
    report is best at. Ties mark every maximal report; undefined values never win.

    Args:
        reports (Sequence[MetricReport]): The reports to compare

    Returns:
        List[List[str]]: One list of labels per report, in METRIC_LABELS order
    """
    best: List[List[str]] = [[] for _ in reports]
    for name in METRIC_FIELDS:
        defined = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        if not defined:
            continue
        top = max(defined)
        for i, report in enumerate(reports):
            if getattr(report, name) == top:
                best[i].append(METRIC_LABELS[name])
    return best
