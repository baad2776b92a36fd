"""Offline train/test splitting and evaluation runs per (use case, algorithm)."""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .ingestion import StoreStatistics, compute_statistics
from .metrics import EvaluationCase, KSettings, MetricReport, aggregate
from .recommenders import RecommendationProfile, recommend
from .store import InteractionStore, relevant_store
from .trirec_types import Algorithm, EntityKind, EntityRef, HoldoutStrategy, UseCase

logger = logging.getLogger(__name__)

Pair = Tuple[EntityRef, EntityRef]  # (target, candidate)


class SplitConfig(BaseModel):
    """Which targets are evaluated and how their test items are withheld."""
    model_config = ConfigDict(frozen=True, extra='forbid')

    min_interactions: int = Field(default=11, ge=2)
    holdout: int = Field(default=10, ge=1)
    strategy: HoldoutStrategy = HoldoutStrategy.AUTO
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode='after')
    def check_training_margin(self) -> 'SplitConfig':
        # Every evaluated target must keep at least one training interaction.
        if self.min_interactions <= self.holdout:
            raise ValueError(f'min_interactions ({self.min_interactions}) must be greater than '
                             f'holdout ({self.holdout})')
        return self


class SplitResult(NamedTuple):
    train_store: InteractionStore
    test_sets: Dict[EntityRef, FrozenSet[EntityRef]]  # ordered by target id
    strategy: HoldoutStrategy  # never AUTO


class EvaluationReport(BaseModel):
    """The metrics of one (use case, algorithm) run together with its provenance."""
    use_case: UseCase
    algorithm: Algorithm
    profile: RecommendationProfile
    split: SplitConfig
    strategy: HoldoutStrategy
    statistics: StoreStatistics  # of the store the use case reads
    metrics: MetricReport


def _kind_pairs(use_case: UseCase) -> List[Tuple[EntityKind, EntityKind]]:
    return [(use_case.target_kind, use_case.candidate_kind), (use_case.candidate_kind, use_case.target_kind)]


def _pair_of(use_case: UseCase, source: EntityRef, target: EntityRef) -> Optional[Pair]:
    """Orients an interaction as (target, candidate) of the use case, if it is one."""
    if (source.kind, target.kind) == (use_case.target_kind, use_case.candidate_kind):
        return (source, target)
    if (source.kind, target.kind) == (use_case.candidate_kind, use_case.target_kind):
        return (target, source)
    return None


def resolve_strategy(store: InteractionStore, use_case: UseCase, strategy: HoldoutStrategy) -> HoldoutStrategy:
    """AUTO becomes MOST_RECENT if every interaction of the use case is timestamped, else SEEDED_RANDOM."""
    if strategy != HoldoutStrategy.AUTO:
        return strategy
    if store.has_timestamps(_kind_pairs(use_case)):
        return HoldoutStrategy.MOST_RECENT
    return HoldoutStrategy.SEEDED_RANDOM


def _latest_timestamps(store: InteractionStore, use_case: UseCase) -> Dict[Pair, Optional[int]]:
    latest: Dict[Pair, Optional[int]] = {}
    for i in store:
        pair = _pair_of(use_case, i.source, i.target)
        if pair is None:
            continue
        previous = latest.get(pair)
        if i.timestamp is not None and (previous is None or i.timestamp > previous):
            latest[pair] = i.timestamp
        else:
            latest.setdefault(pair, previous)
    return latest


def split(store: InteractionStore, use_case: UseCase, config: SplitConfig,
          relevant: Optional[InteractionStore] = None) -> SplitResult:
    """Withholds config.holdout distinct candidates of every target with at least
    config.min_interactions distinct candidates.

    MOST_RECENT withholds the candidates the target interacted with last
    (undated interactions count as oldest, ties by id). SEEDED_RANDOM draws
    uniformly without replacement from one generator seeded with config.seed,
    visiting targets in id order. Every interaction between an evaluated target
    and one of its withheld candidates is removed from the training store; all
    other interactions are kept.

    Args:
        store (InteractionStore): The raw store
        use_case (UseCase): The use case
        config (SplitConfig): The split parameters
        relevant (Optional[InteractionStore], optional): relevant_store(store, use_case), if already computed.

    Returns:
        SplitResult: The frozen training store and the test set of every evaluated target
    """
    source = relevant if relevant is not None else relevant_store(store, use_case)
    strategy = resolve_strategy(source, use_case, config.strategy)

    eligible: List[Tuple[EntityRef, List[EntityRef]]] = []
    for target in source.entities(use_case.target_kind):
        candidates = sorted(source.linked(target, use_case.candidate_kind))
        if len(candidates) >= config.min_interactions:
            eligible.append((target, candidates))

    test_sets: Dict[EntityRef, FrozenSet[EntityRef]] = {}
    if strategy == HoldoutStrategy.MOST_RECENT:
        latest = _latest_timestamps(source, use_case)
        for target, candidates in eligible:
            def recency(candidate: EntityRef, target: EntityRef = target) -> Tuple[int, int, str]:
                ts = latest.get((target, candidate))
                return (0, -ts, candidate.id) if ts is not None else (1, 0, candidate.id)
            test_sets[target] = frozenset(sorted(candidates, key=recency)[:config.holdout])
    else:
        rng = np.random.default_rng(config.seed)
        for target, candidates in eligible:
            chosen = rng.choice(len(candidates), size=config.holdout, replace=False)
            test_sets[target] = frozenset(candidates[int(n)] for n in chosen)

    withheld: Set[Pair] = {(t, c) for t, test in test_sets.items() for c in test}
    train = InteractionStore(i for i in source if _pair_of(use_case, i.source, i.target) not in withheld)
    logger.info('%s: %d of %d targets evaluated (%s holdout)', use_case.value, len(test_sets),
                len(source.entities(use_case.target_kind)), strategy.value)
    return SplitResult(train.freeze(), test_sets, strategy)


def run_evaluation(store: InteractionStore, use_case: UseCase, profile: RecommendationProfile,
                   config: SplitConfig, ks: KSettings = KSettings(), workers: int = 1,
                   relevant: Optional[InteractionStore] = None,
                   split_result: Optional[SplitResult] = None) -> EvaluationReport:
    """Splits, recommends for every evaluated target from the training store,
    scores the list against the target's test set and aggregates.

    For UC3/UC4 the dataset/service projection is computed from the full raw
    store, and the projected links are then split.

    Args:
        store (InteractionStore): The raw store
        use_case (UseCase): The use case
        profile (RecommendationProfile): The algorithm and its parameters
        config (SplitConfig): The split parameters
        ks (KSettings, optional): The metric cut-offs. Defaults to KSettings().
        workers (int, optional): Threads used to recommend; results do not depend on it. Defaults to 1.
        relevant (Optional[InteractionStore], optional): relevant_store(store, use_case), if already computed.
        split_result (Optional[SplitResult], optional): A split to reuse (e.g. across algorithms).

    Returns:
        EvaluationReport: The metrics (n_cases = 0 and undefined values if no target qualifies)
    """
    source = relevant if relevant is not None else relevant_store(store, use_case)
    result = split_result if split_result is not None else split(store, use_case, config, relevant=source)
    train = result.train_store
    targets = list(result.test_sets)

    def make_case(target: EntityRef) -> EvaluationCase:
        ranked = recommend(train, use_case, target, profile)
        return EvaluationCase(ranked.entities, result.test_sets[target])

    # Executor.map yields in input order regardless of completion order
    if workers > 1 and len(targets) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cases = list(pool.map(make_case, targets))
    else:
        cases = [make_case(t) for t in targets]

    metrics = aggregate(cases, ks)
    if not metrics.defined:
        logger.warning('%s/%s: no target has at least %d distinct candidates; metrics are undefined',
                       use_case.value, profile.algorithm.value, config.min_interactions)
    return EvaluationReport(use_case=use_case, algorithm=profile.algorithm, profile=profile, split=config,
                            strategy=result.strategy, statistics=compute_statistics(source), metrics=metrics)


def evaluate_all(store: InteractionStore, use_cases: Iterable[UseCase],
                 profiles: Iterable[RecommendationProfile], config: SplitConfig,
                 ks: KSettings = KSettings(), workers: int = 1) -> List[EvaluationReport]:
    """Runs every (use case, profile) pair. The projection is computed once and
    every algorithm of a use case is evaluated on the same split.
    The store is frozen.

    Args:
        store (InteractionStore): The raw store
        use_cases (Iterable[UseCase]): The use cases, in report order
        profiles (Iterable[RecommendationProfile]): One profile per algorithm, in report order
        config (SplitConfig): The split parameters
        ks (KSettings, optional): The metric cut-offs. Defaults to KSettings().
        workers (int, optional): Threads used to recommend. Defaults to 1.

    Returns:
        List[EvaluationReport]: One report per pair, use case major
    """
    profiles_ = list(profiles)
    store.freeze()
    # UC1/UC2 share the raw store, UC3/UC4 share one projection
    sources: Dict[bool, InteractionStore] = {}
    reports: List[EvaluationReport] = []
    for use_case in use_cases:
        if use_case.projected not in sources:
            sources[use_case.projected] = relevant_store(store, use_case)
        source = sources[use_case.projected]
        result = split(store, use_case, config, relevant=source)
        for profile in profiles_:
            reports.append(run_evaluation(store, use_case, profile, config, ks, workers,
                                          relevant=source, split_result=result))
    return reports
