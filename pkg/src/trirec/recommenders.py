"""Most-popular and collaborative-filtering recommendation for the four use cases."""
import logging
import math
from typing import AbstractSet, Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .store import InteractionStore
from .trirec_types import Algorithm, EntityRef, RankedEntry, RankedList, SimilarityMeasure, UseCase

logger = logging.getLogger(__name__)


class InvalidTargetError(ValueError):
    pass


class RecommendationProfile(BaseModel):
    """The parameter bundle governing one algorithm. filter_seen defaults to
    True for CF and False for MP (MP gives every entity the same list)."""
    model_config = ConfigDict(frozen=True, extra='forbid')

    algorithm: Algorithm
    k: int = Field(default=10, ge=1)
    neighborhood_size: int = Field(default=20, ge=1)
    similarity: SimilarityMeasure = SimilarityMeasure.COSINE
    filter_seen: bool = False

    @model_validator(mode='before')
    @classmethod
    def default_filter_seen(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get('filter_seen') is None and 'algorithm' in data:
            try:
                data = {**data, 'filter_seen': Algorithm(data['algorithm']) == Algorithm.CF}
            except ValueError:
                pass  # let field validation report the bad algorithm
        return data

    def updated(self, changes: Dict[str, Any]) -> 'RecommendationProfile':
        """Returns a new, re-validated profile with the given fields overwritten."""
        return RecommendationProfile.model_validate({**self.model_dump(), **changes})


def default_profiles() -> Dict[Algorithm, RecommendationProfile]:
    return {algo: RecommendationProfile(algorithm=algo) for algo in Algorithm}


def similarity(a: AbstractSet[Any], b: AbstractSet[Any], measure: SimilarityMeasure) -> float:
    """Similarity of two binary interaction vectors, given as sets.

    Args:
        a (AbstractSet[Any]): The entities the first entity interacted with
        b (AbstractSet[Any]): The entities the second entity interacted with
        measure (SimilarityMeasure): cosine |a & b| / sqrt(|a| |b|) or jaccard (overlap over union)

    Returns:
        float: The similarity in [0, 1]; 0 if either set is empty
    """
    if not a or not b:
        return 0.0
    overlap = len(a & b)
    if measure == SimilarityMeasure.COSINE:
        return overlap / math.sqrt(len(a) * len(b))
    return overlap / len(a | b)


def _rank(scores: Dict[EntityRef, float], popularity: Dict[EntityRef, int], k: int) -> List[RankedEntry]:
    # Total order: score desc, popularity desc, id asc
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], -popularity.get(kv[0], 0), kv[0].id))
    return [RankedEntry(entity, float(score)) for entity, score in ordered[:k]]


def recommend_mp(store: InteractionStore, use_case: UseCase, profile: RecommendationProfile) -> RankedList:
    """Ranks every candidate by its number of interactions with entities of the
    use case's target kind. The list does not depend on the target entity.

    Args:
        store (InteractionStore): The store the use case reads (see store.relevant_store)
        use_case (UseCase): The use case
        profile (RecommendationProfile): Only profile.k is used

    Returns:
        RankedList: At most k candidates, scored by their interaction counts
    """
    counts = store.popularity_counts(use_case.candidate_kind, use_case.target_kind)
    scores = {entity: float(n) for entity, n in counts.items()}
    return RankedList(tuple(_rank(scores, counts, profile.k)))


def _neighbor_similarities(matrix: Any, row: int, measure: SimilarityMeasure) -> np.ndarray:
    target_vec = matrix[row]
    overlap = np.asarray((matrix @ target_vec.T).todense()).ravel()
    sizes = np.asarray(matrix.sum(axis=1)).ravel()
    size_t = sizes[row]
    if measure == SimilarityMeasure.COSINE:
        sims = overlap / np.sqrt(size_t * sizes)
    else:
        sims = overlap / (size_t + sizes - overlap)
    sims[row] = 0.0
    return sims


def recommend_cf(store: InteractionStore, use_case: UseCase, target: EntityRef,
                 profile: RecommendationProfile) -> RankedList:
    """Neighborhood collaborative filtering over binary interaction vectors.

    The target's neighbors are the (at most neighborhood_size) most similar
    other entities of the target kind, with similarity > 0. Each candidate is
    scored by the sum of the similarities of the neighbors linked to it. For
    UC1/UC2 these are user-user similarities; for UC3 service-service
    similarities via shared datasets, and for UC4 dataset-dataset similarities
    via shared services.

    Args:
        store (InteractionStore): The store the use case reads (see store.relevant_store)
        use_case (UseCase): The use case
        target (EntityRef): The entity to recommend for
        profile (RecommendationProfile): k, neighborhood_size, similarity and filter_seen

    Raises:
        InvalidTargetError: If target is not of the use case's target kind.

    Returns:
        RankedList: At most k candidates. If the target has no interactions,\n
        the MP list is returned with fallback=True.
    """
    if target.kind != use_case.target_kind:
        raise InvalidTargetError(f'{use_case.value} recommends for {use_case.target_kind.value} entities, '
                                 f'got {target}')
    links = store.link_matrix(use_case.target_kind, use_case.candidate_kind)
    if target not in links.row_index:
        logger.debug('Cold-start target %s; falling back to MP', target)
        return RankedList(recommend_mp(store, use_case, profile).entries, fallback=True)

    matrix = links.matrix
    row = links.row_index[target]
    sims = _neighbor_similarities(matrix, row, profile.similarity)

    candidates = np.flatnonzero(sims > 0)
    order = sorted(candidates, key=lambda n: (-sims[n], links.rows[n].id))
    neighbors = np.asarray(order[:profile.neighborhood_size], dtype=np.int64)
    if neighbors.size == 0:
        return RankedList(())

    totals = np.asarray(matrix[neighbors].T @ sims[neighbors]).ravel()
    seen = set(matrix[row].indices) if profile.filter_seen else set()
    scores = {links.cols[c]: float(totals[c]) for c in np.flatnonzero(totals > 0) if c not in seen}
    popularity = store.popularity_counts(use_case.candidate_kind, use_case.target_kind)
    return RankedList(tuple(_rank(scores, popularity, profile.k)))


def recommend(store: InteractionStore, use_case: UseCase, target: Optional[EntityRef],
              profile: RecommendationProfile) -> RankedList:
    """Dispatches on profile.algorithm.

    MP ignores the target unless profile.filter_seen is set, in which case the
    target's seen candidates are dropped before truncating to k.

    Args:
        store (InteractionStore): The store the use case reads (see store.relevant_store)
        use_case (UseCase): The use case
        target (Optional[EntityRef]): The entity to recommend for (may be None for plain MP)
        profile (RecommendationProfile): The recommendation profile

    Returns:
        RankedList: The recommendations
    """
    if profile.algorithm == Algorithm.CF:
        if target is None:
            raise InvalidTargetError('CF needs a target entity')
        return recommend_cf(store, use_case, target, profile)
    if profile.filter_seen and target is not None:
        seen = store.linked(target, use_case.candidate_kind)
        unbounded = recommend_mp(store, use_case, profile.updated({'k': len(seen) + profile.k}))
        kept = [entry for entry in unbounded.entries if entry.entity not in seen]
        return RankedList(tuple(kept[:profile.k]))
    return recommend_mp(store, use_case, profile)
