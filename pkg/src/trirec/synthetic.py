"""Seeded synthetic tripartite stores with power-law popularity."""
import logging
from typing import List, Tuple

import numpy as np

from .store import InteractionStore
from .trirec_types import EntityKind, EntityRef, Interaction

logger = logging.getLogger(__name__)

# Interactions per user in the 2017-11-15 Meta Kaggle snapshot (2,962 / 6,108 and 18,593 / 6,108)
DEFAULT_DATASET_DENSITY = 0.5
DEFAULT_SERVICE_DENSITY = 3.0
DEFAULT_SKEW = 1.0

TIME_START = 1_500_000_000
TIME_SPAN = 365 * 24 * 3600


def _ids(prefix: str, n: int) -> List[str]:
    width = len(str(n - 1))
    return [f'{prefix}{i:0{width}d}' for i in range(n)]


def power_law_weights(n: int, exponent: float, rng: np.random.Generator) -> np.ndarray:
    """Normalized Zipf weights (rank + 1) ** -exponent, assigned to the n entities in a random order.

    Args:
        n (int): The number of entities
        exponent (float): The skew; 0 gives uniform weights
        rng (np.random.Generator): The generator used to shuffle the ranks

    Returns:
        np.ndarray: The weight of each entity, summing to 1
    """
    weights = (np.arange(n, dtype=np.float64) + 1.0) ** -exponent
    weights = weights[rng.permutation(n)]
    return weights / weights.sum()


def generate_synthetic(n_users: int, n_datasets: int, n_services: int,
                       dataset_density: float = DEFAULT_DATASET_DENSITY,
                       service_density: float = DEFAULT_SERVICE_DENSITY,
                       skew: float = DEFAULT_SKEW, seed: int = 0, activity_skew: float = 0.5,
                       with_timestamps: bool = True) -> InteractionStore:
    """Draws User -> Dataset and User -> Service interactions.

    Each kind receives round(density * n_users) interactions whose candidates
    follow a power law with the given exponent and whose users follow one with
    activity_skew. Afterwards every candidate and every user without an
    interaction receives one, so the entity counts are exactly as requested.
    The result is a pure function of the arguments.

    Args:
        n_users (int): The number of users (>= 1)
        n_datasets (int): The number of datasets (>= 1)
        n_services (int): The number of services (>= 1)
        dataset_density (float, optional): Mean user/dataset interactions per user.
        service_density (float, optional): Mean user/service interactions per user.
        skew (float, optional): The candidate popularity exponent (>= 0).
        seed (int, optional): The seed. Defaults to 0.
        activity_skew (float, optional): The user activity exponent (>= 0). Defaults to 0.5.
        with_timestamps (bool, optional): Draw epoch-second timestamps. Defaults to True.

    Raises:
        ValueError: If a count is < 1, or a density or exponent is negative.

    Returns:
        InteractionStore: The frozen store
    """
    for name, count in [('n_users', n_users), ('n_datasets', n_datasets), ('n_services', n_services)]:
        if count < 1:
            raise ValueError(f'{name} must be >= 1, got {count}')
    for name, value in [('dataset_density', dataset_density), ('service_density', service_density),
                        ('skew', skew), ('activity_skew', activity_skew)]:
        if not value >= 0:
            raise ValueError(f'{name} must be >= 0, got {value}')

    rng = np.random.default_rng(seed)
    users = [EntityRef(EntityKind.USER, i) for i in _ids('u', n_users)]
    activity = power_law_weights(n_users, activity_skew, rng)
    user_seen = np.zeros(n_users, dtype=bool)

    edges: List[Tuple[int, EntityRef]] = []  # (user index, candidate)
    for kind, prefix, n_candidates, density in [(EntityKind.DATASET, 'd', n_datasets, dataset_density),
                                                (EntityKind.SERVICE, 's', n_services, service_density)]:
        candidates = [EntityRef(kind, i) for i in _ids(prefix, n_candidates)]
        popularity = power_law_weights(n_candidates, skew, rng)
        n_draws = int(round(density * n_users))
        user_idx = rng.choice(n_users, size=n_draws, p=activity)
        cand_idx = rng.choice(n_candidates, size=n_draws, p=popularity)
        covered = np.zeros(n_candidates, dtype=bool)
        covered[cand_idx] = True
        for c in np.flatnonzero(~covered):
            user_idx = np.append(user_idx, rng.choice(n_users, p=activity))
            cand_idx = np.append(cand_idx, c)
        user_seen[user_idx] = True
        edges.extend((int(u), candidates[int(c)]) for u, c in zip(user_idx, cand_idx))

    # Users the draws missed interact once with a service (or a dataset if there are more of those)
    fallback_kind, fallback_prefix, fallback_n = ((EntityKind.SERVICE, 's', n_services) if n_services >= n_datasets
                                                  else (EntityKind.DATASET, 'd', n_datasets))
    fallback = [EntityRef(fallback_kind, i) for i in _ids(fallback_prefix, fallback_n)]
    for u in np.flatnonzero(~user_seen):
        edges.append((int(u), fallback[int(rng.integers(fallback_n))]))

    if with_timestamps:
        stamps = rng.integers(TIME_START, TIME_START + TIME_SPAN, size=len(edges))
        interactions = [Interaction(users[u], c, 1.0, int(t)) for (u, c), t in zip(edges, stamps)]
    else:
        interactions = [Interaction(users[u], c) for u, c in edges]

    store = InteractionStore(interactions).freeze()
    logger.info('Generated %d interactions (%d users, %d datasets, %d services, seed %d)',
                len(store), n_users, n_datasets, n_services, seed)
    return store
