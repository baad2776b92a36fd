from collections import Counter

import numpy as np
import pytest
from scipy import stats

from trirec.ingestion import compute_statistics
from trirec.synthetic import generate_synthetic, power_law_weights
from trirec.trirec_types import EntityKind


@pytest.mark.fast
def test_entity_counts_are_exact() -> None:
    store = generate_synthetic(50, 7, 30, dataset_density=0.5, service_density=3.0, seed=1)
    statistics = compute_statistics(store)
    assert (statistics.n_users, statistics.n_datasets, statistics.n_services) == (50, 7, 30)
    assert statistics.n_user_dataset >= 25
    assert statistics.n_user_service >= 150
    assert statistics.n_dataset_service == 0
    assert store.frozen


@pytest.mark.fast
def test_same_seed_same_store() -> None:
    first = generate_synthetic(40, 5, 20, seed=3)
    second = generate_synthetic(40, 5, 20, seed=3)
    other = generate_synthetic(40, 5, 20, seed=4)
    assert list(first) == list(second)
    assert list(first) != list(other)


@pytest.mark.fast
def test_timestamps() -> None:
    assert all(i.timestamp is not None for i in generate_synthetic(10, 3, 3, seed=0))
    assert all(i.timestamp is None for i in generate_synthetic(10, 3, 3, seed=0, with_timestamps=False))


@pytest.mark.fast
@pytest.mark.parametrize('kwargs', [{'n_users': 0}, {'n_services': 0}, {'dataset_density': -1.0}, {'skew': -0.5}])
def test_invalid_arguments(kwargs: dict) -> None:
    arguments = {'n_users': 5, 'n_datasets': 5, 'n_services': 5, **kwargs}
    with pytest.raises(ValueError):
        generate_synthetic(**arguments)


@pytest.mark.fast
def test_power_law_weights() -> None:
    weights = power_law_weights(100, 1.0, np.random.default_rng(0))
    assert weights.sum() == pytest.approx(1.0)
    assert weights.max() / weights.min() == pytest.approx(100.0)
    assert np.allclose(power_law_weights(10, 0.0, np.random.default_rng(0)), 0.1)


@pytest.mark.slow
def test_zero_skew_is_uniform() -> None:
    store = generate_synthetic(2000, 20, 20, dataset_density=5.0, service_density=0.0, skew=0.0, seed=11)
    counts = Counter(i.target for i in store if i.target.kind == EntityKind.DATASET)
    _, pvalue = stats.chisquare([counts[d] for d in store.entities(EntityKind.DATASET)])
    assert pvalue > 0.001


@pytest.mark.slow
def test_skew_concentrates_popularity() -> None:
    store = generate_synthetic(2000, 50, 50, dataset_density=5.0, service_density=0.0, skew=1.5, seed=11)
    counts = sorted(Counter(i.target for i in store if i.target.kind == EntityKind.DATASET).values(), reverse=True)
    assert sum(counts[:5]) > sum(counts) / 2
