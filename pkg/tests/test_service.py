import logging
from pathlib import Path
from typing import Optional

from fastapi.testclient import TestClient
import pytest

from trirec import service
from trirec.ingestion import load_canonical
from trirec.input_output import load_settings
from trirec.service import ServiceState, create_app
from trirec.store import InteractionStore
from trirec.utils import NoStatsAccessFilter, logging_filters

from .test_setup import D, S, U, hub_store, make_store


def client_for(store: InteractionStore, snapshot: Optional[Path] = None) -> TestClient:
    return TestClient(create_app(ServiceState(store, load_settings(), snapshot)))


def small_store() -> InteractionStore:
    return make_store([(U('u1'), S('s1')), (U('u2'), S('s1')), (U('u2'), S('s2')), (U('u3'), S('s3')),
                       (U('u3'), S('s2')), (U('u4'), S('s1')), (U('u1'), D('d1'))])


@pytest.mark.fast
def test_recommend_scores_are_sorted() -> None:
    client = client_for(hub_store())
    response = client.get('/recommend/uc3/s01', params={'algo': 'cf', 'k': 5})
    assert response.status_code == 200
    body = response.json()
    assert body['use_case'] == 'uc3' and body['algorithm'] == 'cf' and not body['fallback']
    scores = [item['score'] for item in body['items']]
    assert 0 < len(scores) <= 5
    assert scores == sorted(scores, reverse=True)


@pytest.mark.fast
def test_mp_is_the_same_for_every_target() -> None:
    client = client_for(small_store())
    lists = [client.get(f'/recommend/uc2/{user}').json()['items'] for user in ['u1', 'u2', 'u3']]
    assert lists[0] == lists[1] == lists[2]
    assert lists[0][0] == {'id': 's1', 'score': 3.0}


@pytest.mark.fast
def test_unknown_target_and_malformed_requests() -> None:
    client = client_for(small_store())
    assert client.get('/recommend/uc2/nobody').status_code == 404
    assert client.get('/recommend/uc9/u1').status_code == 400
    assert client.get('/recommend/uc2/u1', params={'k': 0}).status_code == 400
    assert client.get('/recommend/uc2/u1', params={'algo': 'svd'}).status_code == 400
    assert client.post('/interactions', json={'source_kind': 'dataset', 'source_id': 'd1',
                                              'target_kind': 'user', 'target_id': 'u1'}).status_code == 400
    assert client.post('/interactions', json={'source_kind': 'user'}).status_code == 400


@pytest.mark.fast
def test_profile_update_limits_length() -> None:
    client = client_for(hub_store())
    assert client.get('/profiles/mp').json()['k'] == 10
    response = client.put('/profiles/mp', json={'k': 3})
    assert response.status_code == 200
    assert response.json()['k'] == 3
    assert len(client.get('/recommend/uc3/s01').json()['items']) == 3
    assert client.put('/profiles/mp', json={'k': 0}).status_code == 400
    assert client.put('/profiles/cf', json={'alpha': 1}).status_code == 400
    assert client.get('/profiles/mp').json()['k'] == 3


@pytest.mark.fast
def test_posted_interaction_ends_the_cold_start() -> None:
    client = client_for(small_store())
    response = client.post('/interactions', json={'source_kind': 'user', 'source_id': 'u5',
                                                  'target_kind': 'service', 'target_id': 's3'})
    assert response.status_code == 201
    assert response.json() == {'generation': 1, 'interactions': 8}
    body = client.get('/recommend/uc2/u5', params={'algo': 'cf'}).json()
    assert not body['fallback']
    assert [item['id'] for item in body['items']] == ['s2']
    # a user with datasets only is known, but cold for services
    client.post('/interactions', json={'source_kind': 'user', 'source_id': 'u6',
                                       'target_kind': 'dataset', 'target_id': 'd1'})
    assert client.get('/recommend/uc2/u6', params={'algo': 'cf'}).json()['fallback'] is True


@pytest.mark.fast
def test_evaluate_and_stats() -> None:
    client = client_for(hub_store())
    response = client.post('/evaluate', params={'uc': 'uc3', 'algo': 'mp'}, json={})
    assert response.status_code == 200
    assert response.json()['n_cases'] == 5
    assert response.json()['p_at_1'] == pytest.approx(1.0)
    assert client.post('/evaluate', json={'min_interactions': 3, 'holdout': 3}).status_code == 400
    stats = client.get('/stats').json()
    assert stats['n_services'] == 25 and stats['n_datasets'] == 12


@pytest.mark.fast
def test_snapshot(tmp_path: Path) -> None:
    path = tmp_path / 'snapshot.csv'
    state = ServiceState(small_store(), load_settings(), path)
    assert not state.snapshot()
    TestClient(create_app(state)).post('/interactions', json={'source_kind': 'user', 'source_id': 'u9',
                                                              'target_kind': 'dataset', 'target_id': 'd1',
                                                              'timestamp': 7})
    assert state.snapshot()
    assert not state.snapshot()
    assert len(load_canonical(path)) == 8


@pytest.mark.fast
def test_stats_access_lines_are_filtered() -> None:
    logging_filters()
    logging_filters()
    record_args = ('127.0.0.1:5000', 'GET', '/stats', '1.1', 200)
    access = logging.getLogger('uvicorn.access')
    assert sum(isinstance(f, NoStatsAccessFilter) for f in access.filters) == 1
    record = logging.LogRecord('uvicorn.access', logging.INFO, __file__, 0, '%s - "%s %s HTTP/%s" %d',
                               record_args, None)
    assert not NoStatsAccessFilter().filter(record)
    record.args = ('127.0.0.1:5000', 'GET', '/recommend/uc1/u1', '1.1', 200)
    assert NoStatsAccessFilter().filter(record)


@pytest.mark.fast
def test_failed_snapshot_is_retried(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    path = tmp_path / 'snapshot.csv'
    state = ServiceState(small_store(), load_settings(), path)
    TestClient(create_app(state)).post('/interactions', json={'source_kind': 'user', 'source_id': 'u9',
                                                              'target_kind': 'dataset', 'target_id': 'd1'})

    def unwritable(store: InteractionStore, path: Path) -> None:
        raise OSError(f'cannot write {path}')

    with monkeypatch.context() as patch:
        patch.setattr(service, 'export_canonical', unwritable)
        with pytest.raises(OSError):
            state.snapshot()
    assert not path.exists()
    assert state.snapshot()
    assert len(load_canonical(path)) == 8


@pytest.mark.fast
def test_posted_dataset_service_link_keeps_the_projection() -> None:
    client = client_for(hub_store())
    response = client.post('/interactions', json={'source_kind': 'dataset', 'source_id': 'd99',
                                                  'target_kind': 'service', 'target_id': 's99'})
    assert response.status_code == 201
    ids = [item['id'] for item in client.get('/recommend/uc3/s01', params={'k': 20}).json()['items']]
    assert ids[0] == 'd00'
    assert len(ids) == 13 and 'd99' in ids
    assert client.get('/stats').json()['n_services'] == 26
