import pytest

from qtransport import create_app
from qtransport.config import Config

UNIT3 = [[0, 1, 1], [1, 0, 1], [1, 1, 0]]
EDGE = {'num_vars': 2, 'linear': [[0, -1.0], [1, -1.0]], 'quadratic': [[0, 1, 2.0]]}


@pytest.fixture
def client():
    app = create_app()
    app.config['TESTING'] = True
    return app.test_client()


def test_index(client):
    response = client.get('/')
    assert response.status_code == 200
    assert '/solve' in response.get_json()['endpoints']


def test_encode_then_solve_with_layout(client):
    response = client.post('/encode', json={'problem': {'distance': UNIT3}, 'encoding': 'one-hot'})
    assert response.status_code == 200
    encoded = response.get_json()
    assert encoded['resources']['num_vars'] == 9

    response = client.post('/solve', json={
        'model': encoded['model'],
        'layout': encoded['layout'],
        'solver': {'name': 'brute'},
    })
    assert response.status_code == 200
    solution = response.get_json()['solution']
    assert solution['decoded']['feasible']
    assert solution['decoded']['length'] == pytest.approx(3.0)


def test_encode_traffic_decodes_against_local_control(client):
    problem = {'rows': 1, 'cols': 2, 'q_ns': [5, 0], 'q_ew': [0, 5], 'G': 0.5}
    encoded = client.post('/encode', json={'problem': problem, 'encoding': 'traffic'}).get_json()
    assert encoded['layout']['problem']['G'] == 0.5
    solution = client.post('/solve', json={
        'model': encoded['model'], 'layout': encoded['layout'], 'solver': {'name': 'brute'},
    }).get_json()['solution']
    assert solution['decoded']['modes'] == [['NS', 'EW']]
    assert solution['decoded']['energy'] <= solution['decoded']['local_control']['energy']


def test_invalid_payload_is_422(client):
    response = client.post('/encode', json={'problem': {'distance': [[0, 1]]}, 'encoding': 'one-hot'})
    assert response.status_code == 422
    body = response.get_json()
    assert body['code'] == 'error'
    assert any('distance' in p for p in body['problems'])

    response = client.post('/solve', data='not json', content_type='application/json')
    assert response.status_code == 422


def test_unknown_encoding_is_422(client):
    response = client.post('/encode', json={'problem': {'distance': UNIT3}, 'encoding': 'gray'})
    assert response.status_code == 422


def test_tts_report(client, tmp_path):
    response = client.post('/tts', json={
        'model': EDGE, 'solver': {'name': 'brute'}, 'runs': 2, 'output': str(tmp_path / 'x.json'),
    })
    assert response.status_code == 200
    report = response.get_json()['report']
    assert report['p'] == 1.0
    assert not (tmp_path / 'x.json').exists()


def test_tts_uses_the_tour_oracle_for_layouts(client, monkeypatch):
    encoded = client.post('/encode', json={'problem': {'distance': UNIT3}, 'encoding': 'one-hot'}).get_json()
    monkeypatch.setattr(Config, 'BRUTE_FORCE_CAP', 4)
    response = client.post('/tts', json={
        'model': encoded['model'], 'layout': encoded['layout'],
        'solver': {'name': 'sa', 'sweeps': 100}, 'runs': 3,
    })
    assert response.status_code == 200
    assert response.get_json()['report']['optimal_energy'] == 3.0


def test_brute_force_cap_is_413(client, monkeypatch):
    monkeypatch.setattr(Config, 'BRUTE_FORCE_CAP', 1)
    response = client.post('/solve', json={'model': EDGE, 'solver': {'name': 'brute'}})
    assert response.status_code == 413


def test_resources(client):
    response = client.get('/resources?encoding=one-hot,binary&sizes=4')
    assert response.status_code == 200
    rows = response.get_json()['rows']
    assert [(r['encoding'], r['num_vars']) for r in rows] == [('one-hot', 16), ('binary', 8)]


def test_resources_bad_query_is_422(client):
    assert client.get('/resources?sizes=x').status_code == 422
    assert client.get('/resources?sizes=0').status_code == 422
