import numpy as np
import pytest

from src.main import app
from src.services.estimators import sample_truncated_normal


@pytest.fixture
def client():
    app.config['TESTING'] = True
    with app.test_client() as client:
        yield client


def test_health(client):
    response = client.get('/api/health')
    assert response.status_code == 200
    assert response.get_json()['status'] == 'healthy'


# /api/privacy

def test_privacy_conversion(client):
    response = client.post('/api/privacy', json={'mu': 0.5, 'delta': 0.002, 'n': 1000, 'B': 100})
    assert response.status_code == 200
    data = response.get_json()['data']
    assert data['epsilon'] == pytest.approx(1.234, abs=0.002)
    assert data['m'] == 10


def test_privacy_rejects_bad_requests(client):
    assert client.post('/api/privacy', data='mu=0.5').status_code == 400
    assert client.post('/api/privacy', json={}).status_code == 400
    response = client.post('/api/privacy', json={'mu': 0.5, 'sigma': 2})
    assert response.status_code == 400
    assert 'sigma' in response.get_json()['error']
    assert client.post('/api/privacy', json={'mu': 0.5, 'delta': 0.9}).status_code == 400


# /api/tradeoff

def test_tradeoff_curve(client):
    response = client.post('/api/tradeoff', json={'curve': 'gaussian:0.5', 'points': 5})
    assert response.status_code == 200
    data = response.get_json()['data']
    assert len(data['f_alpha']) == 5
    assert data['f_alpha'][0] == pytest.approx(1.0)
    assert data['functionals']['kl'] == pytest.approx(0.125)


def test_tradeoff_bootstrap_curve(client):
    response = client.post('/api/tradeoff', json={'curve': 'bootstrap:10,1000,0.5'})
    assert response.status_code == 200
    data = response.get_json()['data']
    assert data['kind'] == 'grid' and len(data['alpha']) == 11


def test_tradeoff_rejects_bad_requests(client):
    assert client.post('/api/tradeoff', json={}).status_code == 400
    assert client.post('/api/tradeoff', json={'curve': 'gaussian:0.5', 'points': 1}).status_code == 400
    assert client.post('/api/tradeoff', json={'curve': 'uniform:2'}).status_code == 400


# /api/ci

def test_mean_interval(client):
    values = sample_truncated_normal(-5.0, 5.0, 300, np.random.default_rng(0)).records[:, 0]
    body = {'data': values.tolist(), 'lower': -5, 'upper': 5, 'B': 100, 'mu': 1.0, 'seed': 4}
    response = client.post('/api/ci', json=body)
    assert response.status_code == 200
    data = response.get_json()['data']
    assert data['n'] == 300 and data['estimator'] == 'bounded_mean'
    assert data['interval']['lower'][0] <= data['interval']['upper'][0]
    assert client.post('/api/ci', json=body).get_json()['data'] == data


def test_logistic_interval(client):
    rng = np.random.default_rng(1)
    records = np.column_stack([np.ones(200), rng.uniform(size=200)]) / np.sqrt(2)
    labels = rng.choice([-1.0, 1.0], size=200)
    body = {'data': records.tolist(), 'labels': labels.tolist(), 'estimator': 'logistic', 'B': 20, 'mu': 1.0}
    response = client.post('/api/ci', json=body)
    assert response.status_code == 200
    assert len(response.get_json()['data']['interval']['lower']) == 2


def test_interval_rejects_bad_requests(client):
    values = [0.1, -0.2, 0.3, 0.0]
    assert client.post('/api/ci', json={'data': values, 'mu': 1.0}).status_code == 400
    assert client.post('/api/ci', json={'data': values, 'B': 10, 'mu': 1.0}).status_code == 400
    assert client.post('/api/ci', json={'data': values, 'B': 10, 'mu': 1.0, 'lower': -1, 'upper': 1,
                                        'method': 'jackknife'}).status_code == 400
    assert client.post('/api/ci', json={'data': values, 'B': 10, 'mu': 1.0, 'lower': 0, 'upper': 1}).status_code == 400
