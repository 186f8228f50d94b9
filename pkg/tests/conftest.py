import numpy as np
import pytest

from qtransport.anneal import AnnealResult
from qtransport.config import Config
from qtransport.qubo import PseudoBooleanPolynomial, QuboModel


@pytest.fixture(autouse=True)
def log_dir(tmp_path, monkeypatch):
    path = tmp_path / 'logs'
    monkeypatch.setattr(Config, 'LOG_DIR', str(path))
    return path


def _random_qubo(rng, n, density=0.5, scale=5.0):
    linear = [(i, rng.uniform(-scale, scale)) for i in range(n)]
    quad = [(i, j, rng.uniform(-scale, scale)) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    return QuboModel.build(n, linear, quad, offset=rng.uniform(-scale, scale))


def _random_polynomial(rng, n, num_terms=20, max_degree=4, scale=5.0):
    terms = []
    for _ in range(num_terms):
        size = int(rng.integers(0, max_degree + 1))
        key = tuple(rng.choice(n, size=min(size, n), replace=False))
        terms.append((key, rng.uniform(-scale, scale)))
    return PseudoBooleanPolynomial.build(n, terms)


@pytest.fixture
def make_qubo():
    return _random_qubo


@pytest.fixture
def make_polynomial():
    return _random_polynomial


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


class NeverOptimal:
    """Solver stand-in that always reports the all-zero assignment."""

    name = 'never'

    def __call__(self, costfn, seed):
        bits = (0,) * costfn.num_vars
        return AnnealResult(bits, costfn.evaluate(bits), (), seed, 0.01)

    def describe(self, costfn):
        return {'name': self.name}


@pytest.fixture
def never_optimal():
    return NeverOptimal()
