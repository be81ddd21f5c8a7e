import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qagi_lab.qmath import validate_density

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_density(rng, d, rank=None, dims=None):
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return validate_density(m / np.trace(m), dims)


def random_unit(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_kraus(rng, d, n):
    """``n`` Kraus operators forming a CPTP map, from a random isometry."""
    v = np.linalg.qr(rng.normal(size=(d * n, d)) + 1j * rng.normal(size=(d * n, d)))[0]
    return [v[i * d:(i + 1) * d] for i in range(n)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
