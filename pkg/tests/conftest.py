import numpy as np
import pytest
from hypothesis import settings

from rechip import kernels

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # JIT-compile (or no-op) every kernel so timed tests measure steady state
    kernels.warmup()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_unitary(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def assert_equal_up_to_phase(got, expect, atol=1e-9):
    # align against expect's own pivot so magnitude ties cannot flip the choice
    got = np.asarray(got, dtype=complex)
    expect = np.asarray(expect, dtype=complex)
    k = np.unravel_index(np.argmax(np.abs(expect)), expect.shape)
    rotated = got * np.exp(1j * (np.angle(expect[k]) - np.angle(got[k])))
    assert np.max(np.abs(rotated - expect)) < atol
