import numpy as np
import pytest

from spinex.data import CLASSIFICATION, REGRESSION, Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_regression(n=40, d=3, seed=0, fn=None):
    """Small random regression dataset with a smooth default target."""
    gen = np.random.default_rng(seed)
    X = gen.random((n, d))
    if fn is None:
        fn = lambda X: X @ np.arange(1.0, d + 1) + 0.5 * X[:, 0] ** 2
    return Dataset(X, fn(X), [f"x{j}" for j in range(d)], REGRESSION)


def make_classification(n=40, d=3, seed=0, sep=2.0):
    """Two seeded Gaussian blobs with labels 0/1."""
    gen = np.random.default_rng(seed)
    y = gen.integers(0, 2, n)
    X = gen.standard_normal((n, d)) + sep * y[:, None]
    return Dataset(X, y, [f"x{j}" for j in range(d)], CLASSIFICATION)
