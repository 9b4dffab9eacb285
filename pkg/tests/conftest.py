import numpy as np
import pytest

from fairmax.data import Dataset


def central_diff(fn, theta, step=1e-5):
    """Coordinate-wise central finite differences of a scalar function."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = step
        out[k] = (fn(theta + e) - fn(theta - e)) / (2 * step)
    return out


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), np.linalg.norm(a), 1e-300)


def random_dataset(rng, n=8, d=5, balanced=True):
    X = rng.normal(size=(n, d))
    y = rng.integers(0, 2, size=n)
    z = rng.integers(0, 2, size=n)
    if balanced:
        z[: n // 2] = 1
        z[n // 2:] = 0
        rng.shuffle(z)
    return Dataset(X, y, z)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
