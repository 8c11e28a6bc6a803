"""Shared matrix factories for the test suite.

All factories are deterministic given a seed and return validated
SpsdMatrix instances.
"""

import numpy as np
import pytest

from spsdsketch import SpsdMatrix
from spsdsketch._rng import generator


def random_orthogonal(n, seed):
    rng = generator(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_spsd(n, seed, decay=0.85, floor=1e-4):
    """Dense SPSD matrix with a geometric spectrum, random eigenbasis."""
    lam = decay ** np.arange(n) + floor
    q = random_orthogonal(n, seed)
    return SpsdMatrix((q * lam) @ q.T)


def gap_spsd(n, k, ratio, seed):
    """Top-k eigenvalues equal to ``ratio``, the rest equal to one."""
    lam = np.ones(n)
    lam[:k] = ratio
    q = random_orthogonal(n, seed)
    return SpsdMatrix((q * lam) @ q.T)


def exact_rank_spsd(n, k, seed, lam=None):
    """Rank-k SPSD matrix with the given (or default) positive spectrum."""
    rng = generator(seed)
    u = np.linalg.qr(rng.standard_normal((n, k)))[0]
    if lam is None:
        lam = np.linspace(3.0, 1.0, k)
    return SpsdMatrix((u * lam) @ u.T)


@pytest.fixture
def small_spsd():
    return random_spsd(8, seed=123)
