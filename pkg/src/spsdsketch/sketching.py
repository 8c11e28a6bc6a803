"""Construction of the four randomized sketching operators.

A sketching matrix is an ``n x ell`` operator that either samples columns
(uniform or leverage-based Nystrom sampling, stored in compressed
index-plus-scale form) or mixes them (dense Gaussian or subsampled
randomized Fourier transform).  Construction is deterministic given
``(method, n, ell, seed, replacement)``.
"""

from dataclasses import dataclass

import numpy as np

from ._rng import generator

__all__ = [
    "SketchMatrix",
    "SamplingDistribution",
    "uniform_sketch",
    "leverage_sketch",
    "gaussian_sketch",
    "srft_sketch",
    "dct_matrix",
]

SKETCH_METHODS = ("uniform", "leverage", "gaussian", "srft")

# Zero approximate leverage scores are floored at this value over n before
# normalization so that sampled rescaling factors 1/sqrt(ell * p_j) stay
# finite.
SCORE_FLOOR = 1e-12


@dataclass(frozen=True)
class SketchMatrix:
    """An ``n x ell`` sketching operator with provenance metadata.

    Sampling sketches (``uniform``, ``leverage``) are stored as per-column
    ``indices`` and ``scales``: column ``t`` equals ``scales[t] * e_{indices[t]}``.
    Projection sketches (``gaussian``, ``srft``) store a dense array.
    """

    n: int
    ell: int
    method: str
    seed: int
    replacement: bool = None
    indices: np.ndarray = None
    scales: np.ndarray = None
    _dense: np.ndarray = None

    def __post_init__(self):
        if self.method not in SKETCH_METHODS:
            raise ValueError(f"unknown sketch method {self.method!r}")
        for name in ("indices", "scales", "_dense"):
            a = getattr(self, name)
            if a is not None:
                a.setflags(write=False)

    @property
    def is_sampling(self):
        return self.indices is not None

    def dense(self):
        """Materialize the operator as a dense ``(n, ell)`` array."""
        if self._dense is not None:
            return self._dense
        s = np.zeros((self.n, self.ell))
        s[self.indices, np.arange(self.ell)] = self.scales
        return s

    def apply(self, m):
        """Return ``M @ S`` for ``M`` with ``n`` columns.

        Costs O(rows * ell) for sampling sketches (column selection), a
        dense multiply otherwise.
        """
        m = np.asarray(m)
        if m.shape[-1] != self.n:
            raise ValueError(f"operand has {m.shape[-1]} columns, expected {self.n}")
        if self.is_sampling:
            return m[..., self.indices] * self.scales
        return m @ self._dense

    def apply_transpose(self, m):
        """Return ``S.T @ M`` for ``M`` with ``n`` rows."""
        m = np.asarray(m)
        if m.shape[0] != self.n:
            raise ValueError(f"operand has {m.shape[0]} rows, expected {self.n}")
        if self.is_sampling:
            if m.ndim == 1:
                return m[self.indices] * self.scales
            return m[self.indices, :] * self.scales[:, None]
        return self._dense.T @ m


@dataclass(frozen=True)
class SamplingDistribution:
    """A probability distribution over columns with a quality factor ``beta``.

    ``beta`` in ``(0, 1]`` declares that ``p_j >= (beta / k) * lev_j`` for
    the leverage profile the distribution was built from; ``beta = 1``
    for exact leverage probabilities.
    """

    p: np.ndarray
    beta: float = 1.0

    def __post_init__(self):
        p = np.ascontiguousarray(self.p, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("p must be a nonempty vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and nonnegative")
        total = float(p.sum())
        if total <= 0.0:
            raise ValueError("all-zero sampling distribution")
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n(self):
        return self.p.shape[0]

    @classmethod
    def from_leverage(cls, profile, beta=1.0):
        """Exact leverage probabilities ``p_j = lev_j / k``."""
        p = profile.scores / float(profile.k)
        return cls(p=p / p.sum(), beta=beta)

    @classmethod
    def from_scores(cls, scores, beta=1.0, floor=None):
        """Normalize arbitrary nonnegative scores, flooring zeros.

        The floor (default ``1e-12 / n``) keeps every rescaling factor
        finite even when an approximation algorithm returns hard zeros.
        """
        scores = np.asarray(scores, dtype=np.float64)
        if floor is None:
            floor = SCORE_FLOOR / scores.size
        p = np.maximum(scores, floor)
        return cls(p=p / p.sum(), beta=beta)

    def certify_beta(self, profile):
        """Largest ``beta`` such that ``p_j >= (beta / k) * lev_j`` holds."""
        lev = profile.scores
        mask = lev > 0
        if not np.any(mask):
            return 1.0
        return float(min(1.0, np.min(profile.k * self.p[mask] / lev[mask])))


def uniform_sketch(n, ell, replacement=False, seed=0):
    """Sample ``ell`` columns uniformly at random.

    Without replacement the sketch is the first ``ell`` columns of a
    uniformly random permutation matrix; with replacement each column is
    an independent uniformly chosen standard basis vector.  No rescaling
    is applied.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    if not replacement and ell > n:
        raise ValueError(f"cannot sample {ell} distinct columns from {n}")
    rng = generator(seed)
    if replacement:
        idx = rng.integers(0, n, size=ell)
    else:
        idx = rng.permutation(n)[:ell]
    return SketchMatrix(
        n=n,
        ell=ell,
        method="uniform",
        seed=int(seed),
        replacement=bool(replacement),
        indices=idx.astype(np.int64),
        scales=np.ones(ell),
    )


def leverage_sketch(dist, ell, seed=0):
    """Sample ``ell`` columns with replacement from ``dist``, rescaled.

    Column ``t`` selects index ``i_t ~ dist`` and carries the value
    ``1 / sqrt(ell * p_{i_t})``, which makes ``E[S S.T] = I``.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    rng = generator(seed)
    idx = rng.choice(dist.n, size=ell, replace=True, p=dist.p)
    scales = 1.0 / np.sqrt(ell * dist.p[idx])
    return SketchMatrix(
        n=dist.n,
        ell=ell,
        method="leverage",
        seed=int(seed),
        replacement=True,
        indices=idx.astype(np.int64),
        scales=scales,
    )


def gaussian_sketch(n, ell, seed=0):
    """Dense ``n x ell`` matrix of i.i.d. standard normal entries."""
    if ell < 1:
        raise ValueError("ell must be at least 1")
    rng = generator(seed)
    return SketchMatrix(
        n=n,
        ell=ell,
        method="gaussian",
        seed=int(seed),
        _dense=rng.standard_normal((n, ell)),
    )


def dct_matrix(n):
    """Orthonormal type-II discrete cosine transform matrix of size ``n``.

    A real, unitary, highly incoherent trigonometric transform used as the
    mixing stage of the SRFT.  ``T[i, j] = c_i cos(pi (2j + 1) i / (2n))``
    with ``c_0 = sqrt(1/n)`` and ``c_i = sqrt(2/n)`` otherwise.
    """
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    t = np.cos(np.pi * (2 * j + 1) * i / (2 * n))
    t[0, :] *= np.sqrt(1.0 / n)
    t[1:, :] *= np.sqrt(2.0 / n)
    return t


def _dct_columns(n, cols):
    """Selected columns of :func:`dct_matrix` without forming the full matrix."""
    i = np.arange(n)[:, None]
    j = np.asarray(cols)[None, :]
    t = np.cos(np.pi * (2 * j + 1) * i / (2 * n))
    t[0, :] *= np.sqrt(1.0 / n)
    t[1:, :] *= np.sqrt(2.0 / n)
    return t


def srft_sketch(n, ell, seed=0):
    """Subsampled randomized Fourier transform sketch.

    ``S = sqrt(n / ell) * D T R`` where ``D`` is diagonal with Rademacher
    entries, ``T`` is the orthonormal DCT-II transform, and ``R`` restricts
    to ``ell`` uniformly chosen distinct columns.  Draw order: signs first,
    then columns.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    if ell > n:
        raise ValueError(f"cannot subsample {ell} columns from a size-{n} transform")
    rng = generator(seed)
    signs = rng.integers(0, 2, size=n) * 2.0 - 1.0
    cols = rng.permutation(n)[:ell]
    dense = np.sqrt(n / ell) * (signs[:, None] * _dct_columns(n, cols))
    return SketchMatrix(
        n=n,
        ell=ell,
        method="srft",
        seed=int(seed),
        _dense=dense,
    )
