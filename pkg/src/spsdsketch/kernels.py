"""SPSD test-matrix constructions from point clouds and graphs.

Linear kernels, dense and compactly supported Gaussian RBF kernels,
normalized graph Laplacians, and the column-whitening preprocessing step.
All outputs pass :class:`~spsdsketch.core.SpsdMatrix` validation.
"""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .core import SpsdMatrix

__all__ = [
    "PointCloud",
    "Graph",
    "linear_kernel",
    "rbf_kernel",
    "sparse_rbf_kernel",
    "normalized_laplacian",
    "whiten",
]


@dataclass(frozen=True)
class PointCloud:
    """Rows of ``X`` are observations in d-dimensional feature space.

    ``constant_columns`` lists columns that were constant before
    whitening and are therefore all-zero afterwards.
    """

    X: np.ndarray
    feature_names: tuple = None
    constant_columns: tuple = ()

    def __post_init__(self):
        x = np.ascontiguousarray(self.X, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError(f"expected an (n, d) array, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("point cloud entries must be finite")
        if self.feature_names is not None and len(self.feature_names) != x.shape[1]:
            raise ValueError("feature_names length must match the column count")
        x.setflags(write=False)
        object.__setattr__(self, "X", x)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class Graph:
    """An undirected weighted graph without self-loops.

    Input edges are symmetrized by keeping ``max(w_ij, w_ji)`` and
    self-loops are dropped.
    """

    n: int
    edges: tuple = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        merged = {}
        for i, j, w in self.edges:
            i, j = int(i), int(j)
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) references a node outside 0..{self.n - 1}")
            if w < 0 or not math.isfinite(w):
                raise ValueError(f"edge ({i}, {j}) has invalid weight {w!r}")
            if i == j:
                continue
            key = (min(i, j), max(i, j))
            merged[key] = max(merged.get(key, 0.0), float(w))
        object.__setattr__(
            self, "edges", tuple(sorted((i, j, w) for (i, j), w in merged.items()))
        )

    def adjacency(self):
        w = np.zeros((self.n, self.n))
        for i, j, weight in self.edges:
            w[i, j] = weight
            w[j, i] = weight
        return w


def _squared_distances(x):
    # Guarded expansion ||a||^2 + ||b||^2 - 2<a, b>, clamped at zero so
    # round-off never produces negatives under the square root.
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    return np.maximum(d2, 0.0)


def linear_kernel(points):
    """Gram matrix of the Euclidean inner product, ``A = X X.T``."""
    return SpsdMatrix(points.X @ points.X.T)


def rbf_kernel(points, sigma):
    """Dense Gaussian kernel ``A_ij = exp(-||x_i - x_j||^2 / sigma^2)``.

    Entries lie in [0, 1] and the diagonal is identically one.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    a = np.exp(-_squared_distances(points.X) / sigma**2)
    np.fill_diagonal(a, 1.0)
    return SpsdMatrix(a)


def sparse_rbf_kernel(points, sigma, nu=None, cutoff=None):
    """Compactly supported Gaussian kernel.

    ``A_ij = max(0, 1 - ||x_i - x_j|| / C)^nu * exp(-||x_i - x_j||^2 /
    sigma^2)``, zero whenever the distance reaches the cutoff ``C``.
    Defaults: ``nu = ceil((d + 1) / 2)`` (the smallest order guaranteeing
    positive semi-definiteness) and ``C = 3 sigma``.  A smaller ``nu`` is
    accepted with a warning since PSD-ness is then not guaranteed.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    d = points.d
    if nu is None:
        nu = math.ceil((d + 1) / 2)
    if cutoff is None:
        cutoff = 3.0 * sigma
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if nu < (d + 1) / 2:
        warnings.warn(
            f"nu={nu} below (d + 1)/2 = {(d + 1) / 2}; positive "
            "semi-definiteness is not guaranteed",
            stacklevel=2,
        )
    dist = np.sqrt(_squared_distances(points.X))
    taper = np.maximum(0.0, 1.0 - dist / cutoff) ** nu
    a = taper * np.exp(-(dist**2) / sigma**2)
    np.fill_diagonal(a, 1.0)
    return SpsdMatrix(a, psd_tolerance=1e-8)


def normalized_laplacian(graph):
    """``A = I - D^{-1/2} W D^{-1/2}`` for the weighted degree matrix ``D``.

    Every node must have positive weighted degree; isolated nodes are
    rejected by name since the normalization is undefined for them.
    """
    w = graph.adjacency()
    degrees = w.sum(axis=1)
    isolated = np.nonzero(degrees <= 0)[0]
    if isolated.size:
        raise ValueError(
            f"node {int(isolated[0])} is isolated (zero weighted degree)"
        )
    inv_sqrt = 1.0 / np.sqrt(degrees)
    a = -w * inv_sqrt[:, None] * inv_sqrt[None, :]
    np.fill_diagonal(a, 1.0)
    return SpsdMatrix(a)


def whiten(points):
    """Center each column and rescale it to unit Euclidean norm.

    Constant columns have no scale to normalize; they become all-zero and
    are reported in ``constant_columns`` on the result.
    """
    x = points.X - points.X.mean(axis=0, keepdims=True)
    # Second centering pass removes the O(eps * scale) residual mean.
    x -= x.mean(axis=0, keepdims=True)
    norm = np.linalg.norm(x, axis=0)
    scale = np.max(np.abs(points.X), axis=0)
    constant = norm <= 1e-14 * np.maximum(scale, 1.0)
    safe = np.where(constant, 1.0, norm)
    x = np.where(constant, 0.0, x / safe)
    return PointCloud(
        X=x,
        feature_names=points.feature_names,
        constant_columns=tuple(int(i) for i in np.nonzero(constant)[0]),
    )
