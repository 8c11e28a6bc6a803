"""Fast randomized approximation of statistical leverage scores.

Four routes, all deterministic given a seed:

* :func:`approx_lev_tall` -- the tall-and-skinny algorithm: premultiply by
  an SRFT, QR the small product, postmultiply by the inverse triangular
  factor and a Johnson-Lindenstrauss stage, read scores off row norms.
* :func:`approx_lev_spectral` -- Gaussian range finder plus enough power
  iterations (chosen by a closed formula) to filter through the dominant
  rank-``k`` subspace, then the tall algorithm on the result.
* :func:`approx_lev_frob` -- the SRFT variant with a prespecified number
  of power iterations; returns the exact rank-``k`` leverage scores of
  the filtered matrix.
* :func:`approx_lev_power` -- subspace iteration with width ``k`` that
  stops when the scores move less than a tolerance in the infinity norm.

The accuracy of the filtered variants improves with the spectral gap at
rank ``k``; with no gap the rank-``k`` eigenspace itself is ill-posed.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg

from ._rng import generator, substream
from .core import eigendecompose, leverage_scores
from .sketching import srft_sketch

__all__ = [
    "ApproxLeverage",
    "exact_tall_leverage",
    "approx_lev_tall",
    "approx_lev_spectral",
    "approx_lev_frob",
    "approx_lev_power",
]

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class ApproxLeverage:
    """Approximate leverage scores plus provenance.

    ``fallback_exact`` is set when the sketch sizes demanded by the
    accuracy parameters exceed the matrix dimensions and the scores were
    computed exactly instead.  ``r_singular`` is set when the triangular
    factor was rank deficient and a rank-truncated solve was used.
    ``converged`` is meaningful for the ``power`` algorithm only.
    """

    scores: np.ndarray
    algorithm: str
    params: dict = field(default_factory=dict)
    iterations_used: int = 0
    converged: bool = True
    fallback_exact: bool = False
    r_singular: bool = False

    def __post_init__(self):
        scores = np.ascontiguousarray(self.scores, dtype=np.float64)
        if not np.all(np.isfinite(scores)) or np.any(scores < 0):
            raise ValueError("leverage scores must be finite and nonnegative")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    @property
    def n(self):
        return self.scores.shape[0]


def exact_tall_leverage(x):
    """Exact leverage scores of a rectangular matrix via its thin SVD."""
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(x.shape[0])
    rank = int(np.sum(s > max(x.shape) * _EPS * s[0]))
    u = u[:, :rank]
    return np.sum(u * u, axis=1)


def _r1_size(n, d, epsilon, delta):
    root = math.sqrt(d) + math.sqrt(math.log(n / delta))
    return math.ceil(math.log(d / delta) / epsilon**2 * root**2)


def _r2_size(n, epsilon, delta):
    return math.ceil((math.log(n) + math.log(1.0 / delta)) / epsilon**2)


def _truncated_triangular_postmultiply(x, r1x):
    """Compute ``X R^{-1}`` through a rank-truncated pivoted QR of ``r1x``.

    ``r1x`` is the row-compressed copy of ``X``; its pivoted QR gives the
    triangular factor whose inverse orthogonalizes the columns of ``X``.
    Diagonal entries below a relative floor mark numerically dependent
    columns, which are dropped rather than amplified.
    """
    n, d = x.shape
    _, r_tri, perm = scipy.linalg.qr(r1x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_tri))
    if diag.size == 0 or diag[0] == 0.0:
        return np.zeros((n, 1)), True
    rank = int(np.sum(diag > max(r1x.shape) * _EPS * diag[0]))
    singular = rank < d
    z = scipy.linalg.solve_triangular(
        r_tri[:rank, :rank].T, x[:, perm[:rank]].T, lower=True
    ).T
    return z, singular


def approx_lev_tall(x, epsilon=1.0, delta=0.1, seed=0):
    """Approximate the leverage scores of a tall matrix ``x`` (n > d).

    The SRFT stage uses ``r1 = ceil(eps^-2 ln(d/delta) (sqrt(d) +
    sqrt(ln(n/delta)))^2)`` rows (never fewer than ``d``) and the JL stage
    ``r2 = ceil(eps^-2 (ln n + ln(1/delta)))`` columns.  When ``r1 > n``
    the reduction cannot help and the scores are computed exactly instead
    (``fallback_exact``); when ``r2`` is at least the current width the JL
    stage is skipped, since it would not reduce work, making the row
    norms exact.
    """
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    if not n > d >= 1:
        raise ValueError(f"need n > d >= 1, got shape {x.shape}")
    if not (0.0 < epsilon and 0.0 < delta < 1.0):
        raise ValueError("epsilon must be positive and delta in (0, 1)")
    r1 = _r1_size(n, d, epsilon, delta)
    r2 = _r2_size(n, epsilon, delta)
    params = {"epsilon": epsilon, "delta": delta, "r1": r1, "r2": r2}
    if r1 > n:
        return ApproxLeverage(
            scores=exact_tall_leverage(x),
            algorithm="tall",
            params=params,
            fallback_exact=True,
        )
    r1 = max(r1, d)
    pi1 = srft_sketch(n, r1, seed=substream(seed, "tall-srft"))
    compressed = pi1.apply_transpose(x)
    z, singular = _truncated_triangular_postmultiply(x, compressed)
    width = z.shape[1]
    if r2 < width:
        rng = generator(substream(seed, "tall-jl"))
        pi2 = rng.standard_normal((width, r2)) / math.sqrt(r2)
        omega = z @ pi2
    else:
        omega = z
    return ApproxLeverage(
        scores=np.sum(omega * omega, axis=1),
        algorithm="tall",
        params=params,
        r_singular=singular,
    )


def _power_filter(multiply, y, iterations):
    """Apply ``iterations`` double multiplies with scalar renormalization.

    The scalar rescaling keeps entries in range without changing column
    spans, triangular-solve outputs, or leverage scores.
    """
    for _ in range(iterations):
        y = multiply(multiply(y, transpose=True))
        peak = np.max(np.abs(y))
        if peak > 0:
            y = y / peak
    return y


def spectral_iteration_count(n, d, k, epsilon):
    """Iteration count for the Gaussian rank-``k`` filter.

    ``ceil(ln(1 + sqrt(k/(k-1)) + e sqrt(2/k) sqrt(min(n,d) - k)) /
    (2 ln(1 + eps/10) - 1/2))``.  The denominator is positive only for
    sufficiently large ``epsilon``; below that threshold the formula has
    no valid value and an error is raised.
    """
    if k < 2:
        raise ValueError("the iteration-count formula needs k >= 2")
    den = 2.0 * math.log1p(epsilon / 10.0) - 0.5
    if den <= 0.0:
        raise ValueError(
            f"epsilon={epsilon!r} is too small for the iteration-count "
            "formula (nonpositive denominator); use approx_lev_frob for "
            "small epsilon"
        )
    num = math.log(
        1.0
        + math.sqrt(k / (k - 1.0))
        + math.e * math.sqrt(2.0 / k) * math.sqrt(min(n, d) - k)
    )
    return math.ceil(num / den)


def approx_lev_spectral(a, k, epsilon, delta=0.1, seed=0):
    """Leverage scores filtered through the dominant rank-``k`` subspace.

    Draws a Gaussian test matrix of width ``2k``, filters with
    ``(A A.T)^q A`` where ``q`` comes from
    :func:`spectral_iteration_count`, and runs the tall algorithm on the
    result.  The iteration-count formula only admits large ``epsilon``,
    while the tall stage's sketch sizes are calibrated for ``epsilon <=
    1``; the inner call therefore runs at ``min(epsilon, 1)``, which can
    only improve on the requested accuracy.
    """
    a = np.asarray(a, dtype=np.float64)
    n, d = a.shape
    if not 1 <= k <= min(n, d) / 2:
        raise ValueError(f"need 1 <= k <= min(n, d)/2, got k={k}")
    q = spectral_iteration_count(n, d, k, epsilon)
    rng = generator(substream(seed, "spectral-gaussian"))
    b = a @ rng.standard_normal((d, 2 * k))

    def multiply(y, transpose=False):
        return a.T @ y if transpose else a @ y

    b = _power_filter(multiply, b, q)
    inner = approx_lev_tall(
        b,
        epsilon=min(epsilon, 1.0),
        delta=delta,
        seed=substream(seed, "spectral-tall"),
    )
    return ApproxLeverage(
        scores=inner.scores,
        algorithm="spectral",
        params={"epsilon": epsilon, "delta": delta, "q": q,
                "r1": inner.params["r1"], "r2": inner.params["r2"]},
        iterations_used=q,
        fallback_exact=inner.fallback_exact,
        r_singular=inner.r_singular,
    )


def _frob_width(k, d, epsilon):
    root = math.sqrt(k) + math.sqrt(8.0 * math.log(k * d))
    return math.ceil(36.0 / epsilon**2 * root**2 * math.log(k))


def _exact_rank_k_scores(b, k):
    u, _, _ = np.linalg.svd(b, full_matrices=False)
    u = u[:, :k]
    return np.sum(u * u, axis=1)


def approx_lev_frob(A, k, q=0, epsilon=1.0, seed=0, r=None):
    """SRFT-filtered leverage scores of an SPSD matrix at rank ``k``.

    Forms ``B = A^{2q+1} Pi`` for an SRFT ``Pi`` of width ``r`` and
    returns the exact leverage scores of the best rank-``k`` subspace of
    ``B``.  ``q = 0`` gives the cheap Frobenius-flavor filter; larger
    ``q`` sharpens toward the true dominant eigenspace at the price of
    ``q`` extra double multiplies.

    ``r`` defaults to ``ceil(36 eps^-2 (sqrt(k) + sqrt(8 ln(k n)))^2
    ln k)``; passing a small explicit ``r`` (for instance ``2 k``)
    matches the cheap benchmark configuration.  When ``r > n`` the
    filtered problem is no smaller than the original, so the exact
    rank-``k`` scores are returned with ``fallback_exact`` set.
    """
    if q < 0:
        raise ValueError("q must be a nonnegative integer")
    n = A.n
    if not 2 <= k < n:
        raise ValueError(f"need 2 <= k < n, got k={k}")
    if r is None:
        r = _frob_width(k, n, epsilon)
    if r < k:
        raise ValueError(f"width r={r} is smaller than the target rank {k}")
    params = {"epsilon": epsilon, "q": q, "r": r}
    if r > n:
        profile = leverage_scores(eigendecompose(A, k))
        return ApproxLeverage(
            scores=profile.scores,
            algorithm="frob",
            params=params,
            iterations_used=q,
            fallback_exact=True,
        )
    pi = srft_sketch(n, r, seed=substream(seed, "frob-srft"))
    b = pi.apply(A.entries)

    def multiply(y, transpose=False):
        return A.entries @ y

    b = _power_filter(multiply, b, q)
    return ApproxLeverage(
        scores=_exact_rank_k_scores(b, k),
        algorithm="frob",
        params=params,
        iterations_used=q,
    )


def approx_lev_power(A, k, tol=1e-2, max_iters=50, seed=0, initial=None):
    """Convergence-monitored subspace iteration for leverage scores.

    Starts from ``A`` times a Gaussian matrix of width ``k`` (or a caller
    supplied ``initial`` basis), repeatedly applies ``A^2``, and after
    each application recomputes the leverage scores of the orthonormalized
    iterate, stopping when they move less than ``tol`` in the infinity
    norm.  ``converged`` is False when ``max_iters`` is exhausted first.
    """
    n = A.n
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if initial is None:
        rng = generator(substream(seed, "power-gaussian"))
        b = A.entries @ rng.standard_normal((n, k))
    else:
        b = np.array(initial, dtype=np.float64)
        if b.shape != (n, k):
            raise ValueError(f"initial basis must be {(n, k)}, got {b.shape}")
    prev = _orthonormal_row_norms(b)
    iterations = 0
    converged = False
    for _ in range(max_iters):
        b = A.entries @ (A.entries @ b)
        peak = np.max(np.abs(b))
        if peak > 0:
            b = b / peak
        iterations += 1
        scores = _orthonormal_row_norms(b)
        if np.max(np.abs(scores - prev)) < tol:
            converged = True
            prev = scores
            break
        prev = scores
    return ApproxLeverage(
        scores=prev,
        algorithm="power",
        params={"tol": tol, "max_iters": max_iters, "r": k},
        iterations_used=iterations,
        converged=converged,
    )


def _orthonormal_row_norms(b):
    q, _ = np.linalg.qr(b)
    return np.sum(q * q, axis=1)
