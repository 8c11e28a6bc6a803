"""Dense SPSD matrices, partitioned eigendecompositions, and leverage scores.

Everything downstream works in terms of three objects defined here:

* :class:`SpsdMatrix` -- a validated dense symmetric positive semi-definite
  matrix (PSD up to a relative eigenvalue tolerance).
* :class:`EigenPartition` -- a full eigendecomposition split at a target
  rank ``k`` into dominant and residual blocks ``(U1, sigma1, U2, sigma2)``.
* :class:`LeverageProfile` -- the statistical leverage scores of the
  dominant rank-``k`` eigenspace, plus its coherence.

All values are immutable after construction and all operations are pure
functions, so concurrent use requires no synchronization.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg

__all__ = [
    "DecompositionError",
    "SpsdMatrix",
    "EigenPartition",
    "NormTriple",
    "LeverageProfile",
    "eigendecompose",
    "norms",
    "best_rank_k",
    "leverage_scores",
    "stable_rank",
    "sqrt_projection_oracle",
]

# Dense storage only; sparse inputs must be densified by the caller and this
# guard keeps accidental huge inputs from exhausting memory.
MAX_DENSE_DIM = 20000

DEFAULT_PSD_TOLERANCE = 1e-10


class DecompositionError(RuntimeError):
    """Raised when the underlying symmetric eigensolver fails to converge."""


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class SpsdMatrix:
    """A dense symmetric matrix that is PSD up to a relative tolerance.

    The input is symmetrized exactly on construction, ``(M + M.T) / 2``,
    and the smallest eigenvalue is required to satisfy
    ``lambda_min >= -psd_tolerance * lambda_max``.

    Parameters
    ----------
    entries : (n, n) array_like
        Square real matrix.  Symmetrized on construction.
    psd_tolerance : float, optional
        Relative eigenvalue floor.  Eigenvalues in
        ``[-psd_tolerance * lambda_max, 0]`` are treated as zero by
        consumers that take square roots.
    """

    __slots__ = ("entries", "psd_tolerance")

    def __init__(self, entries, psd_tolerance=DEFAULT_PSD_TOLERANCE):
        m = np.asarray(entries, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] == 0:
            raise ValueError("empty matrix")
        if m.shape[0] > MAX_DENSE_DIM:
            raise ValueError(
                f"dimension {m.shape[0]} exceeds the dense-storage cap {MAX_DENSE_DIM}"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        if psd_tolerance < 0:
            raise ValueError("psd_tolerance must be nonnegative")
        sym = 0.5 * (m + m.T)
        lam = _eigvalsh(sym)
        lam_max = float(lam[-1])
        floor = -psd_tolerance * max(lam_max, 0.0)
        if lam[0] < floor:
            raise ValueError(
                f"matrix is not PSD within tolerance: lambda_min={lam[0]:.3e} "
                f"< {floor:.3e} (lambda_max={lam_max:.3e})"
            )
        self.entries = _readonly(sym)
        self.psd_tolerance = float(psd_tolerance)

    @property
    def n(self):
        return self.entries.shape[0]

    def __repr__(self):
        return f"SpsdMatrix(n={self.n}, psd_tolerance={self.psd_tolerance:g})"


@dataclass(frozen=True)
class NormTriple:
    """Spectral, Frobenius, and trace norms of one PSD matrix.

    For a PSD matrix these are the max, Euclidean, and sum norms of the
    eigenvalue vector, and they satisfy the chain
    ``spectral <= frobenius <= trace <= sqrt(n) * frobenius <= n * spectral``.
    """

    spectral: float
    frobenius: float
    trace: float

    def by_name(self, norm):
        return {"spectral": self.spectral, "frobenius": self.frobenius, "trace": self.trace}[norm]

    def satisfies_chain(self, n, slack=1e-12):
        """Check the norm chain inequality at relative slack ``slack``."""
        pad = slack * max(self.trace, 1.0)
        return (
            self.spectral <= self.frobenius + pad
            and self.frobenius <= self.trace + pad
            and self.trace <= math.sqrt(n) * self.frobenius + pad
            and math.sqrt(n) * self.frobenius <= n * self.spectral + pad
        )


@dataclass(frozen=True)
class EigenPartition:
    """Ordered eigendecomposition of an SPSD matrix split at rank ``k``.

    ``U1`` (n x k) spans the dominant eigenspace with eigenvalues
    ``sigma1``; ``U2`` (n x (n-k)) spans the rest with eigenvalues
    ``sigma2``.  Both eigenvalue blocks are nonincreasing and
    ``min(sigma1) >= max(sigma2)``.

    ``degenerate_split`` is set when ``lambda_k == lambda_{k+1}`` to within
    roundoff; the dominant eigenspace (and hence leverage scores at rank
    ``k``) is then not uniquely determined, although the deterministic
    ordering used here still yields a reproducible basis.
    """

    k: int
    U1: np.ndarray
    sigma1: np.ndarray
    U2: np.ndarray
    sigma2: np.ndarray
    degenerate_split: bool = False

    @property
    def n(self):
        return self.U1.shape[0]

    @property
    def gamma(self):
        """Multiplicative eigengap ``lambda_{k+1} / lambda_k`` (1 if ``lambda_k`` is 0)."""
        lam_k = float(self.sigma1[-1])
        if lam_k <= 0.0:
            return 1.0
        return float(self.sigma2[0]) / lam_k


@dataclass(frozen=True)
class LeverageProfile:
    """Leverage scores of the dominant rank-``k`` eigenspace.

    ``scores[j]`` is the squared Euclidean norm of row ``j`` of ``U1``;
    the scores sum to ``k`` and each lies in ``[0, 1]``.  ``coherence``
    is ``(n / k) * max(scores)`` and lies in ``[1, n / k]``.
    """

    k: int
    scores: np.ndarray
    coherence: float = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "scores", _readonly(self.scores))
        if not self.coherence:
            n = self.scores.shape[0]
            object.__setattr__(
                self, "coherence", float(n / self.k * np.max(self.scores))
            )

    @property
    def n(self):
        return self.scores.shape[0]


def _eigvalsh(m):
    try:
        return np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"symmetric eigensolver failed: {exc}") from exc


def _eigh(m):
    try:
        return np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"symmetric eigensolver failed: {exc}") from exc


def _ordered_eigh(a):
    """Eigendecomposition sorted by descending eigenvalue.

    Ties are broken by ascending position in the solver's ascending-order
    output, which makes the ordering deterministic for a fixed input.
    """
    lam, u = _eigh(a.entries)
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    u = u[:, order]
    # Within tolerance of zero means zero; the constructor has already
    # rejected anything below the tolerance floor.
    lam = np.where(lam < 0.0, 0.0, lam)
    return lam, u


def eigendecompose(A, k):
    """Eigendecompose ``A`` and split the result at rank ``k``.

    Parameters
    ----------
    A : SpsdMatrix
    k : int
        Split rank, ``1 <= k < n``.

    Returns
    -------
    EigenPartition
    """
    n = A.n
    if not 1 <= k < n:
        raise ValueError(f"split rank must satisfy 1 <= k < n, got k={k}, n={n}")
    lam, u = _ordered_eigh(A)
    lam_max = lam[0] if lam[0] > 0 else 1.0
    degenerate = (lam[k - 1] - lam[k]) <= 1e-12 * lam_max
    return EigenPartition(
        k=int(k),
        U1=_readonly(u[:, :k]),
        sigma1=_readonly(lam[:k]),
        U2=_readonly(u[:, k:]),
        sigma2=_readonly(lam[k:]),
        degenerate_split=bool(degenerate),
    )


def norms(A):
    """Spectral, Frobenius, and trace norms of an SPSD matrix.

    Computed from the eigenvalues: ``(max lambda, sqrt(sum lambda^2),
    sum lambda)``, valid because ``A`` is PSD.
    """
    lam = _eigvalsh(A.entries)
    lam = np.where(lam < 0.0, 0.0, lam)
    return NormTriple(
        spectral=float(lam[-1]),
        frobenius=float(np.sqrt(np.sum(lam * lam))),
        trace=float(np.sum(lam)),
    )


def tail_norms(E):
    """Optimal rank-``k`` approximation errors from a partition's tail block."""
    s2 = E.sigma2
    return NormTriple(
        spectral=float(s2[0]) if s2.size else 0.0,
        frobenius=float(np.sqrt(np.sum(s2 * s2))),
        trace=float(np.sum(s2)),
    )


def best_rank_k(E):
    """Best rank-``k`` approximation and its error norms.

    Returns
    -------
    (SpsdMatrix, NormTriple)
        ``A_k = U1 diag(sigma1) U1.T`` and the optimal errors
        ``(max sigma2, ||sigma2||_2, sum sigma2)``, which are the smallest
        achievable in any unitarily invariant norm.
    """
    a_k = (E.U1 * E.sigma1) @ E.U1.T
    return SpsdMatrix(a_k), tail_norms(E)


def leverage_scores(E):
    """Leverage scores of the dominant eigenspace of a partition.

    ``scores[j] = ||row j of U1||^2``.  The scores depend only on the
    span of ``U1``, not on the particular orthonormal basis.
    """
    scores = np.sum(E.U1 * E.U1, axis=1)
    return LeverageProfile(k=E.k, scores=scores)


def stable_rank(A):
    """``ceil(||A||_F^2 / ||A||_2^2)``, a robust underestimate of rank."""
    t = norms(A)
    if t.spectral <= 0.0:
        raise ValueError("stable rank is undefined for the zero matrix")
    return int(math.ceil(t.frobenius**2 / t.spectral**2))


def sqrt_projection_oracle(A, S, q):
    """Reference evaluation of the square-root-projection form of a sketch.

    Computes ``A^{1/2} P A^{1/2}`` where ``P`` projects onto the range of
    ``A^{q-1/2} S``, via a full eigendecomposition of ``A``.  This is the
    O(n^3) oracle that sketch construction is checked against; it is not
    meant to be fast.

    Parameters
    ----------
    A : SpsdMatrix
    S : SketchMatrix or (n, ell) array_like
    q : int
        Power-method exponent, ``q >= 1``.
    """
    if q < 1:
        raise ValueError("q must be a positive integer")
    s = S.dense() if hasattr(S, "dense") else np.asarray(S, dtype=np.float64)
    if s.shape[0] != A.n:
        raise ValueError(f"sketch has {s.shape[0]} rows, expected {A.n}")
    lam, u = _ordered_eigh(A)
    sqrt_half = (u * np.sqrt(lam)) @ u.T
    power = (u * lam ** (q - 0.5)) @ u.T
    basis = scipy.linalg.orth(power @ s)
    if basis.size == 0:
        return SpsdMatrix(np.zeros((A.n, A.n)), psd_tolerance=A.psd_tolerance)
    g = basis.T @ sqrt_half
    return SpsdMatrix(g.T @ g, psd_tolerance=A.psd_tolerance)
