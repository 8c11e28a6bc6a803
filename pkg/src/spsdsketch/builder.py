"""Assembly of SPSD sketches and their low-rank approximations.

A sketch of an SPSD matrix ``A`` under a sketching operator ``S`` with
power exponent ``q`` is the pair ``C = A^q S`` and ``W = S.T A^{2q-1} S``;
the induced approximations are ``C pinv(W) C.T`` (full) and
``C pinv(W_k) C.T`` (rank-restricted through the best rank-``k``
approximation of ``W``).  Pinched and prolonged projection variants are
also provided.  Approximations are kept in factored ``L L.T`` form, which
is PSD by construction and needs O(n * ell) storage.
"""

from dataclasses import dataclass
import warnings

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .core import NormTriple, SpsdMatrix

__all__ = [
    "DegenerateSketchError",
    "SpsdSketch",
    "Approximation",
    "build",
    "approximate",
    "pinched",
    "prolonged",
    "approximation_errors",
]

_EPS = np.finfo(np.float64).eps

# Above this dimension residual norms switch from a dense symmetric
# eigensolve to factored Gram computations plus an iterative extremal
# eigenvalue.
_DENSE_RESIDUAL_LIMIT = 2000


class DegenerateSketchError(RuntimeError):
    """Raised when the middle matrix ``W`` is numerically zero."""


@dataclass(frozen=True)
class SpsdSketch:
    """The pair ``(C, W)`` defining one SPSD sketch.

    ``pinv_tolerance`` is the relative eigenvalue cutoff used when
    pseudoinverting ``W``; eigenvalues at or below
    ``pinv_tolerance * lambda_max(W)`` are treated as zero.
    """

    C: np.ndarray
    W: np.ndarray
    q: int
    source_method: str
    pinv_tolerance: float

    def __post_init__(self):
        self.C.setflags(write=False)
        self.W.setflags(write=False)

    @property
    def n(self):
        return self.C.shape[0]

    @property
    def ell(self):
        return self.C.shape[1]


@dataclass(frozen=True)
class Approximation:
    """A PSD low-rank approximation in factored form ``L @ L.T``."""

    factor_L: np.ndarray
    mode: str
    rank_bound: int
    k: int = None
    columns_dropped: bool = False

    def __post_init__(self):
        self.factor_L.setflags(write=False)

    @property
    def n(self):
        return self.factor_L.shape[0]

    def materialize(self):
        """Dense ``n x n`` form of the approximation."""
        return self.factor_L @ self.factor_L.T


def build(A, S, q=1):
    """Form the sketch ``C = A^q S`` and ``W = S.T A^{2q-1} S``.

    Powers of ``A`` are never formed explicitly; the product is computed
    by repeated multiplication right-to-left.  For q > 3 the power iterate
    is re-orthonormalized between multiplies, which leaves the induced
    approximation unchanged (the iterate's range is what matters) while
    avoiding the loss of the trailing directions to roundoff.

    Parameters
    ----------
    A : SpsdMatrix
    S : SketchMatrix
    q : int
        Power-method exponent, ``q >= 1``.
    """
    if S.n != A.n:
        raise ValueError(f"sketch is for dimension {S.n}, matrix has {A.n}")
    if q < 1:
        raise ValueError("q must be a positive integer")
    a = A.entries
    stabilize = q > 3
    if q == 1:
        c = S.apply(a)
        w = S.apply_transpose(c)
    else:
        z = S.apply(a)
        for _ in range(q - 2):
            if stabilize:
                z = np.linalg.qr(z)[0]
            z = a @ z
        if stabilize:
            z = np.linalg.qr(z)[0]
        c = a @ z
        w = z.T @ c
    w = 0.5 * (w + w.T)
    pinv_tol = S.ell * _EPS
    _check_middle_psd(w, pinv_tol)
    return SpsdSketch(
        C=np.ascontiguousarray(c),
        W=np.ascontiguousarray(w),
        q=int(q),
        source_method=S.method,
        pinv_tolerance=pinv_tol,
    )


def _check_middle_psd(w, pinv_tol):
    lam = np.linalg.eigvalsh(w)
    lam_max = lam[-1]
    # Roundoff in forming W can exceed ell*eps relative; validate PSD-ness
    # at the looser of the pinv cutoff and the standard PSD tolerance.
    floor = -max(pinv_tol, 1e-10) * max(lam_max, 0.0)
    if lam[0] < floor:
        raise ValueError(
            f"middle matrix is not PSD within tolerance: lambda_min={lam[0]:.3e}"
        )


def approximate(sk, mode="full", k=None, pinv_tolerance=None):
    """Materialize a factored approximation from a sketch.

    ``full`` mode uses ``pinv(W)``; ``rank_restricted`` replaces ``W`` by
    its best rank-``k`` approximation first.  The pseudoinverse square
    root comes from a symmetric eigendecomposition of ``W`` with relative
    cutoff ``pinv_tolerance * lambda_max(W)``.
    """
    if mode not in ("full", "rank_restricted"):
        raise ValueError(f"unknown approximation mode {mode!r}")
    if mode == "rank_restricted" and (k is None or k < 1):
        raise ValueError("rank_restricted mode needs a positive k")
    tol = sk.pinv_tolerance if pinv_tolerance is None else pinv_tolerance
    lam, v = np.linalg.eigh(sk.W)
    lam_max = lam[-1]
    if lam_max <= 0.0:
        raise DegenerateSketchError("middle matrix is numerically zero")
    cutoff = tol * lam_max
    if mode == "rank_restricted":
        order = np.argsort(-lam, kind="stable")[:k]
        lam, v = lam[order], v[:, order]
    keep = lam > cutoff
    if not np.any(keep):
        raise DegenerateSketchError("no eigenvalue of W survives the pinv cutoff")
    lam, v = lam[keep], v[:, keep]
    factor = sk.C @ (v / np.sqrt(lam))
    return Approximation(
        factor_L=factor,
        mode=mode if mode == "full" else "rank_restricted",
        rank_bound=int(factor.shape[1]),
        k=k,
    )


def _range_basis(A, S, rank_tol):
    """Orthonormal basis of range(A S), dropping rank-deficient columns."""
    y = S.apply(A.entries)
    q, r, _ = scipy.linalg.qr(y, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        raise DegenerateSketchError("A S is numerically zero")
    rank = int(np.sum(diag > rank_tol * diag[0]))
    dropped = rank < y.shape[1]
    if dropped:
        warnings.warn(
            f"range basis of the sketch is rank deficient: kept {rank} of "
            f"{y.shape[1]} columns",
            stacklevel=3,
        )
    return q[:, :rank], dropped


def pinched(A, S, rank_tolerance=None):
    """Compress ``A`` to the range of ``A S``: ``Q (Q.T A Q) Q.T``.

    ``Q`` comes from a column-pivoted QR of ``A S``; columns below the
    relative rank tolerance (default ``ell * eps``) are dropped, reducing
    the rank bound, with a warning.
    """
    tol = S.ell * _EPS if rank_tolerance is None else rank_tolerance
    q_basis, dropped = _range_basis(A, S, tol)
    b = q_basis.T @ A.entries @ q_basis
    b = 0.5 * (b + b.T)
    lam, v = np.linalg.eigh(b)
    lam = np.where(lam < 0.0, 0.0, lam)
    factor = q_basis @ (v * np.sqrt(lam))
    return Approximation(
        factor_L=factor,
        mode="pinched",
        rank_bound=q_basis.shape[1],
        columns_dropped=dropped,
    )


def prolonged(A, S, rank_tolerance=None):
    """Project the square root of ``A`` onto range(A^{3/2} S):
    ``A Q pinv(Q.T A Q) Q.T A`` with ``Q`` a basis of range(A S).

    Identical to the power-method sketch with ``q = 2`` built from the
    same ``S``.
    """
    tol = S.ell * _EPS if rank_tolerance is None else rank_tolerance
    q_basis, dropped = _range_basis(A, S, tol)
    b = q_basis.T @ A.entries @ q_basis
    b = 0.5 * (b + b.T)
    lam, v = np.linalg.eigh(b)
    lam_max = lam[-1]
    if lam_max <= 0.0:
        raise DegenerateSketchError("compressed matrix is numerically zero")
    keep = lam > tol * lam_max
    lam, v = lam[keep], v[:, keep]
    factor = (A.entries @ q_basis) @ (v / np.sqrt(lam))
    return Approximation(
        factor_L=factor,
        mode="prolonged",
        rank_bound=int(factor.shape[1]),
        columns_dropped=dropped,
    )


def approximation_errors(A, approx):
    """Norms of the residual ``A - L L.T`` in the three norms.

    Uses a dense symmetric eigensolve of the residual up to dimension
    2000; beyond that the trace and Frobenius norms come from factored
    Gram computations (the residual of any sketch built here is PSD, so
    its trace norm is its trace) and the spectral norm from an iterative
    extremal eigensolve.
    """
    el = approx.factor_L
    n = A.n
    if n <= _DENSE_RESIDUAL_LIMIT:
        residual = A.entries - el @ el.T
        lam = np.linalg.eigvalsh(residual)
        return NormTriple(
            spectral=float(np.max(np.abs(lam))),
            frobenius=float(np.sqrt(np.sum(lam * lam))),
            trace=float(np.sum(np.abs(lam))),
        )
    a = A.entries
    al = a @ el
    ltl = el.T @ el
    frob_sq = (
        float(np.sum(a * a)) - 2.0 * float(np.sum(al * el)) + float(np.sum(ltl * ltl))
    )
    trace = float(np.trace(a)) - float(np.sum(el * el))
    op = scipy.sparse.linalg.LinearOperator(
        (n, n), matvec=lambda x: a @ x - el @ (el.T @ x)
    )
    spectral = float(
        abs(scipy.sparse.linalg.eigsh(op, k=1, which="LM", return_eigenvectors=False)[0])
    )
    return NormTriple(
        spectral=spectral,
        frobenius=float(np.sqrt(max(frob_sq, 0.0))),
        trace=max(trace, 0.0),
    )
