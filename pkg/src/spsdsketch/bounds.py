"""Deterministic and stochastic error bounds for SPSD sketches.

The deterministic bounds hold for *any* sketching matrix, randomized or
not, provided the interaction of the sketch with the dominant eigenspace,
``Omega_1 = U1.T S``, has full row rank.  Writing ``G = Omega_2
pinv(Omega_1)`` and ``gamma = lambda_{k+1} / lambda_k``:

* spectral:   ``||Sigma_2|| + ||Sigma_2^{q-1/2} G||^{2/(2q-1)}``
* Frobenius:  ``||Sigma_2||_F + gamma^{q-1} ||Sigma_2^{1/2} G||_2 *
  (sqrt(2 tr Sigma_2) + gamma^{q-1} ||Sigma_2^{1/2} G||_F)``
* trace:      ``tr Sigma_2 + gamma^{2(q-1)} ||Sigma_2^{1/2} G||_F^2``

They can be used a posteriori to certify the quality of any sketch.  The
stochastic side evaluates, for each of the four sketch constructions, the
sample-size requirement and the predicted error at a given ``(epsilon,
delta)``, optionally with every leading constant replaced by one (the
convention used when comparing predictions against observed errors).
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np

__all__ = [
    "BoundInapplicableError",
    "UnsupportedBoundError",
    "InteractionPair",
    "BoundReport",
    "interaction",
    "det_bound_spectral",
    "det_bound_frobenius",
    "det_bound_trace",
    "angle_diagnostics",
    "sample_size",
    "stochastic_bound",
    "prior_bound",
]

NORMS = ("spectral", "frobenius", "trace")

DEFAULT_RANK_TOLERANCE = 1e-10


class BoundInapplicableError(RuntimeError):
    """The interaction matrix is rank deficient, so the bounds do not apply."""


class UnsupportedBoundError(ValueError):
    """No bound of the requested (method, norm) combination exists."""


@dataclass(frozen=True)
class InteractionPair:
    """Projections of a sketch onto the top and bottom eigenspaces.

    ``omega1 = U1.T S`` (k x ell) and ``omega2 = U2.T S`` ((n-k) x ell).
    ``full_row_rank`` records whether the k-th singular value of
    ``omega1`` exceeds ``rank_tolerance`` times its largest.
    """

    omega1: np.ndarray
    omega2: np.ndarray
    full_row_rank: bool
    rank_tolerance: float

    def __post_init__(self):
        self.omega1.setflags(write=False)
        self.omega2.setflags(write=False)


@dataclass(frozen=True)
class BoundReport:
    """Observed error in one norm next to its bound evaluations."""

    norm: str
    observed: float
    deterministic_rhs: float
    gamma: float
    q: int
    stochastic_rhs: float = None
    sample_size_required: int = None


def interaction(E, S, rank_tolerance=DEFAULT_RANK_TOLERANCE):
    """Compute the interaction pair of a partition and a sketch."""
    omega1 = S.apply(E.U1.T)
    omega2 = S.apply(E.U2.T)
    sv = np.linalg.svd(omega1, compute_uv=False)
    full = sv.size >= E.k and sv[0] > 0 and sv[E.k - 1] > rank_tolerance * sv[0]
    return InteractionPair(
        omega1=np.ascontiguousarray(omega1),
        omega2=np.ascontiguousarray(omega2),
        full_row_rank=bool(full),
        rank_tolerance=float(rank_tolerance),
    )


def _gamma(E):
    if float(E.sigma1[-1]) <= 0.0:
        warnings.warn(
            "lambda_k is zero; eigengap gamma set to 1", stacklevel=3
        )
    return E.gamma


def _interaction_core(pair):
    if not pair.full_row_rank:
        raise BoundInapplicableError(
            "omega1 is rank deficient; only the crude bound "
            "||A - approx|| <= ||A|| applies"
        )
    return pair.omega2 @ np.linalg.pinv(pair.omega1)


def det_bound_spectral(E, pair, q=1):
    """Right-hand side of the deterministic spectral-norm bound."""
    g = _interaction_core(pair)
    weighted = E.sigma2[:, None] ** (q - 0.5) * g
    term = np.linalg.norm(weighted, 2) if weighted.size else 0.0
    return float(E.sigma2[0]) + float(term) ** (2.0 / (2 * q - 1))


def det_bound_frobenius(E, pair, q=1):
    """Right-hand side of the deterministic Frobenius-norm bound."""
    g = _interaction_core(pair)
    gamma = _gamma(E) ** (q - 1)
    weighted = np.sqrt(E.sigma2)[:, None] * g
    t2 = float(np.linalg.norm(weighted, 2)) if weighted.size else 0.0
    tf = float(np.linalg.norm(weighted)) if weighted.size else 0.0
    tail_f = float(np.linalg.norm(E.sigma2))
    tail_tr = float(np.sum(E.sigma2))
    return tail_f + gamma * t2 * (math.sqrt(2.0 * tail_tr) + gamma * tf)


def det_bound_trace(E, pair, q=1):
    """Right-hand side of the deterministic trace-norm bound."""
    g = _interaction_core(pair)
    gamma = _gamma(E) ** (2 * (q - 1))
    weighted = np.sqrt(E.sigma2)[:, None] * g
    tf_sq = float(np.sum(weighted * weighted))
    return float(np.sum(E.sigma2)) + gamma * tf_sq


def deterministic_bounds(E, pair, q=1):
    """All three deterministic bound right-hand sides as a dict."""
    return {
        "spectral": det_bound_spectral(E, pair, q),
        "frobenius": det_bound_frobenius(E, pair, q),
        "trace": det_bound_trace(E, pair, q),
    }


def angle_diagnostics(S_orth, U1, rank_tolerance=1e-12):
    """Tangent diagnostics of the angles between range(S) and range(U1).

    For ``S`` with orthonormal columns, ``||Omega_2 pinv(Omega_1)||_2`` is
    the tangent of the largest principal angle between the two ranges, and
    ``||Omega_2 pinv(Omega_1)||_F^2`` the sum of squared tangents of all
    of them.  Returns ``(tan_max, sum_sq_tan)``, with infinities when
    ``Omega_1`` is rank deficient (some direction of ``U1`` is invisible
    to the sketch).
    """
    s = np.asarray(S_orth, dtype=np.float64)
    u1 = np.asarray(U1, dtype=np.float64)
    k = u1.shape[1]
    omega1 = u1.T @ s
    sv = np.linalg.svd(omega1, compute_uv=False)
    if sv.size < k or sv[0] == 0.0 or sv[k - 1] <= rank_tolerance * sv[0]:
        return float("inf"), float("inf")
    s_perp = s - u1 @ omega1
    g = s_perp @ np.linalg.pinv(omega1)
    return float(np.linalg.norm(g, 2)), float(np.sum(g * g))


def _validate_unit(name, value, closed=True):
    if value is None:
        raise ValueError(f"{name} is required for this rule")
    hi_ok = value <= 1.0 if closed else value < 1.0
    if not (0.0 < value and hi_ok):
        interval = "(0, 1]" if closed else "(0, 1)"
        raise ValueError(f"{name}={value!r} outside {interval}")


def sample_size(
    method,
    k,
    n=None,
    epsilon=None,
    delta=None,
    beta=None,
    mu=None,
    constants_to_one=False,
):
    """Number of column samples sufficient for the stochastic bounds.

    Rules (ceiled to an integer):

    * ``"experimental"``: ``6 k ln k``, used by the benchmark grids.
    * ``"leverage"``:  ``3200 (beta eps^2)^-1 k ln(4 k / (beta delta))``
    * ``"srft"``:      ``24 eps^-1 (sqrt(k) + sqrt(8 ln(8 n / delta)))^2 ln(8 k / delta)``
    * ``"gaussian"``:  ``2 eps^-2 k ln k``
    * ``"uniform"``:   ``2 mu eps^-2 k ln(k / delta)``

    With ``constants_to_one`` every leading constant (including those
    inside the logarithms) is replaced by one, the convention used when
    comparing predicted against observed errors.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if method == "experimental":
        if k < 2:
            raise ValueError("the experimental rule needs k >= 2")
        return math.ceil(6.0 * k * math.log(k))
    if method == "leverage":
        _validate_unit("epsilon", epsilon)
        _validate_unit("delta", delta)
        _validate_unit("beta", beta if beta is not None else 1.0)
        beta = 1.0 if beta is None else beta
        lead, inner = (1.0, 1.0) if constants_to_one else (3200.0, 4.0)
        return math.ceil(
            lead / (beta * epsilon**2) * k * math.log(inner * k / (beta * delta))
        )
    if method == "srft":
        if n is None:
            raise ValueError("n is required for the srft rule")
        _validate_unit("epsilon", epsilon)
        _validate_unit("delta", delta)
        lead, c8 = (1.0, 1.0) if constants_to_one else (24.0, 8.0)
        root = math.sqrt(k) + math.sqrt(c8 * math.log(c8 * n / delta))
        return math.ceil(lead / epsilon * root**2 * math.log(c8 * k / delta))
    if method == "gaussian":
        if k < 2:
            raise ValueError("the gaussian rule needs k >= 2")
        _validate_unit("epsilon", epsilon)
        lead = 1.0 if constants_to_one else 2.0
        return math.ceil(lead / epsilon**2 * k * math.log(k))
    if method == "uniform":
        if mu is None or mu < 1.0:
            raise ValueError("uniform sampling needs the coherence mu >= 1")
        _validate_unit("epsilon", epsilon)
        _validate_unit("delta", delta)
        lead = 1.0 if constants_to_one else 2.0
        return math.ceil(lead * mu / epsilon**2 * k * math.log(k / delta))
    raise UnsupportedBoundError(f"unknown sample-size rule {method!r}")


def _tail_power_trace(optimal, q):
    """``||tail^{2q-1}||_*`` evaluated from the norm triple.

    Exact for q = 1; for q > 1 the triple alone cannot recover the tail
    spectrum, so the valid over-estimate ``opt_2^{2q-2} * opt_*`` is used
    (each tail eigenvalue is at most ``opt_2``).
    """
    if q == 1:
        return optimal.trace
    return optimal.spectral ** (2 * q - 2) * optimal.trace


def stochastic_bound(
    method,
    norm,
    optimal,
    params,
    constants_to_one=False,
    granularity="lemma",
):
    """Predicted error of one sketch construction in one norm.

    Parameters
    ----------
    method : {"uniform", "leverage", "gaussian", "srft"}
    norm : {"spectral", "frobenius", "trace"}
    optimal : NormTriple
        Optimal rank-k approximation errors of the target matrix.
    params : dict
        Keys among ``k, n, ell, epsilon, delta, gamma, q`` as required by
        the chosen rule.  ``gamma`` and ``q`` default to 1.
    constants_to_one : bool
        Replace every leading constant with one.
    granularity : {"lemma", "table1"}
        ``lemma`` evaluates the full right-hand side; ``table1`` the
        asymptotically dominant terms only (with constants omitted).
    """
    if norm not in NORMS:
        raise UnsupportedBoundError(f"unknown norm {norm!r}")
    eps = params.get("epsilon")
    delta = params.get("delta")
    gamma = params.get("gamma", 1.0)
    q = params.get("q", 1)
    k = params.get("k")
    n = params.get("n")
    ell = params.get("ell")
    opt2, optf, opttr = optimal.spectral, optimal.frobenius, optimal.trace
    g1 = gamma ** (q - 1)
    g2 = gamma ** (2 * (q - 1))
    if granularity == "table1":
        return _table1_bound(method, norm, opt2, optf, opttr, eps, k, n, ell)
    if granularity != "lemma":
        raise ValueError(f"unknown granularity {granularity!r}")

    if method == "leverage":
        _validate_unit("epsilon", eps)
        if norm == "spectral":
            t = _tail_power_trace(optimal, q)
            return opt2 + (eps**2 * t) ** (1.0 / (2 * q - 1))
        if norm == "frobenius":
            c = 1.0 if constants_to_one else math.sqrt(2.0)
            return optf + (c * eps * g1 + eps**2 * g2) * opttr
        return (1.0 + g2 * eps**2) * opttr

    if method == "srft":
        _validate_unit("epsilon", eps, closed=False)
        if norm == "spectral":
            _validate_unit("delta", delta)
            if n is None or ell is None:
                raise ValueError("srft spectral bound needs n and ell")
            c5, c16, c2 = (1.0, 1.0, 1.0) if constants_to_one else (5.0, 16.0, 2.0)
            big_l = math.log(n / delta)
            lead = 1.0 / (1.0 - math.sqrt(eps)) * (c5 + c16 * big_l**2 / ell)
            t = _tail_power_trace(optimal, q)
            extra = (c2 * big_l / ((1.0 - math.sqrt(eps)) * ell) * t) ** (
                1.0 / (2 * q - 1)
            )
            return (1.0 + lead ** (1.0 / (2 * q - 1))) * opt2 + extra
        if norm == "frobenius":
            c7, c22 = (1.0, 1.0) if constants_to_one else (7.0, 22.0)
            return optf + (c7 * g1 * math.sqrt(eps) + c22 * g2 * eps) * opttr
        c22 = 1.0 if constants_to_one else 22.0
        return (1.0 + c22 * eps * g2) * opttr

    if method == "gaussian":
        _validate_unit("epsilon", eps)
        if k is None or k < 2:
            raise ValueError("gaussian bounds need k >= 2")
        lnk = math.log(k)
        one = constants_to_one
        if norm == "spectral":
            c89, c874, c219 = (1.0, 1.0, 1.0) if one else (89.0, 874.0, 219.0)
            lead = (c89 * eps**2 / lnk + c874 * eps**2 / k) ** (1.0 / (2 * q - 1))
            extra = (c219 * eps**2 / (k * lnk)) ** (1.0 / (2 * q - 1))
            return (1.0 + lead) * opt2 + extra * opttr
        if norm == "frobenius":
            c42, c14, c45, c140, c219, c21, c70, c437 = (
                (1.0,) * 8 if one else (42.0, 14.0, 45.0, 140.0, 219.0, 21.0, 70.0, 437.0)
            )
            mid = g1 * eps * (c42 / math.sqrt(k) + c14 / math.sqrt(lnk)) + g2 * eps**2 * (
                c45 / lnk + c140 / math.sqrt(k * lnk) + c219 / (k * math.sqrt(lnk))
            )
            tr_coef = c21 * g1 * eps / math.sqrt(k * lnk) + c70 * g2 * eps**2 / (
                math.sqrt(k) * lnk
            )
            sp_coef = g2 * eps**2 * (c140 / math.sqrt(k * lnk) + c437 / k)
            return optf + mid * math.sqrt(opt2 * opttr) + tr_coef * opttr + sp_coef * opt2
        c45, c437 = (1.0, 1.0) if one else (45.0, 437.0)
        return (1.0 + c45 * g2 * eps**2 / lnk) * opttr + c437 * g2 * eps**2 / k * opt2

    if method == "uniform":
        _validate_unit("epsilon", eps, closed=False)
        if norm == "spectral":
            if n is None or ell is None:
                raise ValueError("uniform spectral bound needs n and ell")
            return (1.0 + (n / ((1.0 - eps) * ell)) ** (1.0 / (2 * q - 1))) * opt2
        _validate_unit("delta", delta)
        if norm == "frobenius":
            c = 1.0 if constants_to_one else math.sqrt(2.0)
            return optf + (
                g1 * c / (delta * math.sqrt(1.0 - eps)) + g2 / ((1.0 - eps) * delta**2)
            ) * opttr
        return (1.0 + g2 / (delta**2 * (1.0 - eps))) * opttr

    raise UnsupportedBoundError(f"no bound for method {method!r}")


def _table1_bound(method, norm, opt2, optf, opttr, eps, k, n, ell):
    _validate_unit("epsilon", eps, closed=False)
    if method == "uniform":
        if norm == "spectral":
            if n is None or ell is None:
                raise ValueError("uniform spectral bound needs n and ell")
            return opt2 * (1.0 + n / (eps * ell))
        if norm == "frobenius":
            return optf + opttr / eps
        return opttr * (1.0 + 1.0 / eps)
    if method == "leverage":
        if norm == "spectral":
            return opt2 + eps**2 * opttr
        if norm == "frobenius":
            return optf + eps * opttr
        return (1.0 + eps**2) * opttr
    if method == "srft":
        if norm == "spectral":
            if k is None:
                raise ValueError("srft spectral bound needs k")
            return (1.0 + 1.0 / (1.0 - math.sqrt(eps))) * opt2 + eps * opttr / (
                (1.0 - math.sqrt(eps)) * k
            )
        if norm == "frobenius":
            return optf + math.sqrt(eps) * opttr
        return (1.0 + eps) * opttr
    if method == "gaussian":
        if norm == "spectral":
            if k is None:
                raise ValueError("gaussian spectral bound needs k")
            return (1.0 + eps**2) * opt2 + eps / k * opttr
        if norm == "frobenius":
            return optf + eps * opttr
        return (1.0 + eps**2) * opttr
    raise UnsupportedBoundError(f"no simplified bound for method {method!r}")


def prior_bound(source, norm, optimal, params):
    """Reference predictors from earlier analyses (constants omitted).

    Non-core: provided only for side-by-side comparison tables.  Sources:

    * ``"diag-sampling"``: column sampling proportional to squared
      diagonal entries; needs ``diag_sq_sum``.  No trace bound.
    * ``"uniform-trace"``: uniform sampling with replacement; trace only;
      needs the full trace norm of the matrix (``matrix_trace``).
    * ``"uniform-worst"``: uniform sampling without replacement; spectral
      and Frobenius only; needs ``matrix_spectral``.
    """
    eps = params.get("epsilon")
    n = params.get("n")
    ell = params.get("ell")
    k = params.get("k")
    opt = optimal
    if source == "diag-sampling":
        if norm == "trace":
            raise UnsupportedBoundError("diag-sampling has no trace bound")
        dss = params.get("diag_sq_sum")
        if dss is None:
            raise ValueError("diag-sampling bounds need diag_sq_sum")
        _validate_unit("epsilon", eps)
        base = opt.spectral if norm == "spectral" else opt.frobenius
        return base + eps * dss
    if source == "uniform-trace":
        if norm != "trace":
            raise UnsupportedBoundError("uniform-trace only bounds the trace norm")
        mt = params.get("matrix_trace")
        if mt is None or n is None or ell is None:
            raise ValueError("uniform-trace bound needs matrix_trace, n, ell")
        return (n - ell) / n * mt
    if source == "uniform-worst":
        if norm == "trace":
            raise UnsupportedBoundError("uniform-worst has no trace bound")
        ms = params.get("matrix_spectral")
        if ms is None or n is None or ell is None:
            raise ValueError("uniform-worst bounds need matrix_spectral, n, ell")
        if norm == "spectral":
            return opt.spectral + n / math.sqrt(ell) * ms
        if k is None:
            raise ValueError("uniform-worst Frobenius bound needs k")
        return opt.frobenius + n * (k / ell) ** 0.25 * ms
    raise UnsupportedBoundError(f"unknown prior source {source!r}")
