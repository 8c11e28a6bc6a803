"""Benchmark harness: trial orchestration, summaries, and report files.

An experiment sweeps sketching methods over a grid of sample counts,
running ``trials`` independent repetitions of each cell.  Every trial
draws its own substream seed from the master seed and a stable hash of
``(method, ell, mode, trial)``, so results are reproducible regardless of
execution order or thread count.  Failed trials are recorded with an
error tag and never abort the run.

Error ratios follow the two conventions used throughout: the observed
error of ``C pinv(W) C.T`` (or ``C pinv(W_k) C.T`` in rank-restricted
mode) divided by the optimal rank-``k`` error in the same norm.  When the
optimal error is numerically zero the matrix's own norm is used as the
denominator (flagged on the record).
"""

import concurrent.futures
import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._rng import generator, substream
from . import bounds as bounds_mod
from .builder import approximate, approximation_errors, build, pinched, prolonged
from .core import (
    NormTriple,
    SpsdMatrix,
    eigendecompose,
    leverage_scores,
    norms,
    tail_norms,
)
from .dataio import load_dataset
from .kernels import (
    Graph,
    PointCloud,
    linear_kernel,
    normalized_laplacian,
    rbf_kernel,
    sparse_rbf_kernel,
)
from .levscores import approx_lev_frob, approx_lev_power, approx_lev_spectral
from .sketching import (
    SamplingDistribution,
    gaussian_sketch,
    leverage_sketch,
    srft_sketch,
    uniform_sketch,
)

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "ExperimentResult",
    "run_experiment",
    "summarize",
    "report",
]

logger = logging.getLogger(__name__)

METHODS = ("unif", "lev", "lev_frob", "lev_spec", "lev_power", "gaussian", "srft")
MODES = ("full", "rank_restricted", "pinched", "prolonged")
SYMBOLIC_ELLS = ("k+8", "k ln k", "k ln n")

PER_TRIAL_COLUMNS = (
    "method,mode,ell,trial,spectral_ratio,frobenius_ratio,trace_ratio,"
    "dist_time_s,sketch_time_s,approx_time_s,full_row_rank"
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one benchmark run.

    ``input`` is either ``{"path": ..., "format": ...}`` (plus an optional
    ``"kernel"`` spec for point files) or ``{"generator": ..., ...}``.
    ``ell_grid`` entries are integers or the symbolic strings ``"k+8"``,
    ``"k ln k"``, ``"k ln n"`` (evaluated with natural logs and ceiled).
    ``record_timings`` exists so that runs meant to be byte-reproducible
    can zero the wall-clock fields, which are otherwise the only
    nondeterministic output.
    """

    input: dict
    k: int
    ell_grid: tuple
    methods: tuple
    modes: tuple = ("full",)
    q: int = 1
    trials: int = 1
    master_seed: int = 0
    tolerances: dict = field(default_factory=dict)
    record_timings: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.q < 1:
            raise ValueError("q must be a positive integer")
        if not self.methods:
            raise ValueError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
        for m in self.modes:
            if m not in MODES:
                raise ValueError(f"unknown mode {m!r}; choose from {MODES}")
        object.__setattr__(self, "ell_grid", tuple(self.ell_grid))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "modes", tuple(self.modes))

    @classmethod
    def from_json(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        try:
            return cls(
                input=raw["input"],
                k=raw["k"],
                ell_grid=tuple(raw["ell_grid"]),
                methods=tuple(raw["methods"]),
                modes=tuple(raw.get("modes", ("full",))),
                q=raw.get("q", 1),
                trials=raw.get("trials", 1),
                master_seed=raw.get("master_seed", 0),
                tolerances=raw.get("tolerances", {}),
                record_timings=raw.get("record_timings", True),
            )
        except KeyError as exc:
            raise ValueError(f"config is missing required key {exc}") from exc

    def resolved_ells(self, n):
        out = []
        for entry in self.ell_grid:
            if isinstance(entry, str):
                if entry == "k+8":
                    ell = self.k + 8
                elif entry == "k ln k":
                    ell = math.ceil(self.k * math.log(self.k))
                elif entry == "k ln n":
                    ell = math.ceil(self.k * math.log(n))
                else:
                    raise ValueError(
                        f"unknown symbolic ell {entry!r}; choose from {SYMBOLIC_ELLS}"
                    )
            else:
                ell = int(entry)
            if ell < self.k:
                raise ValueError(f"ell={ell} is smaller than k={self.k}")
            out.append(ell)
        return out


@dataclass(frozen=True)
class TrialRecord:
    """One (method, mode, ell, trial) cell of an experiment."""

    method: str
    mode: str
    ell: int
    trial_index: int
    ratios: NormTriple = None
    observed: NormTriple = None
    wall_times: dict = field(default_factory=dict)
    full_row_rank: bool = False
    det_rhs: dict = None
    opt_floored: bool = False
    error: str = None

    @property
    def failed(self):
        return self.error is not None


@dataclass(frozen=True)
class ExperimentResult:
    """Records plus the per-run context needed for summaries and bounds."""

    config: ExperimentConfig
    records: tuple
    n: int
    optimal: NormTriple
    matrix_norms: NormTriple
    gamma: float
    coherence: float
    diag_sq_sum: float
    exact_leverage_time_s: float


def _generate_input(spec):
    kind = spec["generator"]
    seed = spec.get("seed", 0)
    rng = generator(substream(seed, "input", kind))
    if kind == "spsd":
        n = spec["n"]
        spectrum = _resolve_spectrum(spec, n)
        basis = np.linalg.qr(rng.standard_normal((n, n)))[0]
        return SpsdMatrix((basis * spectrum) @ basis.T)
    if kind in ("rbf", "sparse-rbf", "linear"):
        cloud = PointCloud(X=_point_cloud(spec, rng))
        if kind == "linear":
            return linear_kernel(cloud)
        if kind == "rbf":
            return rbf_kernel(cloud, sigma=spec["sigma"])
        return sparse_rbf_kernel(
            cloud,
            sigma=spec["sigma"],
            nu=spec.get("nu"),
            cutoff=spec.get("cutoff"),
        )
    if kind == "laplacian":
        n = spec["n"]
        extra = int(spec.get("extra_edges", 2 * n))
        edges = [(i, (i + 1) % n, 1.0) for i in range(n)]
        pairs = rng.integers(0, n, size=(extra, 2))
        edges.extend((int(i), int(j), 1.0) for i, j in pairs if i != j)
        return normalized_laplacian(Graph(n=n, edges=tuple(edges)))
    raise ValueError(f"unknown generator {kind!r}")


def _point_cloud(spec, rng):
    """Point cloud for a kernel generator: scattered, optionally clustered.

    A ``clusters`` block places tight groups (centers standard normal,
    members jittered by ``spread``); the remaining points are standard
    normal scatter.  Either ``{"count": c, "size": s}`` for equal groups
    or ``{"sizes": [...]}`` for unequal ones.  Tight groups of unequal
    size under a narrow kernel give a dominant eigenspace with
    heterogeneous leverage scores, the regime where importance sampling
    pays off.
    """
    n, d = spec["n"], spec.get("d", 2)
    clusters = spec.get("clusters")
    if not clusters:
        return rng.standard_normal((n, d))
    sizes = clusters.get("sizes") or [clusters["size"]] * clusters["count"]
    spread = clusters.get("spread", 0.01)
    total = int(sum(sizes))
    if total > n:
        raise ValueError("cluster points exceed n")
    centers = rng.standard_normal((len(sizes), d))
    members = np.repeat(centers, sizes, axis=0) + spread * rng.standard_normal(
        (total, d)
    )
    scatter = rng.standard_normal((n - total, d))
    return np.vstack([members, scatter])


def _resolve_spectrum(spec, n):
    raw = spec.get("spectrum")
    if isinstance(raw, (list, tuple)):
        if len(raw) != n:
            raise ValueError("explicit spectrum length must equal n")
        return np.asarray(raw, dtype=np.float64)
    if isinstance(raw, dict) and raw.get("kind") == "gap":
        k, ratio = raw["k"], raw["ratio"]
        lam = np.ones(n)
        lam[:k] = ratio
        return lam
    raise ValueError("spsd generator needs a spectrum list or gap spec")


def _apply_kernel(obj, kernel_spec):
    if isinstance(obj, SpsdMatrix):
        return obj
    if isinstance(obj, Graph):
        return normalized_laplacian(obj)
    if not isinstance(obj, PointCloud):
        raise TypeError(f"cannot build a matrix from {type(obj).__name__}")
    spec = kernel_spec or {"type": "linear"}
    ktype = spec.get("type", "linear")
    if ktype == "linear":
        return linear_kernel(obj)
    if ktype == "rbf":
        return rbf_kernel(obj, sigma=spec["sigma"])
    if ktype == "sparse-rbf":
        return sparse_rbf_kernel(
            obj, sigma=spec["sigma"], nu=spec.get("nu"), cutoff=spec.get("cutoff")
        )
    raise ValueError(f"unknown kernel type {ktype!r}")


def resolve_input(spec):
    """Turn a config ``input`` block into the target SpsdMatrix."""
    if "generator" in spec:
        return _generate_input(spec)
    if "path" in spec:
        obj = load_dataset(spec["path"], spec.get("format", "matrix_market"))
        return _apply_kernel(obj, spec.get("kernel"))
    raise ValueError("input spec needs either a 'generator' or a 'path'")


def _ratio(observed, optimal, floor_scale):
    floored = optimal < 1e-14 * floor_scale
    denom = floor_scale if floored else optimal
    return observed / denom, floored


class _TrialRunner:
    """Shared per-run state: the matrix, its partition, and distributions."""

    def __init__(self, cfg, A):
        self.cfg = cfg
        self.A = A
        self.E = eigendecompose(A, cfg.k)
        self.optimal = tail_norms(self.E)
        self.matrix_norms = norms(A)
        t0 = time.perf_counter()
        self.profile = leverage_scores(self.E)
        self.exact_dist = SamplingDistribution.from_leverage(self.profile)
        self.exact_leverage_time = time.perf_counter() - t0
        self.rank_tolerance = cfg.tolerances.get("rank_tolerance", 1e-10)

    def _distribution(self, method, seed):
        """Sampling distribution for one leverage-flavor method.

        The exact distribution is computed once per run and reused (its
        one-time build cost is reported on every reuse); the approximate
        ones are rebuilt per trial from the trial's substream, since their
        construction is part of the method being measured.
        """
        if method == "lev":
            return self.exact_dist, self.exact_leverage_time
        t0 = time.perf_counter()
        k = self.cfg.k
        if method == "lev_frob":
            approx = approx_lev_frob(self.A, k, q=0, r=2 * k, seed=seed)
        elif method == "lev_spec":
            approx = approx_lev_frob(self.A, k, q=4, r=2 * k, seed=seed)
        elif method == "lev_power":
            approx = approx_lev_power(self.A, k, seed=seed)
        else:
            raise ValueError(f"not a sampling distribution method: {method}")
        dist = SamplingDistribution.from_scores(approx.scores)
        return dist, time.perf_counter() - t0

    def _sketch(self, method, ell, seed):
        """Returns (sketch, reported_dist_time, in_trial_dist_time)."""
        if method == "unif":
            return uniform_sketch(self.A.n, ell, replacement=False, seed=seed), 0.0, 0.0
        if method == "gaussian":
            return gaussian_sketch(self.A.n, ell, seed=seed), 0.0, 0.0
        if method == "srft":
            return srft_sketch(self.A.n, ell, seed=seed), 0.0, 0.0
        t0 = time.perf_counter()
        dist, reported = self._distribution(method, substream(seed, "dist"))
        in_trial = time.perf_counter() - t0
        return leverage_sketch(dist, ell, seed=seed), reported, in_trial

    def run_trial(self, method, ell, mode, trial):
        seed = substream(self.cfg.master_seed, method, ell, mode, trial)
        try:
            return self._run_trial_inner(method, ell, mode, trial, seed)
        except Exception as exc:  # noqa: BLE001 -- failures become records
            logger.warning(
                "trial failed: method=%s ell=%d mode=%s trial=%d: %s",
                method, ell, mode, trial, exc,
            )
            return TrialRecord(
                method=method, mode=mode, ell=ell, trial_index=trial,
                error=f"{type(exc).__name__}: {exc}",
            )

    def _run_trial_inner(self, method, ell, mode, trial, seed):
        cfg = self.cfg
        t0 = time.perf_counter()
        sketch_op, dist_time, in_trial_dist = self._sketch(method, ell, seed)
        if mode in ("full", "rank_restricted"):
            sk = build(self.A, sketch_op, q=cfg.q)
            t1 = time.perf_counter()
            if mode == "full":
                approx = approximate(sk, mode="full")
            else:
                approx = approximate(sk, mode="rank_restricted", k=cfg.k)
            t2 = time.perf_counter()
            bound_q = cfg.q
        else:
            t1 = time.perf_counter()
            approx = pinched(self.A, sketch_op) if mode == "pinched" else prolonged(
                self.A, sketch_op
            )
            t2 = time.perf_counter()
            bound_q = 2 if mode == "prolonged" else None
        observed = approximation_errors(self.A, approx)
        pair = bounds_mod.interaction(self.E, sketch_op, self.rank_tolerance)
        det_rhs = None
        if pair.full_row_rank and bound_q is not None and mode != "rank_restricted":
            det_rhs = bounds_mod.deterministic_bounds(self.E, pair, bound_q)
        ratios = {}
        floored_any = False
        for norm in ("spectral", "frobenius", "trace"):
            r, floored = _ratio(
                observed.by_name(norm),
                self.optimal.by_name(norm),
                self.matrix_norms.by_name(norm),
            )
            ratios[norm] = r
            floored_any = floored_any or floored
        times = {
            "distribution_build": dist_time,
            "sketch_build": max((t1 - t0) - in_trial_dist, 0.0),
            "approx_build": t2 - t1,
        }
        if not cfg.record_timings:
            times = {key: 0.0 for key in times}
        return TrialRecord(
            method=method,
            mode=mode,
            ell=ell,
            trial_index=trial,
            ratios=NormTriple(**{k_: ratios[k_] for k_ in ("spectral", "frobenius", "trace")}),
            observed=observed,
            wall_times=times,
            full_row_rank=pair.full_row_rank,
            det_rhs=det_rhs,
            opt_floored=floored_any,
        )


def run_experiment(cfg, threads=1):
    """Run every (method, ell, mode, trial) cell of a configuration.

    Trials are independent; with ``threads > 1`` they execute on a thread
    pool (the heavy work is in BLAS calls, which release the GIL).  The
    record order is always the deterministic sweep order.
    """
    A = resolve_input(cfg.input)
    ells = cfg.resolved_ells(A.n)
    runner = _TrialRunner(cfg, A)
    cells = [
        (method, ell, mode, trial)
        for method in cfg.methods
        for ell in ells
        for mode in cfg.modes
        for trial in range(cfg.trials)
    ]
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda c: runner.run_trial(*c), cells))
    else:
        records = [runner.run_trial(*cell) for cell in cells]
    _warn_if_times_shrink(records, cfg)
    return ExperimentResult(
        config=cfg,
        records=tuple(records),
        n=A.n,
        optimal=runner.optimal,
        matrix_norms=runner.matrix_norms,
        gamma=runner.E.gamma,
        coherence=runner.profile.coherence,
        diag_sq_sum=float(np.sum(np.diag(A.entries) ** 2)),
        exact_leverage_time_s=runner.exact_leverage_time,
    )


def _warn_if_times_shrink(records, cfg):
    """Sanity check: projection sketch build time should grow with ell."""
    if not cfg.record_timings:
        return
    for method in ("gaussian", "srft"):
        per_ell = {}
        for rec in records:
            if rec.method == method and not rec.failed:
                per_ell.setdefault(rec.ell, []).append(rec.wall_times["sketch_build"])
        means = [(ell, float(np.mean(ts))) for ell, ts in sorted(per_ell.items())]
        for (ell_a, t_a), (ell_b, t_b) in zip(means, means[1:]):
            if t_b < 0.5 * t_a:
                logger.warning(
                    "%s sketch build time decreased from %.2e s (ell=%d) to "
                    "%.2e s (ell=%d); timings may be unreliable",
                    method, t_a, ell_a, t_b, ell_b,
                )


def summarize(records):
    """Min/mean/max error ratios per (method, mode, ell, norm) cell."""
    records = [r for r in records if not r.failed]
    if not records:
        raise ValueError("no successful records to summarize")
    cells = {}
    for rec in records:
        for norm in ("spectral", "frobenius", "trace"):
            key = (rec.method, rec.mode, rec.ell, norm)
            cells.setdefault(key, []).append(rec.ratios.by_name(norm))
    rows = []
    for (method, mode, ell, norm), values in sorted(cells.items()):
        rows.append(
            {
                "method": method,
                "mode": mode,
                "ell": ell,
                "norm": norm,
                "min": min(values),
                "mean": float(np.mean(values)),
                "max": max(values),
            }
        )
    return rows


def _fmt(x):
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


# Predictor evaluation follows the pred/obs table convention: delta = 1/2,
# every constant replaced by one, and epsilon backed out of the
# constants-to-one sample-size rule at the ell actually used.
_PREDICTOR_DELTA = 0.5


def _epsilon_from_ell(method, k, n, ell, coherence):
    log2k = math.log(k / _PREDICTOR_DELTA)
    if method == "leverage":
        value = math.sqrt(k * log2k / ell)
    elif method == "gaussian":
        if k < 2:
            return None
        value = math.sqrt(k * math.log(k) / ell)
    elif method == "srft":
        root = math.sqrt(k) + math.sqrt(math.log(n / _PREDICTOR_DELTA))
        value = root**2 * log2k / ell
    elif method == "uniform":
        value = math.sqrt(coherence * k * log2k / ell)
    else:
        return None
    if not 0.0 < value < 1.0:
        return None
    return value


_METHOD_TO_LEMMA = {
    "unif": "uniform",
    "lev": "leverage",
    "lev_frob": "leverage",
    "lev_spec": "leverage",
    "lev_power": "leverage",
    "gaussian": "gaussian",
    "srft": "srft",
}


def _pred_obs_rows(result):
    cfg = result.config
    rows = []
    by_cell = {}
    for rec in result.records:
        if rec.failed or rec.mode != "full":
            continue
        by_cell.setdefault((rec.method, rec.ell), []).append(rec.observed)
    for (method, ell), observed in sorted(by_cell.items()):
        lemma = _METHOD_TO_LEMMA[method]
        eps = _epsilon_from_ell(lemma, cfg.k, result.n, ell, result.coherence)
        for norm in ("spectral", "frobenius", "trace"):
            obs_mean = float(np.mean([o.by_name(norm) for o in observed]))
            pred = ""
            ratio = ""
            if eps is not None:
                params = {
                    "k": cfg.k,
                    "n": result.n,
                    "ell": ell,
                    "epsilon": eps,
                    "delta": _PREDICTOR_DELTA,
                    "gamma": result.gamma,
                    "q": cfg.q,
                }
                try:
                    pred_val = bounds_mod.stochastic_bound(
                        lemma, norm, result.optimal, params, constants_to_one=True
                    )
                except (ValueError, bounds_mod.UnsupportedBoundError):
                    pred_val = None
                if pred_val is not None:
                    pred = pred_val
                    ratio = pred_val / obs_mean if obs_mean > 0 else float("inf")
            rows.append(
                (method, ell, norm, eps if eps is not None else "", pred, obs_mean, ratio)
            )
        rows.extend(_prior_rows(result, method, ell, observed))
    return rows


def _prior_rows(result, method, ell, observed):
    """Reference predictor rows (non-core, constants-to-one only)."""
    if method != "unif":
        return []
    cfg = result.config
    rows = []
    params = {
        "n": result.n,
        "ell": ell,
        "k": cfg.k,
        "epsilon": min((cfg.k / ell) ** 0.25, 0.999999),
        "diag_sq_sum": result.diag_sq_sum,
        "matrix_trace": result.matrix_norms.trace,
        "matrix_spectral": result.matrix_norms.spectral,
    }
    for source in ("diag-sampling", "uniform-trace", "uniform-worst"):
        for norm in ("spectral", "frobenius", "trace"):
            try:
                pred = bounds_mod.prior_bound(source, norm, result.optimal, params)
            except bounds_mod.UnsupportedBoundError:
                continue
            obs_mean = float(np.mean([o.by_name(norm) for o in observed]))
            ratio = pred / obs_mean if obs_mean > 0 else float("inf")
            rows.append((f"prior:{source}", ell, norm, "", pred, obs_mean, ratio))
    return rows


def report(result, out_dir, predictors=False):
    """Write the report files for one experiment.

    Emits ``per_trial.csv``, ``summary.csv``, and ``plot_data.csv``;
    with ``predictors`` also ``pred_obs.csv``.  Returns the paths.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    per_trial = os.path.join(out_dir, "per_trial.csv")
    rows = []
    for rec in result.records:
        if rec.failed:
            rows.append(
                (rec.method, rec.mode, rec.ell, rec.trial_index,
                 "nan", "nan", "nan", 0.0, 0.0, 0.0, "false")
            )
            continue
        rows.append(
            (
                rec.method,
                rec.mode,
                rec.ell,
                rec.trial_index,
                rec.ratios.spectral,
                rec.ratios.frobenius,
                rec.ratios.trace,
                rec.wall_times["distribution_build"],
                rec.wall_times["sketch_build"],
                rec.wall_times["approx_build"],
                "true" if rec.full_row_rank else "false",
            )
        )
    _write_csv(per_trial, PER_TRIAL_COLUMNS.split(","), rows)
    paths["per_trial"] = per_trial

    summary = os.path.join(out_dir, "summary.csv")
    summary_rows = [
        (r["method"], r["mode"], r["ell"], r["norm"], r["min"], r["mean"], r["max"])
        for r in summarize(result.records)
    ]
    _write_csv(
        summary, ["method", "mode", "ell", "norm", "min", "mean", "max"], summary_rows
    )
    paths["summary"] = summary

    plot = os.path.join(out_dir, "plot_data.csv")
    plot_rows = [
        (r["method"], r["mode"], r["norm"], r["ell"], r["mean"])
        for r in summarize(result.records)
    ]
    _write_csv(plot, ["method", "mode", "norm", "ell", "mean_ratio"], plot_rows)
    paths["plot_data"] = plot

    if predictors:
        pred = os.path.join(out_dir, "pred_obs.csv")
        _write_csv(
            pred,
            ["method", "ell", "norm", "epsilon", "predicted", "observed_mean",
             "pred_over_obs"],
            _pred_obs_rows(result),
        )
        paths["pred_obs"] = pred
    return paths
