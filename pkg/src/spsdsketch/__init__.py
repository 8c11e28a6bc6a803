"""Randomized low-rank approximation of SPSD matrices.

Sampling- and projection-based sketches of symmetric positive
semi-definite matrices under one model (``C = A^q S``,
``W = S.T A^{2q-1} S``, approximation ``C pinv(W) C.T``), fast leverage
score estimation, deterministic a-posteriori error certification, and a
reproducible benchmark harness.
"""

from .core import (
    DecompositionError,
    EigenPartition,
    LeverageProfile,
    NormTriple,
    SpsdMatrix,
    best_rank_k,
    eigendecompose,
    leverage_scores,
    norms,
    sqrt_projection_oracle,
    stable_rank,
    tail_norms,
)
from .sketching import (
    SamplingDistribution,
    SketchMatrix,
    dct_matrix,
    gaussian_sketch,
    leverage_sketch,
    srft_sketch,
    uniform_sketch,
)
from .builder import (
    Approximation,
    DegenerateSketchError,
    SpsdSketch,
    approximate,
    approximation_errors,
    build,
    pinched,
    prolonged,
)
from .bounds import (
    BoundInapplicableError,
    BoundReport,
    InteractionPair,
    UnsupportedBoundError,
    angle_diagnostics,
    det_bound_frobenius,
    det_bound_spectral,
    det_bound_trace,
    deterministic_bounds,
    interaction,
    prior_bound,
    sample_size,
    stochastic_bound,
)
from .levscores import (
    ApproxLeverage,
    approx_lev_frob,
    approx_lev_power,
    approx_lev_spectral,
    approx_lev_tall,
    exact_tall_leverage,
)
from .kernels import (
    Graph,
    PointCloud,
    linear_kernel,
    normalized_laplacian,
    rbf_kernel,
    sparse_rbf_kernel,
    whiten,
)
from .dataio import (
    DataFormatError,
    load_dataset,
    read_matrix_market,
    write_matrix_market,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    TrialRecord,
    report,
    run_experiment,
    summarize,
)

__version__ = "0.1.0"
