"""Joint FIR soft-sensor estimation with fusion and sparsity penalties."""

import json as _json

from ._core import (  # noqa: F401
    ConvergenceError,
    DataError,
    Error,
    ModelStructure,
    NumericalError,
    PreconditionError,
    RegressionProblem,
    adjusted_rand_index,
    build_regressor,
    coalescence_certificate,
    compute_bounds,
    fit_metric,
    kmeans,
    lambda2_max,
    ls_fit,
    objective,
    pooled_ls_fit,
    prox_block_l2,
    prox_l1,
    solve,
    solve_oracle,
    synthesize,
)
from ._core import run_pipeline as _run_pipeline


def run_pipeline(manifest, taps, k=2, seed=0, fusion="l2", threads=1):
    """Full pipeline on a manifest; returns the report as a dict."""
    return _json.loads(_run_pipeline(str(manifest), taps, k, seed, fusion, threads))


__version__ = "0.1.0"
