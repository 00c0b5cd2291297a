"""Randomized least-squares solvers with numerical-stability instrumentation.

The library implements sketch-based solvers for min ||Ax - b||_2 (right-
preconditioned LSQR, explicit preconditioner application, Gaussian
smoothing, and an adaptive combination), the dense QR baseline, the
optimal backward-error metric, seeded problem generators, and an
experiment harness that writes per-iteration convergence curves as CSV.
"""

from .errors import ConfigError, DimensionError, SingularMatrixError, SvdError
from .estimators import SketchedLeastSquares
from .experiment import (
    CSV_HEADER,
    BenchEntry,
    ExperimentConfig,
    ExperimentRecord,
    bench,
    emit_csv,
    parse_csv,
    run_experiment,
)
from .linalg import (
    UNIT_ROUNDOFF,
    QrFactors,
    SvdFactors,
    estimate_spectral_norm,
    haar_orthonormal,
    householder_qr,
    singular_values,
    solve_lower_from_rT,
    solve_upper_triangular,
    svd,
)
from .lsqr import (
    LinearOperator,
    LsqrHistory,
    lsqr_solve,
    matrix_operator,
    right_preconditioned_operator,
)
from .metrics import (
    BoundReport,
    backward_error_oracle,
    evaluate_bounds,
    forward_error,
    forward_error_reference,
    gamma,
    gamma_tilde,
    optimal_backward_error,
    optimal_backward_error_direct,
    relative_residual,
)
from .pipelines import (
    LsqrConfig,
    SketchConfig,
    SolveReport,
    TraceConfig,
    hhqr_direct,
    master_solve,
    resolve_sigma,
    sketch_and_apply,
    sketch_and_precondition,
    sketched_triangular_factor,
    smooth_matrix,
    smoothed_sketch_and_apply,
)
from .problems import (
    LsProblem,
    column_rescale,
    gen_random_ls,
    kahan_matrix,
    load_problem,
    save_problem,
    vandermonde_scaled,
)
from .sketching import (
    SketchOperator,
    apply_sketch,
    make_gaussian_sketch,
    make_srct_sketch,
    materialize,
)

__version__ = "0.1.0"

__all__ = [
    "BenchEntry",
    "BoundReport",
    "CSV_HEADER",
    "ConfigError",
    "DimensionError",
    "ExperimentConfig",
    "ExperimentRecord",
    "LinearOperator",
    "LsProblem",
    "LsqrConfig",
    "LsqrHistory",
    "QrFactors",
    "SingularMatrixError",
    "SketchConfig",
    "SketchOperator",
    "SketchedLeastSquares",
    "SolveReport",
    "SvdError",
    "SvdFactors",
    "TraceConfig",
    "UNIT_ROUNDOFF",
    "apply_sketch",
    "backward_error_oracle",
    "bench",
    "column_rescale",
    "emit_csv",
    "estimate_spectral_norm",
    "evaluate_bounds",
    "forward_error",
    "forward_error_reference",
    "gamma",
    "gamma_tilde",
    "gen_random_ls",
    "haar_orthonormal",
    "hhqr_direct",
    "householder_qr",
    "kahan_matrix",
    "load_problem",
    "lsqr_solve",
    "make_gaussian_sketch",
    "make_srct_sketch",
    "master_solve",
    "materialize",
    "matrix_operator",
    "optimal_backward_error",
    "optimal_backward_error_direct",
    "parse_csv",
    "relative_residual",
    "resolve_sigma",
    "right_preconditioned_operator",
    "run_experiment",
    "save_problem",
    "singular_values",
    "sketch_and_apply",
    "sketch_and_precondition",
    "sketched_triangular_factor",
    "smooth_matrix",
    "smoothed_sketch_and_apply",
    "solve_lower_from_rT",
    "solve_upper_triangular",
    "svd",
    "vandermonde_scaled",
]
