"""Scikit-learn style estimator facade over the solver pipelines."""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .errors import ConfigError, DimensionError
from .pipelines import (
    LsqrConfig,
    SketchConfig,
    hhqr_direct,
    master_solve,
    sketch_and_apply,
    sketch_and_precondition,
    smoothed_sketch_and_apply,
)

_SOLVERS = ("sap", "saa", "smoothed", "master", "qr")


class SketchedLeastSquares(RegressorMixin, BaseEstimator):
    """Least-squares regression via randomized sketching.

    Parameters mirror the pipeline configs: solver picks the pipeline
    ("master" falls back to a smoothed re-solve when the plain one fails
    to converge), sketch_kind/oversample size the sketch, tol/maxit drive
    LSQR, and random_state seeds the sketch and smoothing streams.

    After fit, coef_ holds the minimizer of ||X w - y||_2, report_ the
    full SolveReport, and n_iter_ the LSQR iteration count.
    """

    def __init__(
        self,
        solver: str = "master",
        sketch_kind: str = "srct",
        oversample: float = 8.0,
        tol: float = 1e-14,
        maxit: Optional[int] = None,
        sigma_rule="default",
        random_state: int = 0,
    ):
        self.solver = solver
        self.sketch_kind = sketch_kind
        self.oversample = oversample
        self.tol = tol
        self.maxit = maxit
        self.sigma_rule = sigma_rule
        self.random_state = random_state

    def fit(self, X, y) -> "SketchedLeastSquares":
        if self.solver not in _SOLVERS:
            raise ConfigError(f"solver must be one of {_SOLVERS}, got {self.solver!r}")
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2:
            raise DimensionError(f"X must be 2-d, got ndim={X.ndim}")
        if y.shape != (X.shape[0],):
            raise DimensionError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        sketch_cfg = SketchConfig(kind=self.sketch_kind, oversample=self.oversample)
        lsqr_cfg = LsqrConfig(tol=self.tol, maxit=self.maxit)
        seed = int(self.random_state)
        if self.solver == "sap":
            report = sketch_and_precondition(X, y, sketch_cfg, lsqr_cfg, seed)
        elif self.solver == "saa":
            report = sketch_and_apply(X, y, sketch_cfg, lsqr_cfg, seed)
        elif self.solver == "smoothed":
            report = smoothed_sketch_and_apply(X, y, self.sigma_rule, sketch_cfg, lsqr_cfg, seed)
        elif self.solver == "master":
            report = master_solve(X, y, sketch_cfg, lsqr_cfg, seed)
        else:
            report = hhqr_direct(X, y)
        self.coef_ = report.x
        self.report_ = report
        self.converged_ = report.converged
        self.n_iter_ = report.iterations
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise DimensionError(
                f"X must be 2-d with {self.n_features_in_} columns, got shape {X.shape}"
            )
        return X @ self.coef_
