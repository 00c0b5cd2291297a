"""End-to-end least-squares solvers built on sketching plus LSQR.

Four pipelines share one skeleton (sketch A, factor the sketch, iterate):

* sketch_and_precondition: LSQR on A with right preconditioner R^{-1},
  substitutions re-run every iteration.
* sketch_and_apply: form Y = A R^{-1} once, LSQR on Y unpreconditioned.
* smoothed_sketch_and_apply: perturb A by sigma * G / sqrt(m) first, then
  sketch-and-apply the perturbed matrix.
* master_solve: sketch-and-apply, falling back to the smoothed pipeline
  (same sketch operator) when the first pass fails to converge or stalls.

hhqr_direct is the dense Householder-QR baseline the others are judged
against. All pipelines accept an integer seed (substreams are derived for
the sketch, the smoothing perturbation, and the norm estimator, so runs
are reproducible field by field) or a live Generator for ad-hoc use.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from ._rng import NORM_STREAM, SKETCH_STREAM, SMOOTH_STREAM, substream
from .errors import ConfigError, DimensionError
from .linalg import (
    UNIT_ROUNDOFF,
    estimate_spectral_norm,
    householder_qr,
    singular_values,
    solve_lower_from_rT,
    solve_upper_triangular,
)
from .lsqr import LsqrHistory, lsqr_solve, matrix_operator, right_preconditioned_operator
from .metrics import optimal_backward_error
from .sketching import SketchOperator, apply_sketch, make_gaussian_sketch, make_srct_sketch

RngLike = Union[int, np.integer, np.random.Generator]


@dataclass(frozen=True)
class SketchConfig:
    """Sketch kind and size: s = round(oversample * n) rows."""

    kind: str = "srct"
    oversample: float = 8.0

    def validate(self, m: int, n: int) -> int:
        if self.kind not in ("srct", "gaussian"):
            raise ConfigError(f"sketch kind must be 'srct' or 'gaussian', got {self.kind!r}")
        s = int(round(self.oversample * n))
        if s <= n:
            raise ConfigError(
                f"oversample={self.oversample} gives s={s} <= n={n}; need oversample > 1 + 1/n"
            )
        if s >= m:
            raise ConfigError(f"oversample={self.oversample} gives s={s} >= m={m}")
        return s


@dataclass(frozen=True)
class LsqrConfig:
    """Stopping tolerance and iteration cap (None = max(100, 4n))."""

    tol: float = 1e-14
    maxit: Optional[int] = None

    def validate(self) -> None:
        if not (self.tol > 0):
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.maxit is not None and self.maxit < 1:
            raise ConfigError(f"maxit must be >= 1, got {self.maxit}")


@dataclass(frozen=True)
class TraceConfig:
    """What to record at every iterate, all measured on the original (a, b).

    backward_schedule maps an iteration index to whether the (expensive)
    optimal backward error is computed there; skipped entries hold NaN.
    The final iterate is always filled in.
    """

    xstar: Optional[np.ndarray] = None
    backward_error: bool = False
    backward_schedule: Optional[Callable[[int], bool]] = None


@dataclass
class SolveReport:
    """Everything a pipeline run produced.

    Traces are parallel arrays, one entry per LSQR iterate (index 0 is the
    zero iterate); entries not computed are NaN. sigma_used is nonzero
    exactly when smoothing_applied is true.
    """

    x: np.ndarray
    history: LsqrHistory
    converged: bool
    solver: str
    smoothing_applied: bool = False
    sigma_used: float = 0.0
    seed: Optional[int] = None
    wall_time: float = 0.0
    rel_residual_trace: Optional[np.ndarray] = None
    fwd_error_trace: Optional[np.ndarray] = None
    backward_error_trace: Optional[np.ndarray] = None
    kappa_r: Optional[float] = None

    @property
    def iterations(self) -> int:
        return self.history.iterations

    @property
    def final_rel_residual(self) -> Optional[float]:
        if self.rel_residual_trace is None or len(self.rel_residual_trace) == 0:
            return None
        return float(self.rel_residual_trace[-1])


def _seed_of(rng: RngLike) -> Optional[int]:
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    return None


def _stream(rng: RngLike, key: int) -> np.random.Generator:
    """Named substream for an integer seed; a live Generator is used as-is."""
    if isinstance(rng, (int, np.integer)):
        return substream(int(rng), key)
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"rng must be an int seed or numpy Generator, got {type(rng).__name__}")


def _check_problem(a, b) -> tuple[np.ndarray, np.ndarray, int, int]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"a must be 2-d, got ndim={a.ndim}")
    m, n = a.shape
    if m < n:
        raise DimensionError(f"need m >= n, got {m} x {n}")
    if b.shape != (m,):
        raise DimensionError(f"b has shape {b.shape}, expected ({m},)")
    return a, b, m, n


def sketched_triangular_factor(
    a: np.ndarray, sketch_cfg: SketchConfig, rng: np.random.Generator
) -> tuple[np.ndarray, SketchOperator]:
    """Draw a sketch, compute B = S A, and return (R from HHQR of B, sketch)."""
    m, n = a.shape
    s = sketch_cfg.validate(m, n)
    if sketch_cfg.kind == "gaussian":
        sk = make_gaussian_sketch(s, m, rng)
    else:
        sk = make_srct_sketch(s, m, rng)
    b_sk = apply_sketch(sk, a)
    r = householder_qr(b_sk).r
    return r, sk


class _TraceCollector:
    """Observer that evaluates metrics on back-mapped iterates."""

    def __init__(self, a, b, cfg: TraceConfig, to_x: Callable[[np.ndarray], np.ndarray]):
        self.a = a
        self.b = b
        self.bnorm = float(np.linalg.norm(b))
        self.cfg = cfg
        self.to_x = to_x
        self.rel: list[float] = []
        self.fwd: list[float] = []
        self.bwd: list[float] = []
        xstar = cfg.xstar
        self.xstar = None if xstar is None else np.asarray(xstar, dtype=np.float64)
        self.xstar_norm = None if self.xstar is None else float(np.linalg.norm(self.xstar))
        self.schedule = cfg.backward_schedule or (lambda k: True)

    def __call__(self, k: int, z: np.ndarray) -> None:
        x = self.to_x(z)
        rnorm = float(np.linalg.norm(self.b - self.a @ x))
        self.rel.append(rnorm / self.bnorm if self.bnorm > 0 else np.nan)
        if self.xstar is not None:
            self.fwd.append(
                float(np.linalg.norm(x - self.xstar)) / self.xstar_norm
                if self.xstar_norm > 0
                else np.nan
            )
        if self.cfg.backward_error:
            self.bwd.append(
                optimal_backward_error(self.a, self.b, x) if self.schedule(k) else np.nan
            )

    def attach(self, report: SolveReport) -> None:
        report.rel_residual_trace = np.asarray(self.rel)
        if self.xstar is not None:
            report.fwd_error_trace = np.asarray(self.fwd)
        if self.cfg.backward_error:
            bwd = np.asarray(self.bwd)
            if bwd.size and np.isnan(bwd[-1]):
                bwd[-1] = optimal_backward_error(self.a, self.b, report.x)
            report.backward_error_trace = bwd


def _kappa_tri(r: np.ndarray) -> float:
    sv = singular_values(r)
    return float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")


def sketch_and_precondition(
    a: np.ndarray,
    b: np.ndarray,
    sketch_cfg: SketchConfig = SketchConfig(),
    lsqr_cfg: LsqrConfig = LsqrConfig(),
    rng: RngLike = 0,
    trace: Optional[TraceConfig] = None,
) -> SolveReport:
    """LSQR on A through the right preconditioner R^{-1} from a sketched QR."""
    a, b, m, n = _check_problem(a, b)
    lsqr_cfg.validate()
    t0 = time.perf_counter()
    r, _ = sketched_triangular_factor(a, sketch_cfg, _stream(rng, SKETCH_STREAM))
    op = right_preconditioned_operator(a, r)
    collector = None
    if trace is not None:
        collector = _TraceCollector(a, b, trace, lambda y: solve_upper_triangular(r, y))
    y, hist, conv = lsqr_solve(op, b, tol=lsqr_cfg.tol, maxit=lsqr_cfg.maxit, observer=collector)
    x = solve_upper_triangular(r, y)
    report = SolveReport(
        x=x,
        history=hist,
        converged=conv,
        solver="sap",
        seed=_seed_of(rng),
        wall_time=time.perf_counter() - t0,
        kappa_r=_kappa_tri(r),
    )
    if collector is not None:
        collector.attach(report)
    return report


def _saa_on(
    a: np.ndarray,
    b: np.ndarray,
    sk: SketchOperator,
    lsqr_cfg: LsqrConfig,
    trace_collector_for,
) -> tuple[np.ndarray, LsqrHistory, bool, np.ndarray, Optional[_TraceCollector]]:
    """Core of sketch-and-apply given an already-drawn sketch operator.

    Returns (x, history, converged, r_factor, collector). The caller
    chooses what (a, b) the collector measures against, which is how the
    smoothed pipeline reports errors on the original problem while
    iterating on the perturbed one.
    """
    b_sk = apply_sketch(sk, a)
    r = householder_qr(b_sk).r
    # rows of Y solve R^T y_i = a_i; one batched forward substitution
    y = solve_lower_from_rT(r, a.T).T
    collector = trace_collector_for(r)
    z, hist, conv = lsqr_solve(
        matrix_operator(y), b, tol=lsqr_cfg.tol, maxit=lsqr_cfg.maxit, observer=collector
    )
    x = solve_upper_triangular(r, z)
    return x, hist, conv, r, collector


def sketch_and_apply(
    a: np.ndarray,
    b: np.ndarray,
    sketch_cfg: SketchConfig = SketchConfig(),
    lsqr_cfg: LsqrConfig = LsqrConfig(),
    rng: RngLike = 0,
    trace: Optional[TraceConfig] = None,
) -> SolveReport:
    """Form Y = A R^{-1} explicitly and run unpreconditioned LSQR on it."""
    a, b, m, n = _check_problem(a, b)
    lsqr_cfg.validate()
    t0 = time.perf_counter()
    s = sketch_cfg.validate(m, n)
    stream = _stream(rng, SKETCH_STREAM)
    sk = (
        make_gaussian_sketch(s, m, stream)
        if sketch_cfg.kind == "gaussian"
        else make_srct_sketch(s, m, stream)
    )

    def collector_for(r):
        if trace is None:
            return None
        return _TraceCollector(a, b, trace, lambda z: solve_upper_triangular(r, z))

    x, hist, conv, r, collector = _saa_on(a, b, sk, lsqr_cfg, collector_for)
    report = SolveReport(
        x=x,
        history=hist,
        converged=conv,
        solver="saa",
        seed=_seed_of(rng),
        wall_time=time.perf_counter() - t0,
        kappa_r=_kappa_tri(r),
    )
    if collector is not None:
        collector.attach(report)
    return report


def smooth_matrix(a: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """A + sigma * G / sqrt(m) with G i.i.d. standard Gaussian."""
    a = np.asarray(a, dtype=np.float64)
    m = a.shape[0]
    if sigma == 0.0:
        return a
    return a + (sigma / np.sqrt(m)) * rng.standard_normal(a.shape)


def resolve_sigma(
    sigma_rule: Union[str, float],
    a: np.ndarray,
    norm_rng: np.random.Generator,
    sk: Optional[SketchOperator] = None,
    target_kappa: float = 1e6,
) -> float:
    """Perturbation scale for smoothing.

    Rules: "default" = 10 ||A||_2 u; "target-kappa" = 8.25 ||A||_2 / target_kappa
    (drives kappa below target_kappa with high probability); "conservative" =
    52 ||A||_2 k(S) s m sqrt(n) u (the large worst-case-analysis scale, for
    diagnostics). A float is used verbatim. ||A||_2 comes from a 20-step
    power method; its <= 2x error is covered by the rules' safety factors.
    """
    if isinstance(sigma_rule, (int, float)) and not isinstance(sigma_rule, bool):
        sigma = float(sigma_rule)
        if sigma < 0:
            raise ConfigError(f"sigma must be nonnegative, got {sigma}")
        return sigma
    anorm = estimate_spectral_norm(a, norm_rng)
    if sigma_rule == "default":
        return 10.0 * anorm * UNIT_ROUNDOFF
    if sigma_rule == "target-kappa":
        return 8.25 * anorm / target_kappa
    if sigma_rule == "conservative":
        if sk is None:
            raise ConfigError("sigma_rule 'conservative' needs the sketch operator")
        m, n = a.shape
        qa = householder_qr(a).q_economy()
        s_norm = singular_values(
            sk.gaussian_data if sk.kind == "gaussian" else apply_sketch(sk, np.eye(m))
        )[0]
        sqa_min = singular_values(apply_sketch(sk, qa))[-1]
        k_s = float(s_norm / sqa_min)
        return 52.0 * anorm * k_s * sk.s * m * np.sqrt(n) * UNIT_ROUNDOFF
    raise ConfigError(
        f"unknown sigma rule {sigma_rule!r}; expected 'default', 'target-kappa', "
        "'conservative', or a number"
    )


def smoothed_sketch_and_apply(
    a: np.ndarray,
    b: np.ndarray,
    sigma_rule: Union[str, float] = "default",
    sketch_cfg: SketchConfig = SketchConfig(),
    lsqr_cfg: LsqrConfig = LsqrConfig(),
    rng: RngLike = 0,
    trace: Optional[TraceConfig] = None,
    target_kappa: float = 1e6,
) -> SolveReport:
    """Sketch-and-apply on the Gaussian-perturbed matrix A + sigma G / sqrt(m).

    Traces still measure against the caller's (a, b); only the iteration
    happens on the perturbed matrix. With an integer seed the sketch
    substream matches sketch_and_apply's, so sigma = 0 reproduces that
    run exactly.
    """
    a, b, m, n = _check_problem(a, b)
    lsqr_cfg.validate()
    t0 = time.perf_counter()
    s = sketch_cfg.validate(m, n)
    stream = _stream(rng, SKETCH_STREAM)
    sk = (
        make_gaussian_sketch(s, m, stream)
        if sketch_cfg.kind == "gaussian"
        else make_srct_sketch(s, m, stream)
    )
    sigma = resolve_sigma(
        sigma_rule, a, _stream(rng, NORM_STREAM), sk=sk, target_kappa=target_kappa
    )
    a_tilde = smooth_matrix(a, sigma, _stream(rng, SMOOTH_STREAM))

    def collector_for(r):
        if trace is None:
            return None
        return _TraceCollector(a, b, trace, lambda z: solve_upper_triangular(r, z))

    x, hist, conv, r, collector = _saa_on(a_tilde, b, sk, lsqr_cfg, collector_for)
    report = SolveReport(
        x=x,
        history=hist,
        converged=conv,
        solver="smoothed_saa",
        smoothing_applied=sigma > 0.0,
        sigma_used=sigma,
        seed=_seed_of(rng),
        wall_time=time.perf_counter() - t0,
        kappa_r=_kappa_tri(r),
    )
    if collector is not None:
        collector.attach(report)
    return report


def _stagnated(hist: LsqrHistory, window: int = 20, min_improvement: float = 0.01) -> bool:
    """True when the residual estimate improved < 1% over the last window iterations."""
    res = hist.resnorm_est
    if len(res) <= window:
        return False
    old, new = res[-1 - window], res[-1]
    if old <= 0.0:
        return False
    return new > (1.0 - min_improvement) * old


def master_solve(
    a: np.ndarray,
    b: np.ndarray,
    sketch_cfg: SketchConfig = SketchConfig(),
    lsqr_cfg: LsqrConfig = LsqrConfig(),
    rng: RngLike = 0,
    trace: Optional[TraceConfig] = None,
    stagnation_window: int = 20,
) -> SolveReport:
    """Sketch-and-apply with an automatic smoothing fallback.

    Phase 1 runs plain sketch-and-apply. If it converged and did not stall,
    its solution is returned. Otherwise the same sketch operator is applied
    to the smoothed matrix (sigma = 10 ||A||_2 u) and the better of the two
    iterates, judged by residual on the original problem, is returned.
    kappa_r carries the phase-1 triangular factor's condition number as a
    diagnostic of how ill conditioned A itself was.
    """
    a, b, m, n = _check_problem(a, b)
    lsqr_cfg.validate()
    t0 = time.perf_counter()
    s = sketch_cfg.validate(m, n)
    stream = _stream(rng, SKETCH_STREAM)
    sk = (
        make_gaussian_sketch(s, m, stream)
        if sketch_cfg.kind == "gaussian"
        else make_srct_sketch(s, m, stream)
    )

    def collector_for(r):
        if trace is None:
            return None
        return _TraceCollector(a, b, trace, lambda z: solve_upper_triangular(r, z))

    x1, hist1, conv1, r1, coll1 = _saa_on(a, b, sk, lsqr_cfg, collector_for)
    kappa_r = _kappa_tri(r1)

    if conv1 and not _stagnated(hist1, stagnation_window):
        report = SolveReport(
            x=x1,
            history=hist1,
            converged=True,
            solver="master",
            seed=_seed_of(rng),
            wall_time=time.perf_counter() - t0,
            kappa_r=kappa_r,
        )
        if coll1 is not None:
            coll1.attach(report)
        return report

    sigma = resolve_sigma("default", a, _stream(rng, NORM_STREAM))
    a_tilde = smooth_matrix(a, sigma, _stream(rng, SMOOTH_STREAM))
    x2, hist2, conv2, _, coll2 = _saa_on(a_tilde, b, sk, lsqr_cfg, collector_for)

    res1 = float(np.linalg.norm(b - a @ x1))
    res2 = float(np.linalg.norm(b - a @ x2))
    use_smoothed = res2 <= res1 or conv2 and not conv1
    if use_smoothed:
        report = SolveReport(
            x=x2,
            history=hist2,
            converged=conv2,
            solver="master",
            smoothing_applied=True,
            sigma_used=sigma,
            seed=_seed_of(rng),
            wall_time=time.perf_counter() - t0,
            kappa_r=kappa_r,
        )
        if coll2 is not None:
            coll2.attach(report)
        return report
    report = SolveReport(
        x=x1,
        history=hist1,
        converged=conv1,
        solver="master",
        seed=_seed_of(rng),
        wall_time=time.perf_counter() - t0,
        kappa_r=kappa_r,
    )
    if coll1 is not None:
        coll1.attach(report)
    return report


def hhqr_direct(
    a: np.ndarray,
    b: np.ndarray,
    trace: Optional[TraceConfig] = None,
) -> SolveReport:
    """Dense Householder-QR least squares: x = R^{-1} (Q^T b)[:n]."""
    a, b, m, n = _check_problem(a, b)
    t0 = time.perf_counter()
    qr = householder_qr(a)
    qtb = qr.apply_qt(b)
    x = solve_upper_triangular(qr.r, qtb[:n])
    resid = b - a @ x
    hist = LsqrHistory(
        resnorm_est=[float(np.linalg.norm(resid))],
        normar_est=[float(np.linalg.norm(a.T @ resid))],
    )
    report = SolveReport(
        x=x,
        history=hist,
        converged=True,
        solver="hhqr_direct",
        wall_time=time.perf_counter() - t0,
        kappa_r=_kappa_tri(qr.r),
    )
    if trace is not None:
        collector = _TraceCollector(a, b, trace, lambda z: z)
        collector(0, x)
        collector.attach(report)
    return report
