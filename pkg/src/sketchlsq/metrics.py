"""Accuracy metrics and evaluators for the solver error bounds.

The headline metric is the optimal backward error: the smallest
Frobenius norm of a joint perturbation [dA, db] that makes a candidate x
the exact least-squares minimizer of the perturbed problem. It reduces
to a smallest-singular-value computation; a reduced form keeps that
computation at (n+1) x (2n+1) when m is large. A derivative-free
numerical minimizer over the perturbation space serves as an independent
oracle on tiny instances, gating trust in the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .linalg import UNIT_ROUNDOFF, householder_qr, singular_values
from .sketching import SketchOperator, apply_sketch, materialize


def relative_residual(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> float:
    """||A x - b||_2 / ||b||_2."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        raise ValueError("relative residual undefined for b = 0")
    return float(np.linalg.norm(a @ x - b)) / bnorm


def forward_error(x: np.ndarray, xstar: np.ndarray) -> float:
    """||x - x*||_2 / ||x*||_2."""
    xstar = np.asarray(xstar, dtype=np.float64)
    xnorm = float(np.linalg.norm(xstar))
    if xnorm == 0.0:
        raise ValueError("forward error undefined for xstar = 0")
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64) - xstar)) / xnorm


def forward_error_reference(kappa: float, noise_norm: float) -> float:
    """Expected forward-error magnitude kappa*u*(1 + kappa*||e||) for a
    backward-stable solver on a problem with condition number kappa."""
    return kappa * UNIT_ROUNDOFF * (1.0 + kappa * noise_norm)


def optimal_backward_error(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> float:
    """Smallest ||[dA, db]||_F making x the exact minimizer of the perturbed problem.

    Closed form: with r = b - A x, p = r/||r||, phi = ||r||/sqrt(1 + ||x||^2),
    the value is min(phi, sigma_min([A, phi (I - p p^T)])). For m > n + 1 the
    sigma_min is taken of an (n+1) x (2n+1) reduction built from a QR of A,
    which avoids forming the m x (m+n) block. An exactly consistent x
    returns 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    m, n = a.shape
    r = b - a @ x
    rnorm = float(np.linalg.norm(r))
    if rnorm == 0.0:
        return 0.0
    phi = rnorm / np.sqrt(1.0 + float(x @ x))
    p = r / rnorm
    if m > n + 1:
        q, ra = np.linalg.qr(a)
        c = q.T @ p
        rho = float(np.linalg.norm(p - q @ c))
        # p = Q c + rho q_perp: in the basis [Q, q_perp] the block
        # [A, phi (I - p p^T)] keeps only n+1 nontrivial rows
        w = np.concatenate([c, [rho]])
        ra_ext = np.vstack([ra, np.zeros((1, n))])
        proj = np.eye(n + 1) - np.outer(w, w)
        kmat = np.hstack([ra_ext, phi * proj])
    else:
        kmat = np.hstack([a, phi * (np.eye(m) - np.outer(p, p))])
    smin = float(singular_values(kmat)[-1])
    return min(phi, smin)


def optimal_backward_error_direct(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> float:
    """Same value as optimal_backward_error via the full m x (m+n) block.

    O(m^2 (m+n)) and memory-heavy; kept as an independent route for
    validating the reduced computation.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    m = a.shape[0]
    r = b - a @ x
    rnorm = float(np.linalg.norm(r))
    if rnorm == 0.0:
        return 0.0
    phi = rnorm / np.sqrt(1.0 + float(x @ x))
    p = r / rnorm
    kmat = np.hstack([a, phi * (np.eye(m) - np.outer(p, p))])
    smin = float(singular_values(kmat)[-1])
    return min(phi, smin)


def backward_error_oracle(
    a: np.ndarray,
    b: np.ndarray,
    x: np.ndarray,
    n_random_starts: int = 1,
    rng: np.random.Generator | None = None,
    return_status: bool = False,
):
    """Numerically minimize ||[dA, db]||_F under the perturbed normal equations.

    Constrained descent (SLSQP) over the raw (dA, db) entries from several
    starts: zero, a db-only feasible point, the rank-one feasible point of
    norm ||r||/sqrt(1+||x||^2), and random ones. Intended for m <= 10,
    n <= 3 as an independent check on the closed form; returns the best
    feasible value found (an upper bound on the true optimum). With
    return_status=True also reports whether any start converged feasibly.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    m, n = a.shape
    if rng is None:
        rng = np.random.default_rng(0)

    def constraint(v: np.ndarray) -> np.ndarray:
        da = v[: m * n].reshape(m, n)
        db = v[m * n :]
        a2 = a + da
        return a2.T @ (b + db - a2 @ x)

    r = b - a @ x
    scale = max(1.0, float(np.linalg.norm(a)) * (float(np.linalg.norm(b)) + 1.0))
    feas_tol = 1e-9 * scale

    starts = [np.zeros(m * n + m)]
    q, _ = np.linalg.qr(a)
    db_only = np.concatenate([np.zeros(m * n), a @ x - q @ (q.T @ b)])
    starts.append(db_only)
    denom = 1.0 + float(x @ x)
    rank_one = np.concatenate([np.outer(r, x).ravel() / denom, -r / denom])
    starts.append(rank_one)
    spread = 0.1 * max(float(np.linalg.norm(r)), 1e-8)
    for _ in range(n_random_starts):
        starts.append(spread * rng.standard_normal(m * n + m))

    best = float("inf")
    any_ok = False
    for v0 in starts:
        res = scipy.optimize.minimize(
            lambda v: float(v @ v),
            v0,
            jac=lambda v: 2.0 * v,
            method="SLSQP",
            constraints=[{"type": "eq", "fun": constraint}],
            options={"maxiter": 600, "ftol": 1e-20},
        )
        if float(np.linalg.norm(constraint(res.x))) <= feas_tol:
            any_ok = True
            best = min(best, float(np.sqrt(res.fun)))
    if not any_ok:
        # no start reached feasibility: fall back to the feasible starts' own norms
        best = min(float(np.linalg.norm(db_only)), float(np.linalg.norm(rank_one)))
    if return_status:
        return best, any_ok
    return best


def gamma(k: float) -> float:
    """k u / (1 - k u), the standard accumulated-rounding factor."""
    ku = k * UNIT_ROUNDOFF
    if ku >= 1.0:
        return float("inf")
    return ku / (1.0 - ku)


def gamma_tilde(k: float, c: float = 10.0) -> float:
    """c k u / (1 - c k u): gamma with the small constant c absorbed."""
    return gamma(c * k)


@dataclass(frozen=True)
class BoundReport:
    """Evaluated theoretical quantities for one (A, sketch, R, Y) instance.

    factor_error_coeff bounds the sketched-QR error: ||E||_2 <= coeff *
    ||S||_2 ||A||_2 for the computed triangular factor. factor_error_bound
    and apply_error_bound bound the relative errors of the triangular
    factor and of forming Y = A R^{-1} (via coeff * k_S * kappa_A and the
    triangular-solve propagation formula). backsub_error_factor is the
    relative perturbation factor phi of solves against the computed R.
    kappa_y_bound = 4 kappa_SQA + 1 is the guaranteed cap on kappa(Y) when
    the assumption flags hold. solution_backward_bound bounds the backward
    perturbation ||dA||_2 of the full pipeline's solution, taking the
    iterative solve to be backward stable to unit roundoff on Y.
    sigma_conservative is the worst-case-analysis smoothing scale
    52 ||A||_2 k_S s m sqrt(n) u.
    """

    m: int
    n: int
    s: int
    kappa_A: float
    kappa_SQA: float
    k_S: float
    factor_error_coeff: float
    factor_error_bound: float
    apply_error_bound: float
    backsub_error_factor: float
    kappa_y_bound: float
    kappa_y_measured: float
    kappa_r_measured: float
    solution_backward_bound: float
    sigma_conservative: float
    gamma_tilde_c: float
    assumption_embedding: bool
    assumption_dims: bool
    assumption_kappa: bool
    assumption_smoothing_dims: bool

    @property
    def assumptions_hold(self) -> bool:
        """All hypotheses of the kappa_y_bound guarantee."""
        return self.assumption_embedding and self.assumption_dims and self.assumption_kappa


def evaluate_bounds(
    a: np.ndarray,
    sketch: SketchOperator,
    r_hat: np.ndarray,
    y_hat: np.ndarray,
    known_kappa: float | None = None,
    gamma_c: float = 10.0,
) -> BoundReport:
    """Fill a BoundReport for one solver instance.

    known_kappa should be the constructed condition number when available;
    an SVD of A cannot resolve kappa beyond ~1/u.
    """
    a = np.asarray(a, dtype=np.float64)
    m, n = a.shape
    s = sketch.s
    u = UNIT_ROUNDOFF

    sv_a = singular_values(a)
    anorm = float(sv_a[0])
    kappa_a = float(known_kappa) if known_kappa is not None else float(sv_a[0] / sv_a[-1])

    qa = householder_qr(a).q_economy()
    sqa_sv = singular_values(apply_sketch(sketch, qa))
    kappa_sqa = float(sqa_sv[0] / sqa_sv[-1])
    if sketch.kind == "srct":
        # rows of the operator are orthogonal with norm sqrt(m/s) exactly
        s_norm = float(sketch.scale)
    else:
        s_norm = float(singular_values(materialize(sketch))[0])
    k_s = s_norm / float(sqa_sv[-1])

    g_m = gamma(m)
    g_n = gamma(n)
    gt_sn = gamma_tilde(s * n, c=gamma_c)
    coeff = np.sqrt(s * n) * g_m + np.sqrt(n) * gt_sn * (1.0 + np.sqrt(s * n) * g_m)

    eps1 = coeff * k_s * kappa_a
    prod = kappa_a * kappa_sqa
    denom = (1.0 - eps1 - np.sqrt(n) * g_n * (prod + eps1)) * (1.0 - eps1)
    if eps1 < 1.0 and denom > 0.0:
        eps2 = n * g_n * kappa_sqa * (prod + eps1) * (1.0 + eps1) / denom
    else:
        eps2 = float("inf")

    sv_r = singular_values(r_hat)
    kappa_r = float(sv_r[0] / sv_r[-1]) if sv_r[-1] > 0 else float("inf")
    phi_denom = 1.0 - np.sqrt(n) * g_n * kappa_r
    phi = n * g_n * kappa_r / phi_denom if phi_denom > 0.0 else float("inf")

    sv_y = singular_values(y_hat)
    kappa_y = float(sv_y[0] / sv_y[-1]) if sv_y[-1] > 0 else float("inf")
    dyhat_surrogate = u * float(sv_y[0])
    backward_bound = s_norm * anorm * (
        6.04 * n * g_n / float(sqa_sv[-1]) + 2.01 * dyhat_surrogate
    )

    return BoundReport(
        m=m,
        n=n,
        s=s,
        kappa_A=kappa_a,
        kappa_SQA=kappa_sqa,
        k_S=k_s,
        factor_error_coeff=float(coeff),
        factor_error_bound=float(eps1),
        apply_error_bound=float(eps2),
        backsub_error_factor=float(phi),
        kappa_y_bound=4.0 * kappa_sqa + 1.0,
        kappa_y_measured=kappa_y,
        kappa_r_measured=kappa_r,
        solution_backward_bound=float(backward_bound),
        sigma_conservative=52.0 * anorm * k_s * s * m * np.sqrt(n) * u,
        gamma_tilde_c=gamma_c,
        assumption_embedding=kappa_sqa < 49.0,
        assumption_dims=(n * n * u < 1.0 / 201.0) and (m / n + np.sqrt(n) > 200.0),
        assumption_kappa=kappa_a < 1.0 / (3.0 * coeff * k_s),
        assumption_smoothing_dims=s * m * u < 1.0 / 67.0,
    )
