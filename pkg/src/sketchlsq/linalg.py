"""Dense factorization kernels backed by LAPACK.

Householder QR keeps the implicit reflector representation (geqrf/ormqr)
so Q is never materialized unless asked for. Triangular solves go through
``scipy.linalg.solve_triangular`` (dtrtrs). The SVD wrapper retries with
the QR-iteration driver when the divide-and-conquer one fails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import get_lapack_funcs

from .errors import DimensionError, SingularMatrixError, SvdError

UNIT_ROUNDOFF = 2.0**-53


def _as_float_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d array, got ndim={a.ndim}")
    return a


@dataclass(frozen=True)
class QrFactors:
    """Economy QR factorization with Q held as Householder reflectors.

    ``reflectors`` is the LAPACK geqrf output: R in the upper triangle and
    the reflector vectors below the diagonal, with scalar factors ``tau``.
    """

    reflectors: np.ndarray
    tau: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.reflectors.shape

    @property
    def r(self) -> np.ndarray:
        """The n x n upper-triangular factor."""
        n = self.reflectors.shape[1]
        return np.triu(self.reflectors[:n])

    def _ormqr(self, trans: str, c: np.ndarray) -> np.ndarray:
        m = self.reflectors.shape[0]
        c = np.asarray(c, dtype=np.float64)
        vec = c.ndim == 1
        c2 = np.asfortranarray(c.reshape(m, -1))
        (ormqr,) = get_lapack_funcs(("ormqr",), (self.reflectors,))
        work, info = ormqr("L", trans, self.reflectors, self.tau, c2, lwork=-1)[1:]
        if info != 0:
            raise RuntimeError(f"ormqr workspace query failed, info={info}")
        out, _, info = ormqr("L", trans, self.reflectors, self.tau, c2, lwork=int(work[0].real))
        if info != 0:
            raise RuntimeError(f"ormqr failed, info={info}")
        return out[:, 0] if vec else out

    def apply_q(self, c: np.ndarray) -> np.ndarray:
        """Q @ c without forming Q; c has m rows (or length m)."""
        return self._ormqr("N", c)

    def apply_qt(self, c: np.ndarray) -> np.ndarray:
        """Q^T @ c without forming Q."""
        return self._ormqr("T", c)

    def q_economy(self) -> np.ndarray:
        """Materialize the m x n orthonormal factor."""
        m, n = self.reflectors.shape
        eye = np.zeros((m, n))
        np.fill_diagonal(eye, 1.0)
        return self.apply_q(eye)


def householder_qr(a: np.ndarray) -> QrFactors:
    """Householder QR of a tall matrix (m >= n)."""
    a = _as_float_matrix(a)
    m, n = a.shape
    if m < n:
        raise DimensionError(f"householder_qr needs m >= n, got {m} x {n}")
    (geqrf,) = get_lapack_funcs(("geqrf",), (a,))
    qr_raw, tau, _, info = geqrf(np.asfortranarray(a))
    if info != 0:
        raise RuntimeError(f"geqrf failed, info={info}")
    return QrFactors(reflectors=qr_raw, tau=tau)


def _check_triangular(r: np.ndarray) -> np.ndarray:
    r = _as_float_matrix(r)
    if r.shape[0] != r.shape[1]:
        raise DimensionError(f"triangular factor must be square, got {r.shape}")
    diag = np.diag(r)
    zeros = np.flatnonzero(diag == 0.0)
    if zeros.size:
        raise SingularMatrixError(
            f"zero diagonal at index {zeros[0]} (min |diag| = 0); "
            "the factor is numerically rank deficient"
        )
    return r


def solve_upper_triangular(r: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Back substitution: solve R x = z for upper-triangular R."""
    r = _check_triangular(r)
    # finiteness scan skipped: zero diagonal is checked above and NaN/inf
    # inputs propagate into the output where callers can see them
    return sla.solve_triangular(
        r, np.asarray(z, dtype=np.float64), lower=False, check_finite=False
    )


def solve_lower_from_rT(r: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Forward substitution with the transpose: solve R^T x = rhs.

    R is stored upper-triangular; dtrtrs runs with trans='T' so no
    transposed copy is formed. A 2-d rhs is solved column by column.
    """
    r = _check_triangular(r)
    return sla.solve_triangular(
        r, np.asarray(rhs, dtype=np.float64), trans="T", lower=False, check_finite=False
    )


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD: u (m x k), sigma (k,) descending, v (n x k), k = min(m, n)."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def kappa(self) -> float:
        """sigma_max / sigma_min; inf when the smallest value is zero."""
        smin = self.sigma[-1]
        if smin == 0.0:
            return float("inf")
        return float(self.sigma[0] / smin)


def svd(a: np.ndarray) -> SvdFactors:
    """Thin SVD with a gesvd fallback when gesdd does not converge."""
    a = _as_float_matrix(a)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            u, s, vt = sla.svd(a, full_matrices=False, lapack_driver="gesvd")
        except Exception as exc:
            raise SvdError(f"SVD failed to converge on shape {a.shape}: {exc}") from exc
    return SvdFactors(u=u, sigma=s, v=vt.T)


def singular_values(a: np.ndarray) -> np.ndarray:
    """Singular values only (descending), same fallback policy as svd()."""
    a = _as_float_matrix(a)
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError:
        try:
            return sla.svd(a, compute_uv=False, lapack_driver="gesvd")
        except Exception as exc:
            raise SvdError(f"SVD failed to converge on shape {a.shape}: {exc}") from exc


def haar_orthonormal(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed m x n matrix with orthonormal columns.

    QR of a standard Gaussian matrix, with column signs fixed so the
    R diagonal is positive; without the correction the distribution
    depends on the QR sign convention and is not Haar.
    """
    if not (m >= n >= 1):
        raise DimensionError(f"haar_orthonormal needs m >= n >= 1, got {m} x {n}")
    g = rng.standard_normal((m, n))
    q, r = np.linalg.qr(g)
    d = np.diag(r).copy()
    d[d == 0.0] = 1.0
    return q * np.sign(d)


def estimate_spectral_norm(a: np.ndarray, rng: np.random.Generator, iters: int = 20) -> float:
    """Power-method estimate of ||A||_2 using iters passes over A^T A.

    A deliberate under-iterated estimate; callers that consume it
    (smoothing scale selection) tolerate a factor-2 error.
    """
    a = _as_float_matrix(a)
    v = rng.standard_normal(a.shape[1])
    nv = np.linalg.norm(v)
    if nv == 0.0 or not a.size:
        return 0.0
    v /= nv
    est = 0.0
    for _ in range(iters):
        w = a.T @ (a @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        est = np.sqrt(nw)
    return float(est)
