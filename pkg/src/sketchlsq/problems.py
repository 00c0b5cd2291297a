"""Seeded test-problem generators and problem file I/O.

gen_random_ls builds the controlled-spectrum family used throughout the
experiments: A = U diag(sigma) V^T with Haar factors and log-spaced
singular values, plus a noise component orthogonal to range(A) so the
minimal residual norm is exactly the requested noise level. The Kahan
and scaled-Vandermonde constructions supply reproducible matrices with
condition numbers beyond 1/u.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ._rng import as_generator
from .errors import DimensionError
from .linalg import haar_orthonormal


@dataclass
class LsProblem:
    """A least-squares instance with optional ground truth.

    When xstar and e are present, b = A xstar + e as computed, e is
    orthogonal to range(A) (represented by qa_basis), and
    kappa_by_construction records the designed condition number, which
    for kappa > ~1e15 cannot be recovered from A in double precision.
    """

    a: np.ndarray
    b: np.ndarray
    xstar: Optional[np.ndarray] = None
    e: Optional[np.ndarray] = None
    kappa_by_construction: Optional[float] = None
    qa_basis: Optional[np.ndarray] = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.a.shape

    @property
    def noise_norm(self) -> Optional[float]:
        if self.e is None:
            return None
        return float(np.linalg.norm(self.e))


def gen_random_ls(
    m: int,
    n: int,
    kappa: float,
    noise_norm: float,
    rng: Union[int, np.integer, np.random.Generator],
) -> LsProblem:
    """Random problem with log-spaced spectrum [1, 1/kappa] and orthogonal noise."""
    if not (m > n >= 1):
        raise DimensionError(f"need m > n >= 1, got m={m}, n={n}")
    if kappa < 1.0:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if noise_norm < 0.0:
        raise ValueError(f"noise_norm must be >= 0, got {noise_norm}")
    gen = as_generator(rng)
    u = haar_orthonormal(m, n, gen)
    v = haar_orthonormal(n, n, gen)
    sigma = np.logspace(0.0, -np.log10(kappa), n)
    a = (u * sigma) @ v.T
    xstar = gen.standard_normal(n)
    g = gen.standard_normal(m)
    e = g - u @ (u.T @ g)
    enorm = np.linalg.norm(e)
    e = e * (noise_norm / enorm) if enorm > 0 else np.zeros(m)
    b = a @ xstar + e
    return LsProblem(a=a, b=b, xstar=xstar, e=e, kappa_by_construction=float(kappa), qa_basis=u)


def kahan_matrix(m: int, n: int, theta: float) -> np.ndarray:
    """Upper-trapezoidal matrix with geometrically decaying rows.

    Row i (0-based, i < n) is sin(theta)^i * (0, ..., 0, 1, -cos(theta),
    ..., -cos(theta)); rows n..m-1 are zero. Nearly rank deficient for
    theta near 1: the smallest singular value decays like sin(theta)^n
    times a cluster gap, far below what column norms suggest.
    """
    if m < n:
        raise DimensionError(f"need m >= n, got m={m}, n={n}")
    s, c = np.sin(theta), np.cos(theta)
    k = np.triu(np.full((n, n), -c), k=1) + np.eye(n)
    k *= (s ** np.arange(n))[:, None]
    if m > n:
        k = np.vstack([k, np.zeros((m - n, n))])
    return k


def vandermonde_scaled(
    m: int, n: int, col_scales: Optional[Sequence[float]] = None
) -> np.ndarray:
    """Column-scaled Vandermonde matrix on m equispaced points in [-1, 1].

    Entry (i, j) is t_i^j * col_scales[j]. The default scales 2^(-10 j)
    push the condition number beyond 1e16 while each column stays
    well representable.
    """
    if m < n:
        raise DimensionError(f"need m >= n, got m={m}, n={n}")
    t = np.linspace(-1.0, 1.0, m)
    if col_scales is None:
        col_scales = 2.0 ** (-10.0 * np.arange(n))
    col_scales = np.asarray(col_scales, dtype=np.float64)
    if col_scales.shape != (n,):
        raise DimensionError(f"col_scales must have length {n}, got {col_scales.shape}")
    return np.vander(t, N=n, increasing=True) * col_scales


def column_rescale(a: np.ndarray, exponents: Sequence[int]) -> np.ndarray:
    """Multiply column j by 2^exponents[j], exactly (no rounding).

    Power-of-two scaling only shifts floating-point exponents, so results
    are bitwise-exact unless they leave the representable range.
    """
    a = np.asarray(a, dtype=np.float64)
    exps = np.asarray(exponents, dtype=np.int64)
    if exps.shape != (a.shape[1],):
        raise DimensionError(f"exponents must have length {a.shape[1]}, got {exps.shape}")
    with np.errstate(over="ignore"):
        out = np.ldexp(a, exps[None, :])
    if np.isinf(out).any() and np.isfinite(a).all():
        raise OverflowError("column_rescale overflowed to infinity")
    return out


def save_problem(
    problem: LsProblem,
    csv_path: Union[str, Path],
    meta_path: Union[str, Path, None] = None,
    seed: Optional[int] = None,
) -> None:
    """Write [A | b] as dense CSV plus a JSON metadata sidecar.

    Floats are written as shortest round-trip decimals, so loading
    reproduces the problem bit for bit.
    """
    csv_path = Path(csv_path)
    if meta_path is None:
        meta_path = csv_path.with_suffix(".json")
    aug = np.column_stack([problem.a, problem.b])
    with open(csv_path, "w") as fh:
        for row in aug:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")
    meta = {
        "n": int(problem.a.shape[1]),
        "m": int(problem.a.shape[0]),
        "seed": seed,
        "kappa_by_construction": problem.kappa_by_construction,
        "noise_norm": problem.noise_norm,
        "xstar": None if problem.xstar is None else [float(v) for v in problem.xstar],
        "e": None if problem.e is None else [float(v) for v in problem.e],
    }
    with open(meta_path, "w") as fh:
        json.dump(meta, fh)


def load_problem(
    csv_path: Union[str, Path], meta_path: Union[str, Path, None] = None
) -> LsProblem:
    """Inverse of save_problem. The sidecar is optional: without it the
    last CSV column is taken as b and no ground truth is attached."""
    csv_path = Path(csv_path)
    if meta_path is None:
        candidate = csv_path.with_suffix(".json")
        meta_path = candidate if candidate.exists() else None
    aug = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    meta = {}
    if meta_path is not None:
        with open(meta_path) as fh:
            meta = json.load(fh)
    n = meta.get("n", aug.shape[1] - 1)
    if aug.shape[1] != n + 1:
        raise DimensionError(
            f"CSV has {aug.shape[1]} columns, expected n+1 = {n + 1} from metadata"
        )
    xstar = meta.get("xstar")
    e = meta.get("e")
    return LsProblem(
        a=aug[:, :n],
        b=aug[:, n],
        xstar=None if xstar is None else np.asarray(xstar, dtype=np.float64),
        e=None if e is None else np.asarray(e, dtype=np.float64),
        kappa_by_construction=meta.get("kappa_by_construction"),
    )
