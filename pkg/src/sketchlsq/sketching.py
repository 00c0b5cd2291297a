"""Sketch operators: dense Gaussian and subsampled randomized cosine transform.

Both kinds compress an m-row matrix to s < m rows while approximately
preserving column-space geometry (E[S^T S] = I). The SRCT variant never
materializes an s x m matrix: it flips row signs, applies an orthonormal
DCT down each column, and gathers s sampled rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.fft

from .errors import DimensionError


@dataclass(frozen=True)
class SketchOperator:
    """An s x m sketching map, stored explicitly (gaussian) or implicitly (srct)."""

    kind: str
    s: int
    m: int
    gaussian_data: Optional[np.ndarray] = None
    signs: Optional[np.ndarray] = None
    sample_indices: Optional[np.ndarray] = None
    scale: float = 1.0

    @property
    def shape(self) -> tuple[int, int]:
        return (self.s, self.m)


def _check_dims(s: int, m: int) -> tuple[int, int]:
    s, m = int(s), int(m)
    if not (1 <= s < m):
        raise DimensionError(f"sketch needs 1 <= s < m, got s={s}, m={m}")
    return s, m


def make_gaussian_sketch(s: int, m: int, rng: np.random.Generator) -> SketchOperator:
    """Dense sketch with i.i.d. N(0, 1/s) entries."""
    s, m = _check_dims(s, m)
    data = rng.standard_normal((s, m)) / np.sqrt(s)
    return SketchOperator(kind="gaussian", s=s, m=m, gaussian_data=data)


def make_srct_sketch(s: int, m: int, rng: np.random.Generator) -> SketchOperator:
    """Subsampled randomized cosine transform S = sqrt(m/s) * (sample rows of F D).

    Draw order is fixed (signs, then indices) so a seed pins the operator
    bit for bit. Rows are sampled without replacement.
    """
    s, m = _check_dims(s, m)
    signs = rng.choice(np.array([-1.0, 1.0]), size=m)
    indices = rng.choice(m, size=s, replace=False)
    return SketchOperator(
        kind="srct",
        s=s,
        m=m,
        signs=signs,
        sample_indices=indices,
        scale=float(np.sqrt(m / s)),
    )


def apply_sketch(sk: SketchOperator, a: np.ndarray) -> np.ndarray:
    """Compute S @ a for an m-row matrix or length-m vector."""
    a = np.asarray(a, dtype=np.float64)
    rows = a.shape[0]
    if rows != sk.m:
        raise DimensionError(f"operand has {rows} rows, sketch expects {sk.m}")
    if sk.kind == "gaussian":
        return sk.gaussian_data @ a
    if sk.kind == "srct":
        flipped = a * sk.signs if a.ndim == 1 else a * sk.signs[:, None]
        transformed = scipy.fft.dct(flipped, type=2, norm="ortho", axis=0)
        return sk.scale * transformed[sk.sample_indices]
    raise ValueError(f"unknown sketch kind {sk.kind!r}")


def materialize(sk: SketchOperator) -> np.ndarray:
    """Dense s x m representation (testing and small problems only)."""
    if sk.kind == "gaussian":
        return sk.gaussian_data.copy()
    return apply_sketch(sk, np.eye(sk.m))
