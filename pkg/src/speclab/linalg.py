"""Dense float64 kernels: LU solve/inverse, singular-value extremes, Kronecker product, norms.

Ill-conditioned input is the object of study here, so nothing refuses to
run on a nearly singular matrix; saturation is reported, not acted on.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = [
    "EPS",
    "SigmaExtremes",
    "SingularMatrixError",
    "solve",
    "invert",
    "kron",
    "sigma_extremes",
    "norm",
    "is_saturated",
    "condition_number",
]

EPS = float(np.finfo(np.float64).eps)


class SingularMatrixError(np.linalg.LinAlgError):
    """LU factorization hit an exactly zero pivot."""

    def __init__(self, pivot_index: int, pivot: float):
        self.pivot_index = pivot_index
        self.pivot = pivot
        super().__init__(f"matrix is singular to working precision (pivot {pivot_index} = {pivot:.3e})")


@dataclass(frozen=True)
class SigmaExtremes:
    sigma_max: float
    sigma_min: float
    saturated: bool

    @property
    def condition(self) -> float:
        return self.sigma_max / self.sigma_min if self.sigma_min > 0 else np.inf


def is_saturated(sigma_max: float, sigma_min: float, size: int) -> bool:
    """Numerical-rank test ``sigma_min < eps * sigma_max * size``."""
    return bool(sigma_min < EPS * sigma_max * size)


def _as_square(mtx) -> np.ndarray:
    mtx = np.asarray(mtx, dtype=np.float64)
    if mtx.ndim != 2 or mtx.shape[0] != mtx.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mtx.shape}")
    if not np.all(np.isfinite(mtx)):
        raise ValueError("matrix has non-finite entries")
    return mtx


def _lu(mtx: np.ndarray):
    with warnings.catch_warnings():
        # an exact zero pivot is turned into SingularMatrixError below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(mtx, check_finite=False)
    diag = np.abs(np.diag(lu))
    k = int(np.argmin(diag)) if diag.size else 0
    if diag.size and diag[k] == 0.0:
        raise SingularMatrixError(k, float(diag[k]))
    return lu, piv


def solve(mtx, rhs) -> np.ndarray:
    """Solve ``mtx @ x = rhs`` by partially pivoted LU."""
    mtx = _as_square(mtx)
    rhs = np.asarray(rhs, dtype=np.float64)
    return sla.lu_solve(_lu(mtx), rhs, check_finite=False)


def invert(mtx) -> np.ndarray:
    """Explicit inverse from the LU factors solved against the identity."""
    mtx = _as_square(mtx)
    return sla.lu_solve(_lu(mtx), np.eye(mtx.shape[0]), check_finite=False)


def kron(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])


def sigma_extremes(mtx) -> SigmaExtremes:
    mtx = np.asarray(mtx, dtype=np.float64)
    s = np.linalg.svd(mtx, compute_uv=False)
    smax, smin = float(s[0]), float(s[-1])
    return SigmaExtremes(smax, smin, is_saturated(smax, smin, max(mtx.shape)))


def condition_number(mtx) -> float:
    return sigma_extremes(mtx).condition


def norm(mtx, which: str = "two") -> float:
    mtx = np.asarray(mtx, dtype=np.float64)
    if which == "inf":
        return float(np.abs(mtx).sum(axis=1).max())
    if which == "two":
        return sigma_extremes(mtx).sigma_max
    if which == "fro":
        return float(np.sqrt(np.sum(mtx * mtx)))
    raise ValueError(f"unknown norm {which!r}; expected 'inf', 'two' or 'fro'")
