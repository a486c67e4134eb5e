"""Domains, collocation grids and the Dirichlet sine eigenbasis of the extended box.

Modes and grid points are both ordered lexicographically over their
per-axis indices, which makes the d-dimensional basis matrix equal to the
Kronecker product of the 1D ones.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ExtendedDomain",
    "CollocationGrid",
    "DomainError",
    "GRID_KINDS",
    "eigenvalue",
    "eval_basis",
    "eval_basis_derivative",
    "make_grid",
    "basis_matrix_1d",
    "basis_matrix",
    "mode_indices",
    "eigenvalues",
    "gauss_legendre",
    "quadrature_order",
]

GRID_KINDS = ("bordered", "interior")

# slack for "inside the closed extended domain" checks
_EDGE_TOL = 1e-12


class DomainError(ValueError):
    """A point or parameter lies outside its admissible domain."""


@dataclass(frozen=True)
class ExtendedDomain:
    """Physical box ``prod (0, L_k)`` embedded in ``prod (-delta_k, L_k + delta_k)``."""

    lengths: tuple[float, ...]
    deltas: tuple[float, ...]

    def __post_init__(self):
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        deltas = tuple(float(v) for v in np.atleast_1d(self.deltas))
        if len(deltas) == 1 and len(lengths) > 1:
            deltas = deltas * len(lengths)
        if len(lengths) != len(deltas):
            raise DomainError("lengths and deltas must have the same dimension")
        if len(lengths) not in (1, 2):
            raise DomainError(f"only d = 1 or 2 is supported, got d = {len(lengths)}")
        if any(not np.isfinite(v) or v <= 0 for v in lengths + deltas):
            raise DomainError(f"lengths and deltas must be positive: {lengths}, {deltas}")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "deltas", deltas)

    @classmethod
    def interval(cls, length: float, delta: float) -> "ExtendedDomain":
        return cls((length,), (delta,))

    @classmethod
    def box(cls, lengths: Sequence[float], delta: float | Sequence[float]) -> "ExtendedDomain":
        return cls(tuple(lengths), tuple(np.broadcast_to(delta, (len(lengths),))))

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def extended_lengths(self) -> tuple[float, ...]:
        return tuple(L + 2 * d for L, d in zip(self.lengths, self.deltas))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def contains_extended(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo = -np.asarray(self.deltas) - _EDGE_TOL
        hi = np.asarray(self.lengths) + np.asarray(self.deltas) + _EDGE_TOL
        return bool(np.all((x >= lo) & (x <= hi)))

    def contains_physical(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all((x >= -_EDGE_TOL) & (x <= np.asarray(self.lengths) + _EDGE_TOL)))


@dataclass(frozen=True)
class CollocationGrid:
    """Collocation points of a tensor grid, ``points`` has shape ``(N**d, d)``.

    ``boundary`` marks points on the physical boundary; for ``bordered``
    grids these rows carry Dirichlet data instead of the PDE.
    """

    n: int
    kind: str
    axes: tuple[np.ndarray, ...]
    points: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def interior(self) -> np.ndarray:
        return ~self.boundary


def _as_index(j) -> tuple[int, ...]:
    idx = tuple(int(v) for v in np.atleast_1d(j))
    if any(v < 1 for v in idx):
        raise DomainError(f"mode indices must be positive, got {idx}")
    return idx


def _check_point(x, dom: ExtendedDomain) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dom.dim,):
        raise DomainError(f"point {x} has wrong dimension for a {dom.dim}D domain")
    if not dom.contains_extended(x):
        raise DomainError(f"point {x} lies outside the extended domain")
    return x


def _factor(j: int, x: float, L: float, delta: float, order: int) -> float:
    Lt = L + 2 * delta
    a = j * np.pi / Lt
    s = np.sqrt(2.0 / Lt)
    t = a * (x + delta)
    if order == 0:
        return s * np.sin(t)
    if order == 1:
        return s * a * np.cos(t)
    if order == 2:
        return -s * a * a * np.sin(t)
    raise ValueError(f"derivative order must be 0, 1 or 2, got {order}")


def eigenvalue(j, dom: ExtendedDomain) -> float:
    """Eigenvalue of ``-Laplace`` for mode ``j``: sum of ``(j_k pi / (L_k + 2 delta_k))**2``."""
    idx = _as_index(j)
    if len(idx) != dom.dim:
        raise DomainError(f"mode {idx} has wrong dimension for a {dom.dim}D domain")
    return float(sum((jk * np.pi / Lt) ** 2 for jk, Lt in zip(idx, dom.extended_lengths)))


def eval_basis(j, x, dom: ExtendedDomain) -> float:
    idx = _as_index(j)
    x = _check_point(x, dom)
    out = 1.0
    for jk, xk, L, d in zip(idx, x, dom.lengths, dom.deltas):
        out *= _factor(jk, xk, L, d, 0)
    return float(out)


def eval_basis_derivative(j, x, dom: ExtendedDomain, order: int = 1, axis: int = 0) -> float:
    """Partial derivative of order 1 or 2 along ``axis`` of the tensor basis function."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if not 0 <= axis < dom.dim:
        raise DomainError(f"axis {axis} out of range for a {dom.dim}D domain")
    idx = _as_index(j)
    x = _check_point(x, dom)
    out = 1.0
    for k, (jk, xk, L, d) in enumerate(zip(idx, x, dom.lengths, dom.deltas)):
        out *= _factor(jk, xk, L, d, order if k == axis else 0)
    return float(out)


def _axis_points(n: int, L: float, kind: str) -> np.ndarray:
    if kind == "interior" or n < 2:
        return np.arange(1, n + 1) * L / (n + 1)
    if kind == "bordered":
        return np.linspace(0.0, L, n)
    raise ValueError(f"unknown grid kind {kind!r}; expected one of {GRID_KINDS}")


def make_grid(n: int, dom: ExtendedDomain, kind: str = "bordered") -> CollocationGrid:
    """Equispaced tensor grid with ``n`` points per axis.

    ``interior``: ``x_k = k L / (n + 1)``, k = 1..n, no point on the boundary.
    ``bordered``: ``x_k = k L / (n - 1)``, k = 0..n-1, endpoints included.
    A single point (n = 1) is always the midpoint.
    """
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    if kind not in GRID_KINDS:
        raise ValueError(f"unknown grid kind {kind!r}; expected one of {GRID_KINDS}")
    axes = tuple(_axis_points(n, L, kind) for L in dom.lengths)
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    if kind == "bordered" and n >= 2:
        on_edge = [(m.ravel() == 0.0) | (m.ravel() == L) for m, L in zip(mesh, dom.lengths)]
        boundary = np.logical_or.reduce(on_edge)
    else:
        boundary = np.zeros(points.shape[0], dtype=bool)
    return CollocationGrid(n=n, kind=kind, axes=axes, points=points, boundary=boundary)


def mode_indices(n: int, dim: int) -> np.ndarray:
    """All multi-indices with entries in 1..n, lexicographic, shape ``(n**dim, dim)``."""
    return np.array(list(itertools.product(range(1, n + 1), repeat=dim)), dtype=int).reshape(-1, dim)


def eigenvalues(n: int, dom: ExtendedDomain) -> np.ndarray:
    """Eigenvalues of all ``n**d`` modes in lexicographic order."""
    lam = np.zeros(1)
    for Lt in dom.extended_lengths:
        lam1 = (np.arange(1, n + 1) * np.pi / Lt) ** 2
        lam = (lam[:, None] + lam1[None, :]).ravel()
    return lam


def basis_matrix_1d(x, n: int, length: float, delta: float, order: int = 0) -> np.ndarray:
    """Matrix ``B[p, j-1] = w_j^(order)(x_p)`` for the 1D basis on ``(-delta, length + delta)``."""
    x = np.asarray(x, dtype=float).ravel()
    Lt = length + 2 * delta
    a = np.arange(1, n + 1) * np.pi / Lt
    t = np.outer(x + delta, a)
    s = np.sqrt(2.0 / Lt)
    if order == 0:
        return s * np.sin(t)
    if order == 1:
        return s * a * np.cos(t)
    if order == 2:
        return -s * a * a * np.sin(t)
    raise ValueError(f"derivative order must be 0, 1 or 2, got {order}")


def basis_matrix(points, n: int, dom: ExtendedDomain, order: int = 0, axis: int = 0) -> np.ndarray:
    """Basis (or one partial derivative) at scattered points, shape ``(P, n**d)``.

    Evaluated pointwise as a product of per-axis factors, independent of the
    Kronecker route used for tensor grids.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, dom.dim)
    out = np.ones((pts.shape[0], 1))
    for k, (L, d) in enumerate(zip(dom.lengths, dom.deltas)):
        fk = basis_matrix_1d(pts[:, k], n, L, d, order if k == axis else 0)
        out = (out[:, :, None] * fk[:, None, :]).reshape(pts.shape[0], -1)
    return out


def quadrature_order(n: int) -> int:
    """Gauss-Legendre node count per coordinate used for inner products at truncation ``n``."""
    return -(-3 * n // 2) + 16


def gauss_legendre(a: float, b: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * t, half * w
