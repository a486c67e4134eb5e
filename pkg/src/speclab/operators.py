"""Differential operators and the collocation matrices W, A built from them.

Rows index grid points and columns index modes, both lexicographic. A
bordered grid gets Dirichlet rows at boundary nodes in
``CollocationSystem.system_matrix``; ``A`` itself always holds the raw
interpolation basis ``phi_j(x_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .geometry import (
    CollocationGrid,
    ExtendedDomain,
    _check_point,
    basis_matrix,
    basis_matrix_1d,
    eigenvalue,
    eigenvalues,
    eval_basis,
    eval_basis_derivative,
    make_grid,
)
from .linalg import kron

__all__ = [
    "OperatorSpec",
    "CollocationSystem",
    "MAX_SIZE",
    "interp_basis_eval",
    "interp_basis_matrix",
    "assemble",
    "write_matrix_csv",
    "read_matrix_csv",
]

MAX_SIZE = 4096

CoefficientField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OperatorSpec:
    """``-Laplace`` (``poisson``) or ``-Laplace + k . grad`` (``cd``).

    ``coefficient`` is either a constant vector of length d or a callable
    mapping points of shape ``(P, d)`` to values of shape ``(P, d)``.
    """

    kind: str = "poisson"
    coefficient: Union[None, tuple, CoefficientField] = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("poisson", "cd"):
            raise ValueError(f"operator kind must be 'poisson' or 'cd', got {self.kind!r}")
        if self.kind == "poisson" and self.coefficient is not None:
            raise ValueError("the Poisson operator takes no coefficient")
        if self.kind == "cd":
            if self.coefficient is None:
                raise ValueError("convection-diffusion needs a coefficient")
            if not callable(self.coefficient):
                k = tuple(float(v) for v in np.atleast_1d(self.coefficient))
                if not all(np.isfinite(k)):
                    raise ValueError(f"non-finite convection coefficient {k}")
                object.__setattr__(self, "coefficient", k)

    @classmethod
    def poisson(cls) -> "OperatorSpec":
        return cls("poisson")

    @classmethod
    def convection_diffusion(cls, k, label: str = "") -> "OperatorSpec":
        return cls("cd", k if callable(k) else tuple(np.atleast_1d(k)), label)

    @property
    def is_constant(self) -> bool:
        return not callable(self.coefficient)

    def coefficient_at(self, points: np.ndarray, dim: int) -> np.ndarray:
        """Convection field at ``points`` (shape ``(P, dim)``), zeros for Poisson."""
        points = np.asarray(points, dtype=float).reshape(-1, dim)
        if self.kind == "poisson":
            return np.zeros_like(points)
        if callable(self.coefficient):
            k = np.asarray(self.coefficient(points), dtype=float).reshape(points.shape)
        else:
            if len(self.coefficient) != dim:
                raise ValueError(f"coefficient {self.coefficient} has wrong length for d = {dim}")
            k = np.broadcast_to(np.asarray(self.coefficient), points.shape)
        if not np.all(np.isfinite(k)):
            raise ValueError("convection coefficient is not finite at some evaluation point")
        return k


@dataclass(frozen=True)
class CollocationSystem:
    n: int
    domain: ExtendedDomain
    grid: CollocationGrid
    W: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    eigdiag: np.ndarray = field(repr=False)
    opspec: OperatorSpec

    @property
    def size(self) -> int:
        return self.W.shape[0]

    @property
    def system_matrix(self) -> np.ndarray:
        """Matrix actually solved: ``A`` with Dirichlet rows ``W`` at boundary nodes."""
        if not self.grid.boundary.any():
            return self.A
        out = self.A.copy()
        out[self.grid.boundary] = self.W[self.grid.boundary]
        return out


def interp_basis_eval(op: OperatorSpec, j, x, dom: ExtendedDomain) -> float:
    """``phi_j(x) = L[w_j](x) = lambda_j w_j(x) + k(x) . grad w_j(x)``."""
    x = _check_point(x, dom)
    if not dom.contains_physical(x):
        raise ValueError(f"point {x} lies outside the physical domain")
    value = eigenvalue(j, dom) * eval_basis(j, x, dom)
    if op.kind == "poisson":
        return value
    k = op.coefficient_at(x[None, :], dom.dim)[0]
    for axis in range(dom.dim):
        value += k[axis] * eval_basis_derivative(j, x, dom, order=1, axis=axis)
    return float(value)


def interp_basis_matrix(op: OperatorSpec, points, n: int, dom: ExtendedDomain) -> np.ndarray:
    """``phi_j`` for all ``n**d`` modes at scattered points, shape ``(P, n**d)``."""
    pts = np.asarray(points, dtype=float).reshape(-1, dom.dim)
    out = basis_matrix(pts, n, dom) * eigenvalues(n, dom)
    if op.kind == "cd":
        k = op.coefficient_at(pts, dom.dim)
        for axis in range(dom.dim):
            # skipping a zero constant keeps k = 0 bitwise equal to Poisson
            if op.is_constant and op.coefficient[axis] == 0.0:
                continue
            out = out + k[:, axis : axis + 1] * basis_matrix(pts, n, dom, order=1, axis=axis)
    return out


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = kron(out, m)
    return out


def _assemble_kron(op: OperatorSpec, grid: CollocationGrid, dom: ExtendedDomain, n: int):
    w1 = [basis_matrix_1d(ax, n, L, d) for ax, L, d in zip(grid.axes, dom.lengths, dom.deltas)]
    W = _kron_all(w1)
    lam = eigenvalues(n, dom)
    A = W * lam
    if op.kind == "cd":
        k = op.coefficient
        for axis in range(dom.dim):
            if k[axis] == 0.0:
                continue
            ax, L, d = grid.axes[axis], dom.lengths[axis], dom.deltas[axis]
            factors = list(w1)
            factors[axis] = basis_matrix_1d(ax, n, L, d, order=1)
            A = A + k[axis] * _kron_all(factors)
    return W, A, lam


def _assemble_direct(op: OperatorSpec, grid: CollocationGrid, dom: ExtendedDomain, n: int):
    W = basis_matrix(grid.points, n, dom)
    return W, interp_basis_matrix(op, grid.points, n, dom), eigenvalues(n, dom)


def assemble(
    op: OperatorSpec,
    n: int,
    dom: ExtendedDomain,
    kind: str = "bordered",
    method: str = "auto",
) -> CollocationSystem:
    """Build W, A and the eigenvalue diagonal at truncation ``n`` (``n**d`` modes).

    ``method='kron'`` uses Kronecker products of 1D factors (separable
    operators only); ``'direct'`` evaluates every entry pointwise; ``'auto'``
    picks Kronecker whenever the coefficient is constant.
    """
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    m = n**dom.dim
    if m > MAX_SIZE:
        raise ValueError(f"system size {m} exceeds the dense limit {MAX_SIZE}")
    grid = make_grid(n, dom, kind)
    if method == "auto":
        method = "kron" if op.is_constant else "direct"
    if method == "kron":
        if not op.is_constant:
            raise ValueError("Kronecker assembly needs a constant coefficient")
        W, A, lam = _assemble_kron(op, grid, dom, n)
    elif method == "direct":
        W, A, lam = _assemble_direct(op, grid, dom, n)
    else:
        raise ValueError(f"unknown assembly method {method!r}")
    return CollocationSystem(n=n, domain=dom, grid=grid, W=W, A=A, eigdiag=lam, opspec=op)


def write_matrix_csv(path, mtx, kind: str, n: int, delta: float, **extra) -> Path:
    """Row-major CSV, 17 significant digits, one ``#`` header line."""
    mtx = np.asarray(mtx, dtype=float)
    header = f"# rows={mtx.shape[0]} cols={mtx.shape[1]} kind={kind} N={n} delta={delta!r}"
    for key, value in extra.items():
        header += f" {key}={value}"
    lines = [header]
    lines.extend(",".join(f"{v:.17g}" for v in row) for row in mtx)
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_matrix_csv(path) -> tuple[np.ndarray, dict]:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# "):
        raise ValueError(f"{path}: missing matrix header")
    meta = dict(item.split("=", 1) for item in text[0][2:].split())
    rows, cols = int(meta["rows"]), int(meta["cols"])
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:] if line], dtype=float)
    data = data.reshape(rows, cols)
    meta["rows"], meta["cols"], meta["N"] = rows, cols, int(meta["N"])
    meta["delta"] = float(meta["delta"])
    return data, meta
