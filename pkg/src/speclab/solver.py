"""Collocation solves of ``L u = f`` and error measurement against manufactured solutions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import ExtendedDomain, basis_matrix, basis_matrix_1d
from .linalg import sigma_extremes, solve
from .operators import CollocationSystem, OperatorSpec, assemble
from .stability import EvalGrid, make_eval_grid

__all__ = [
    "SpectralSolution",
    "ConvergenceRecord",
    "ManufacturedCase",
    "CASES_1D",
    "CASES_2D",
    "CONVERGENCE_CSV_HEADER",
    "solve_pde",
    "solve_system",
    "evaluate_solution",
    "evaluate_on_grid",
    "error_norms",
    "convergence_record",
]

Field = Callable[[np.ndarray], np.ndarray]

CONVERGENCE_CSV_HEADER = "case,N,delta,error_l2,error_inf,kappa_A,saturated"


@dataclass(frozen=True)
class SpectralSolution:
    coefficients: np.ndarray = field(repr=False)
    system: CollocationSystem = field(repr=False)
    residual: float
    kappa: float
    saturated: bool


@dataclass(frozen=True)
class ConvergenceRecord:
    case: str
    N: int
    delta: float
    error_l2: float
    error_inf: float
    kappa_A: float
    saturated: bool


def _field_values(f: Field | None, pts: np.ndarray) -> np.ndarray:
    if f is None:
        return np.zeros(pts.shape[0])
    return np.asarray(f(pts), dtype=float).reshape(pts.shape[0])


def solve_system(sys: CollocationSystem, f: Field, boundary: Field | None = None) -> SpectralSolution:
    """Solve the assembled system; ``boundary`` supplies Dirichlet data on boundary rows (default 0)."""
    pts = sys.grid.points
    rhs = _field_values(f, pts)
    mask = sys.grid.boundary
    if mask.any():
        rhs[mask] = _field_values(boundary, pts[mask])
    B = sys.system_matrix
    c = solve(B, rhs)
    sig = sigma_extremes(B)
    residual = float(np.abs(B @ c - rhs).max())
    return SpectralSolution(c, sys, residual, sig.condition, sig.saturated)


def solve_pde(
    op: OperatorSpec,
    f: Field,
    n: int,
    dom: ExtendedDomain,
    boundary: Field | None = None,
    kind: str = "bordered",
) -> SpectralSolution:
    return solve_system(assemble(op, n, dom, kind=kind), f, boundary)


def evaluate_solution(sol: SpectralSolution, points) -> np.ndarray:
    dom = sol.system.domain
    pts = np.asarray(points, dtype=float).reshape(-1, dom.dim)
    return basis_matrix(pts, sol.system.n, dom) @ sol.coefficients


def evaluate_on_grid(sol: SpectralSolution, eg: EvalGrid) -> np.ndarray:
    """Values on a tensor grid by separable evaluation, flattened lexicographically."""
    dom, n = sol.system.domain, sol.system.n
    out = sol.coefficients.reshape((n,) * dom.dim)
    for axis, (x, L, d) in enumerate(zip(eg.axes, dom.lengths, dom.deltas)):
        B = basis_matrix_1d(x, n, L, d)
        out = np.moveaxis(np.tensordot(B, out, axes=([1], [axis])), 0, axis)
    return out.ravel()


def _trapezoid_nd(values: np.ndarray, axes) -> float:
    out = values.reshape(tuple(len(a) for a in axes))
    for x in reversed(axes):
        out = np.trapezoid(out, x, axis=-1)
    return float(out)


def error_norms(sol: SpectralSolution, exact: Field, eg: EvalGrid | None = None) -> tuple[float, float]:
    """Composite-trapezoid L2 error and max error on the evaluation grid."""
    if eg is None:
        eg = make_eval_grid(sol.system.domain, sol.system.n)
    err = evaluate_on_grid(sol, eg) - _field_values(exact, eg.points)
    return float(np.sqrt(_trapezoid_nd(err * err, eg.axes))), float(np.abs(err).max())


# --- manufactured problems ------------------------------------------------------


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    lengths: tuple[float, ...]
    op: OperatorSpec = field(repr=False)
    exact: Field = field(repr=False)
    forcing: Field = field(repr=False)

    def domain(self, delta: float) -> ExtendedDomain:
        return ExtendedDomain.box(self.lengths, delta)

    def solve(self, n: int, delta: float, kind: str = "bordered") -> SpectralSolution:
        return solve_pde(self.op, self.forcing, n, self.domain(delta), boundary=self.exact, kind=kind)


def _u_poisson1d(p):
    x = p[:, 0]
    return np.sin(x) * np.exp(x)


def _f_poisson1d(p):
    x = p[:, 0]
    return -2.0 * np.cos(x) * np.exp(x)


def _u_cd1d(p):
    return np.sin(2 * np.pi * p[:, 0])


def _cd1d_forcing(k0: float) -> Field:
    def f(p):
        x = p[:, 0]
        return 4 * np.pi**2 * np.sin(2 * np.pi * x) + k0 * 2 * np.pi * np.cos(2 * np.pi * x)

    return f


def _u_2d(p):
    return np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])


def _grad_u_2d(p):
    x, y = p[:, 0], p[:, 1]
    return np.stack([np.pi * np.cos(np.pi * x) * np.sin(np.pi * y), np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)], axis=1)


def _k_variable(p):
    return np.stack([5 * np.cos(np.pi * p[:, 0]), 5 * np.sin(np.pi * p[:, 1])], axis=1)


def _forcing_2d(k: Callable[[np.ndarray], np.ndarray] | None) -> Field:
    def f(p):
        out = 2 * np.pi**2 * _u_2d(p)
        if k is not None:
            out = out + np.sum(k(p) * _grad_u_2d(p), axis=1)
        return out

    return f


def _k_constant_10_5(p):
    return np.broadcast_to(np.array([10.0, 5.0]), p.shape)


def cd1d_case(k0: float = 10.0) -> ManufacturedCase:
    return ManufacturedCase("cd1d", (1.0,), OperatorSpec.convection_diffusion(k0), _u_cd1d, _cd1d_forcing(k0))


CASES_1D = {
    "poisson1d": ManufacturedCase("poisson1d", (np.pi,), OperatorSpec.poisson(), _u_poisson1d, _f_poisson1d),
    "cd1d": cd1d_case(10.0),
}

CASES_2D = {
    "poisson2d": ManufacturedCase("poisson2d", (1.0, 1.0), OperatorSpec.poisson(), _u_2d, _forcing_2d(None)),
    "cd2d_const": ManufacturedCase(
        "cd2d_const", (1.0, 1.0), OperatorSpec.convection_diffusion((10.0, 5.0)), _u_2d, _forcing_2d(_k_constant_10_5)
    ),
    "cd2d_var": ManufacturedCase(
        "cd2d_var", (1.0, 1.0), OperatorSpec.convection_diffusion(_k_variable), _u_2d, _forcing_2d(_k_variable)
    ),
}


def convergence_record(case: ManufacturedCase, n: int, delta: float, kind: str = "bordered") -> ConvergenceRecord:
    sol = case.solve(n, delta, kind)
    l2, linf = error_norms(sol, case.exact)
    return ConvergenceRecord(case.name, n, float(delta), l2, linf, sol.kappa, sol.saturated)
