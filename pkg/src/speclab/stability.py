"""Stability diagnostics of an assembled collocation system.

Covers the Lebesgue constant of interpolation in ``span{phi_j}``, the
near-null coefficient vector of W built from a bump hidden in the
extension region, the synthesis-operator lower bound for the Lebesgue
constant, the physical-space operator ``L = A W^-1`` with the off-diagonal
decay of its inverse, cardinal-function localization, and the sweep over
convection strength.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .geometry import ExtendedDomain, basis_matrix, gauss_legendre, make_grid, quadrature_order
from .linalg import SigmaExtremes, invert, is_saturated, norm, sigma_extremes, solve
from .operators import CollocationSystem, OperatorSpec, assemble, interp_basis_matrix

__all__ = [
    "EvalGrid",
    "DecayFit",
    "StabilityReport",
    "BumpSpec",
    "PhysicalOperator",
    "CardinalProfile",
    "PecletCell",
    "QuadratureError",
    "make_eval_grid",
    "lagrange_values",
    "lebesgue_constant",
    "bump",
    "bump_l2_norm",
    "near_null_probe",
    "synthesis_gram",
    "synthesis_sigma_min",
    "physical_operator",
    "decay_profile",
    "cardinal_functions",
    "cardinal_decay_diagnostic",
    "stability_report",
    "peclet_sweep",
    "PECLET_CSV_HEADER",
]

EVAL_FACTOR = 32
DECAY_FLOOR = 1e-13
DECAY_TOL = 1e-8
MIN_FIT_ENTRIES = 10
# points per chunk when forming P x M Lagrange blocks
_CHUNK = 8192


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class EvalGrid:
    """Dense tensor grid on the closed physical box, ``factor * N + 1`` points per axis."""

    axes: tuple[np.ndarray, ...]
    points: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.points.shape[0]


def make_eval_grid(dom: ExtendedDomain, n: int, factor: int = EVAL_FACTOR) -> EvalGrid:
    if factor < EVAL_FACTOR:
        raise ValueError(f"evaluation grids need at least {EVAL_FACTOR} points per mode, got {factor}")
    axes = tuple(np.linspace(0.0, L, factor * max(n, 1) + 1) for L in dom.lengths)
    mesh = np.meshgrid(*axes, indexing="ij")
    return EvalGrid(axes, np.stack([m.ravel() for m in mesh], axis=1))


def lagrange_values(sys: CollocationSystem, eg: EvalGrid) -> np.ndarray:
    """``l_k(x_p) = sum_j phi_j(x_p) (A^-1)_{jk}`` as a ``P x M`` matrix."""
    phi = interp_basis_matrix(sys.opspec, eg.points, sys.n, sys.domain)
    return solve(sys.A.T, phi.T).T


def lebesgue_constant(sys: CollocationSystem, eg: EvalGrid | None = None) -> float:
    """``max_x sum_k |l_k(x)|`` estimated on the evaluation grid."""
    if eg is None:
        eg = make_eval_grid(sys.domain, sys.n)
    ainv = invert(sys.A)
    best = 0.0
    for start in range(0, eg.size, _CHUNK):
        phi = interp_basis_matrix(sys.opspec, eg.points[start : start + _CHUNK], sys.n, sys.domain)
        best = max(best, float(np.abs(phi @ ainv).sum(axis=1).max()))
    return best


# --- near-null probe ---------------------------------------------------------


def bump(t) -> np.ndarray:
    """Standard bump ``exp(-1 / (1 - t^2))`` on (-1, 1), zero elsewhere."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@dataclass(frozen=True)
class BumpSpec:
    """Bump affinely mapped onto ``(left, right)``, which must sit inside the extension region."""

    left: float
    right: float

    @classmethod
    def default(cls, dom: ExtendedDomain) -> "BumpSpec":
        d = dom.deltas[0]
        return cls(-d / 2, -d / 4)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return bump((2.0 * x - (self.left + self.right)) / (self.right - self.left))

    def validate(self, dom: ExtendedDomain) -> None:
        if dom.dim != 1:
            raise ValueError("the near-null probe is one-dimensional")
        L, d = dom.lengths[0], dom.deltas[0]
        if not self.left < self.right:
            raise ValueError(f"empty bump support ({self.left}, {self.right})")
        left_ok = -d < self.left and self.right < 0.0
        right_ok = L < self.left and self.right < L + d
        if not (left_ok or right_ok):
            raise ValueError(f"bump support ({self.left}, {self.right}) is not inside the extension region")


def bump_l2_norm(spec: BumpSpec) -> float:
    """``||g||_2`` by adaptive quadrature, independent of the probe's Gauss rule."""
    val, _ = integrate.quad(
        lambda x: float(spec(np.array([x]))[0]) ** 2,
        spec.left,
        spec.right,
        epsabs=1e-16,
        epsrel=1e-13,
        limit=400,
    )
    return math.sqrt(val)


def _bump_nodes(n: int) -> int:
    # the bump is only C-infinity, so the generic rule is floored for a narrow support
    return max(quadrature_order(n), 256)


def near_null_probe(sys: CollocationSystem, spec: BumpSpec | None = None) -> tuple[float, float]:
    """Project the bump onto the first N modes; return ``(||c||_2, ||W c||_inf)``.

    The integrand vanishes outside the bump support, so the L2 inner
    products over the extended interval are integrated on the support only.
    """
    dom = sys.domain
    spec = spec or BumpSpec.default(dom)
    spec.validate(dom)
    xq, wq = gauss_legendre(spec.left, spec.right, _bump_nodes(sys.n))
    c = (spec(xq) * wq) @ basis_matrix(xq[:, None], sys.n, dom)
    return float(np.linalg.norm(c)), float(np.abs(sys.W @ c).max())


# --- synthesis operator --------------------------------------------------------


def synthesis_gram(sys: CollocationSystem, basis: str = "phi", region: str = "physical", nodes: int | None = None):
    """Gram matrix ``<f_i, f_j>`` of ``phi_j`` (or ``w_j``) over the physical or extended box."""
    dom = sys.domain
    m = nodes or quadrature_order(sys.n)
    rules = []
    for L, d in zip(dom.lengths, dom.deltas):
        lo, hi = (0.0, L) if region == "physical" else (-d, L + d)
        rules.append(gauss_legendre(lo, hi, m))
    mesh = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    wts = np.ones(1)
    for _, w in rules:
        wts = np.outer(wts, w).ravel()
    if region == "extended" and basis == "phi":
        raise ValueError("phi_j is only defined on the physical domain")
    if basis == "phi":
        f = interp_basis_matrix(sys.opspec, pts, sys.n, dom)
    elif basis == "w":
        f = basis_matrix(pts, sys.n, dom)
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return f.T @ (f * wts[:, None])


def _synthesis_spectrum(sys: CollocationSystem, **kwargs) -> tuple[float, bool]:
    G = synthesis_gram(sys, **kwargs)
    ev = np.linalg.eigvalsh(G)
    lmin, lmax = float(ev[0]), float(ev[-1])
    if lmin < -1e-12 * lmax:
        raise QuadratureError(f"Gram matrix has eigenvalue {lmin:.3e} (largest {lmax:.3e})")
    lmin = max(lmin, 0.0)
    return math.sqrt(lmin), is_saturated(lmax, lmin, G.shape[0])


def synthesis_sigma_min(sys: CollocationSystem, basis: str = "phi", region: str = "physical") -> float:
    """Smallest singular value of ``c -> sum c_j phi_j`` into L2, from the Gram matrix."""
    return _synthesis_spectrum(sys, basis=basis, region=region)[0]


# --- physical-space operator ---------------------------------------------------


class PhysicalOperator(NamedTuple):
    L: np.ndarray
    Linv: np.ndarray
    saturated: bool


def physical_operator(sys: CollocationSystem) -> PhysicalOperator:
    """``L = B W^-1`` and ``L^-1 = W B^-1`` with ``B`` the solved system matrix."""
    B = sys.system_matrix
    Lmat = solve(sys.W.T, B.T).T
    Linv = solve(B.T, sys.W.T).T
    sat = sigma_extremes(sys.W).saturated or sigma_extremes(B).saturated
    return PhysicalOperator(Lmat, Linv, sat)


@dataclass(frozen=True)
class DecayFit:
    prefactor: float
    rate: float
    residual: float
    r_squared: float
    fraction_below_tol: float
    n_fit: int

    @property
    def defined(self) -> bool:
        return self.n_fit >= MIN_FIT_ENTRIES


def decay_profile(Linv, points, tol: float = DECAY_TOL) -> DecayFit:
    """Least-squares fit ``log|Linv_ij| ~ log C - rate * |x_i - x_j|`` off the diagonal.

    Entries below ``1e-13 * max|Linv|`` are excluded from the fit.
    """
    a = np.abs(np.asarray(Linv, dtype=float))
    pts = np.asarray(points, dtype=float)
    pts = pts.reshape(a.shape[0], -1)
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
    amax = float(a.max())
    frac = float(np.mean(a <= tol * amax))
    mask = (dist > 0) & (a > DECAY_FLOOR * amax)
    n_fit = int(mask.sum())
    if n_fit < MIN_FIT_ENTRIES:
        return DecayFit(math.nan, math.nan, math.nan, math.nan, frac, n_fit)
    x, y = dist[mask], np.log(a[mask])
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res**2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(np.exp(intercept)), float(-slope), float(np.sqrt(np.mean(res**2))), r2, frac, n_fit)


# --- cardinal functions of V_N --------------------------------------------------


@dataclass(frozen=True)
class CardinalProfile:
    bin_edges: np.ndarray
    max_abs: np.ndarray
    saturated: bool


def cardinal_functions(n: int, dom: ExtendedDomain, points, kind: str = "bordered") -> np.ndarray:
    """``p_j(x) = sum_i w_i(x) (W^-1)_{ij}`` at ``points``, shape ``(P, M)``."""
    grid = make_grid(n, dom, kind)
    W = basis_matrix(grid.points, n, dom)
    return basis_matrix(points, n, dom) @ invert(W)


def cardinal_decay_diagnostic(
    n: int, dom: ExtendedDomain, kind: str = "bordered", bins: int = 16
) -> CardinalProfile:
    """Binned ``max |p_j(x)|`` against ``|x - x_j|`` over the physical domain."""
    grid = make_grid(n, dom, kind)
    W = basis_matrix(grid.points, n, dom)
    eg = make_eval_grid(dom, n)
    vals = np.abs(basis_matrix(eg.points, n, dom) @ invert(W))
    dist = np.sqrt(((eg.points[:, None, :] - grid.points[None, :, :]) ** 2).sum(axis=-1))
    edges = np.linspace(0.0, float(np.sqrt(np.sum(np.square(dom.lengths)))), bins + 1)
    which = np.clip(np.searchsorted(edges, dist, side="right") - 1, 0, bins - 1)
    prof = np.zeros(bins)
    np.maximum.at(prof, which.ravel(), vals.ravel())
    return CardinalProfile(edges, prof, sigma_extremes(W).saturated)


# --- full report -----------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    N: int
    lambda_N: float
    sigma_W: SigmaExtremes
    sigma_A: SigmaExtremes
    inv_inf_norm: float
    decay: DecayFit
    synthesis_sigma_min: float
    lemma32_lhs: float
    lemma32_rhs: float
    saturated: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False, allow_nan=True)

    @classmethod
    def from_dict(cls, data: dict) -> "StabilityReport":
        data = dict(data)
        data["sigma_W"] = SigmaExtremes(**data["sigma_W"])
        data["sigma_A"] = SigmaExtremes(**data["sigma_A"])
        data["decay"] = DecayFit(**data["decay"])
        return cls(**data)


def stability_report(sys: CollocationSystem, eg: EvalGrid | None = None) -> StabilityReport:
    lam = lebesgue_constant(sys, eg)
    sW = sigma_extremes(sys.W)
    sA = sigma_extremes(sys.A)
    phys = physical_operator(sys)
    fit = decay_profile(phys.Linv, sys.grid.points)
    s_min, gram_sat = _synthesis_spectrum(sys)
    ainv_two = 1.0 / sA.sigma_min if sA.sigma_min > 0 else math.inf
    rhs = s_min / math.sqrt(sys.domain.volume) * ainv_two
    saturated = sW.saturated or sA.saturated or gram_sat or phys.saturated
    return StabilityReport(
        N=sys.n,
        lambda_N=lam,
        sigma_W=sW,
        sigma_A=sA,
        inv_inf_norm=norm(phys.Linv, "inf"),
        decay=fit,
        synthesis_sigma_min=s_min,
        lemma32_lhs=lam,
        lemma32_rhs=rhs,
        saturated=saturated,
    )


# --- convection-strength sweep -----------------------------------------------------

PECLET_CSV_HEADER = "k,N,delta,lebesgue,sigma_min_W,inv_inf_norm,alpha,kappa_A,saturated"


@dataclass(frozen=True)
class PecletCell:
    k: float
    N: int
    delta: float
    lebesgue: float
    sigma_min_W: float
    inv_inf_norm: float
    alpha: float
    kappa_A: float
    saturated: bool


def _peclet_cell(args) -> PecletCell:
    k, n, length, delta, kind = args
    dom = ExtendedDomain.interval(length, delta)
    sys = assemble(OperatorSpec.convection_diffusion(k), n, dom, kind=kind)
    lam = lebesgue_constant(sys)
    sW = sigma_extremes(sys.W)
    sB = sigma_extremes(sys.system_matrix)
    phys = physical_operator(sys)
    fit = decay_profile(phys.Linv, sys.grid.points)
    return PecletCell(
        k=float(k),
        N=n,
        delta=float(delta),
        lebesgue=lam,
        sigma_min_W=sW.sigma_min,
        inv_inf_norm=norm(phys.Linv, "inf"),
        alpha=fit.rate,
        kappa_A=sB.condition,
        saturated=sW.saturated or sB.saturated or phys.saturated,
    )


def peclet_sweep(
    k_values: Iterable[float],
    n_values: Sequence[int],
    dom: ExtendedDomain,
    kind: str = "bordered",
    workers: int = 1,
) -> list[PecletCell]:
    """Full factorial sweep over constant convection ``k`` and truncation ``N`` (1D only)."""
    if dom.dim != 1:
        raise ValueError("the convection sweep is one-dimensional")
    cells = [(float(k), int(n), dom.lengths[0], dom.deltas[0], kind) for k in k_values for n in n_values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_peclet_cell, cells))
    return [_peclet_cell(c) for c in cells]
