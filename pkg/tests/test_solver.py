import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from speclab.geometry import ExtendedDomain, basis_matrix
from speclab.operators import OperatorSpec, assemble, interp_basis_matrix
from speclab.solver import (
    CASES_1D,
    CASES_2D,
    CONVERGENCE_CSV_HEADER,
    ConvergenceRecord,
    cd1d_case,
    convergence_record,
    error_norms,
    evaluate_solution,
    solve_pde,
    solve_system,
)
from speclab.stability import make_eval_grid


def _mode_field(op, dom, n, coeffs, derived=True):
    """Pointwise callable for sum_j a_j phi_j (or sum_j a_j w_j)."""

    def f(p):
        m = interp_basis_matrix(op, p, n, dom) if derived else basis_matrix(p, n, dom)
        return m @ coeffs

    return f


@pytest.mark.parametrize("kind", ["interior", "bordered"])
@pytest.mark.parametrize("op", [OperatorSpec.poisson(), OperatorSpec.convection_diffusion(10.0)], ids=["poisson", "cd"])
def test_first_image_gives_first_unit_vector(op, kind, unit_dom):
    e1 = np.eye(8)[0]
    sol = solve_pde(op, _mode_field(op, unit_dom, 8, e1), 8, unit_dom, boundary=_mode_field(op, unit_dom, 8, e1, False), kind=kind)
    assert np.abs(sol.coefficients - e1).max() < 1e-10
    assert sol.residual < 1e-12 and not sol.saturated


def test_poisson_recovers_first_mode(pi_dom):
    op = OperatorSpec.poisson()
    lam1 = (np.pi / (np.pi + 2)) ** 2
    w1 = lambda p: np.sqrt(2 / (np.pi + 2)) * np.sin(np.pi * (p[:, 0] + 1) / (np.pi + 2))
    sol = solve_pde(op, lambda p: lam1 * w1(p), 8, pi_dom, boundary=w1)
    assert np.abs(sol.coefficients - np.eye(8)[0]).max() < 1e-10
    assert error_norms(sol, w1)[0] < 1e-10


@settings(max_examples=20, deadline=None)
@given(
    n=st.integers(1, 5),
    extra=st.integers(0, 6),
    k=st.sampled_from([0.0, 2.0, 10.0]),
    seed=st.integers(0, 2**16),
)
def test_manufactured_consistency(n, extra, k, seed):
    dom = ExtendedDomain.interval(1.0, 1.0)
    op = OperatorSpec.convection_diffusion(k)
    a = np.random.default_rng(seed).standard_normal(n)
    u = _mode_field(op, dom, n, a, derived=False)
    sol = solve_pde(op, _mode_field(op, dom, n, a), n + extra, dom, boundary=u)
    assert not sol.saturated
    expected = np.concatenate([a, np.zeros(extra)])
    assert np.abs(sol.coefficients - expected).max() < 1e-9 * max(1.0, np.abs(a).max())


def test_manufactured_consistency_2d():
    dom = ExtendedDomain.box((1.0, 1.0), 0.5)
    op = OperatorSpec.convection_diffusion((3.0, -2.0))
    a2 = np.array([1.0, -0.5, 0.25, 2.0])
    sol = solve_pde(op, _mode_field(op, dom, 2, a2), 4, dom, boundary=_mode_field(op, dom, 2, a2, False))
    expected = np.zeros((4, 4))
    expected[:2, :2] = a2.reshape(2, 2)
    assert np.abs(sol.coefficients - expected.ravel()).max() < 1e-10


def test_boundary_rows_carry_dirichlet_data(unit_dom):
    case = CASES_1D["cd1d"]
    sol = case.solve(12, 1.0)
    ends = evaluate_solution(sol, np.array([[0.0], [1.0]]))
    assert np.abs(ends).max() < 1e-12
    # u'' = 0 with u(0)=1, u(1)=2; the line is not in the sine span, only approximated
    x = np.linspace(0, 1, 7)[:, None]
    errs = []
    for n in (10, 20):
        sol = solve_pde(OperatorSpec.poisson(), lambda p: np.zeros(len(p)), n, unit_dom, boundary=lambda p: 1.0 + p[:, 0])
        assert evaluate_solution(sol, x[[0, -1]]) == pytest.approx([1.0, 2.0], abs=1e-12)
        errs.append(np.abs(evaluate_solution(sol, x) - 1.0 - x[:, 0]).max())
    assert errs[1] < 1e-3 * errs[0]


def test_self_comparison_is_zero(unit_dom):
    sol = CASES_1D["cd1d"].solve(10, 1.0)
    l2, linf = error_norms(sol, lambda p: evaluate_solution(sol, p))
    assert l2 < 1e-13 and linf < 1e-13


@pytest.mark.parametrize("length", [1.0, np.pi])
def test_constant_one_against_zero(length):
    dom = ExtendedDomain.interval(length, 1.0)
    sys = assemble(OperatorSpec.poisson(), 4, dom)
    sol = solve_system(sys, lambda p: np.zeros(len(p)))
    assert np.all(sol.coefficients == 0)
    l2, linf = error_norms(sol, lambda p: np.ones(len(p)))
    assert l2 == pytest.approx(np.sqrt(length), rel=1e-14)
    assert linf == 1.0


def test_error_grid_refinement(pi_dom):
    case = CASES_1D["poisson1d"]
    sol = case.solve(16, 1.0)
    coarse = error_norms(sol, case.exact)[0]
    fine = error_norms(sol, case.exact, make_eval_grid(pi_dom, 16, 64))[0]
    assert abs(fine - coarse) < 0.01 * fine


def _sympy_forcing(u, k, xs):
    lap = -sum(sp.diff(u, x, 2) for x in xs)
    conv = sum(ki * sp.diff(u, x) for ki, x in zip(k, xs))
    return sp.lambdify(xs, lap + conv, "numpy")


def test_forcings_match_symbolic_oracle(rng):
    x, y = sp.symbols("x y")
    oracles = {
        "poisson1d": _sympy_forcing(sp.sin(x) * sp.exp(x), [0], [x]),
        "cd1d": _sympy_forcing(sp.sin(2 * sp.pi * x), [10], [x]),
    }
    u2 = sp.sin(sp.pi * x) * sp.sin(sp.pi * y)
    oracles2 = {
        "poisson2d": _sympy_forcing(u2, [0, 0], [x, y]),
        "cd2d_const": _sympy_forcing(u2, [10, 5], [x, y]),
        "cd2d_var": _sympy_forcing(u2, [5 * sp.cos(sp.pi * x), 5 * sp.sin(sp.pi * y)], [x, y]),
    }
    for name, f in oracles.items():
        case = CASES_1D[name]
        p = rng.uniform(0, case.lengths[0], (50, 1))
        assert case.forcing(p) == pytest.approx(f(p[:, 0]), rel=1e-12, abs=1e-12)
    for name, f in oracles2.items():
        p = rng.uniform(0, 1, (50, 2))
        assert CASES_2D[name].forcing(p) == pytest.approx(f(p[:, 0], p[:, 1]), rel=1e-12, abs=1e-12)


def test_cd1d_case_factory():
    case = cd1d_case(3.0)
    p = np.array([[0.25]])
    assert case.forcing(p)[0] == pytest.approx(4 * np.pi**2)
    assert case.op.coefficient == (3.0,)


@pytest.mark.parametrize("delta", [1.0, 2.0, 4.0])
def test_poisson_error_drops_tenfold_per_eight_modes(delta):
    case = CASES_1D["poisson1d"]
    errs = {}
    for n in range(8, 49, 4):
        rec = convergence_record(case, n, delta)
        if rec.saturated:
            break
        errs[n] = rec.error_l2
    pairs = [(n, n + 8) for n in errs if n + 8 in errs and errs[n] > 1e-9]
    assert pairs
    assert all(errs[b] <= errs[a] / 10 for a, b in pairs)


@pytest.mark.xfail(strict=True, reason="measured: for delta=1/2 the error falls only about 7x from N=8 to N=16")
def test_poisson_tenfold_decrease_small_extension():
    case = CASES_1D["poisson1d"]
    errs = [convergence_record(case, n, 0.5).error_l2 for n in (8, 16)]
    assert errs[1] <= errs[0] / 10


@pytest.mark.xfail(strict=True, reason="measured: error 1.4e-6 at N=40; the system saturates at N=44")
def test_poisson_reaches_1e8_by_40():
    case = CASES_1D["poisson1d"]
    assert min(convergence_record(case, n, 1.0).error_l2 for n in range(8, 41)) < 1e-8


def test_cd2d_constant_converges():
    rec = convergence_record(CASES_2D["cd2d_const"], 20, 1.0)
    assert rec.error_l2 < 1e-6


def test_record_schema():
    rec = convergence_record(CASES_1D["cd1d"], 8, 1.0)
    assert isinstance(rec, ConvergenceRecord)
    assert CONVERGENCE_CSV_HEADER.split(",") == list(rec.__dataclass_fields__)
    assert rec.kappa_A >= 1.0
