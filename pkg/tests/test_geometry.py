import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from speclab.geometry import (
    DomainError,
    ExtendedDomain,
    basis_matrix,
    basis_matrix_1d,
    eigenvalue,
    eval_basis,
    eval_basis_derivative,
    gauss_legendre,
    make_grid,
    mode_indices,
    quadrature_order,
)


def test_eigenvalue_examples():
    assert eigenvalue(1, ExtendedDomain.interval(np.pi, 1.0)) == pytest.approx(0.3733399, abs=1e-7)
    assert eigenvalue(1, ExtendedDomain.interval(np.pi, 1.0)) == pytest.approx((np.pi / (np.pi + 2)) ** 2, rel=1e-15)
    dom2 = ExtendedDomain.box((1.0, 1.0), 1.0)
    assert eigenvalue((1, 1), dom2) == pytest.approx(2 * (np.pi / 3) ** 2, rel=1e-15)
    assert eigenvalue(2, ExtendedDomain.interval(1.0, 0.5)) == pytest.approx(np.pi**2, rel=1e-15)


def test_domain_validation():
    with pytest.raises(DomainError):
        ExtendedDomain.interval(0.0, 1.0)
    with pytest.raises(DomainError):
        ExtendedDomain.interval(1.0, -0.5)
    with pytest.raises(DomainError):
        ExtendedDomain((1.0, 1.0, 1.0), (1.0, 1.0, 1.0))
    dom = ExtendedDomain.box((1.0, 2.0), 0.5)
    assert dom.extended_lengths == (2.0, 3.0)


@pytest.mark.parametrize("L,delta", [(1.0, 1.0), (np.pi, 0.5), (2.0, 4.0)])
def test_eval_basis_examples(L, delta):
    dom = ExtendedDomain.interval(L, delta)
    assert eval_basis(1, -delta, dom) == pytest.approx(0.0, abs=1e-15)
    assert eval_basis(1, L / 2, dom) == pytest.approx(np.sqrt(2 / (L + 2 * delta)), rel=1e-14)


def test_eval_basis_outside_extended_domain(unit_dom):
    with pytest.raises(DomainError):
        eval_basis(1, -1.5, unit_dom)
    with pytest.raises(DomainError):
        eval_basis(1, 3.01, unit_dom)


@pytest.mark.parametrize("j", range(1, 9))
def test_normalization_by_adaptive_quadrature(j):
    dom = ExtendedDomain.interval(np.pi, 1.0)
    val, _ = integrate.quad(lambda x: eval_basis(j, x, dom) ** 2, -1.0, np.pi + 1.0, epsabs=1e-14, limit=200)
    assert val == pytest.approx(1.0, abs=1e-12)


def test_derivative_examples(rng):
    L, delta = 1.0, 1.0
    dom = ExtendedDomain.interval(L, delta)
    Lt = L + 2 * delta
    assert eval_basis_derivative(1, L / 2, dom, order=1) == pytest.approx(0.0, abs=1e-15)
    expected = -2 * np.pi / Lt * np.sqrt(2 / Lt)
    assert eval_basis_derivative(2, Lt / 2 - delta, dom, order=1) == pytest.approx(expected, rel=1e-14)
    xs = rng.uniform(-delta, L + delta, 100)
    for j in (1, 3, 7):
        lam = eigenvalue(j, dom)
        for x in xs:
            assert eval_basis_derivative(j, x, dom, order=2) == pytest.approx(-lam * eval_basis(j, x, dom), abs=1e-12)


def test_derivatives_match_finite_differences(rng):
    dom = ExtendedDomain.interval(np.pi, 0.5)
    h = 1e-5
    for x in rng.uniform(0.2, np.pi - 0.2, 20):
        for j in (1, 4, 9):
            fd1 = (eval_basis(j, x + h, dom) - eval_basis(j, x - h, dom)) / (2 * h)
            fd2 = (eval_basis(j, x + h, dom) - 2 * eval_basis(j, x, dom) + eval_basis(j, x - h, dom)) / h**2
            assert eval_basis_derivative(j, x, dom, 1) == pytest.approx(fd1, abs=1e-7)
            assert eval_basis_derivative(j, x, dom, 2) == pytest.approx(fd2, abs=1e-3)


def test_derivative_order_validation(unit_dom):
    with pytest.raises(ValueError):
        eval_basis_derivative(1, 0.5, unit_dom, order=3)


def test_make_grid_interior_examples():
    assert make_grid(1, ExtendedDomain.interval(1.0, 1.0), "interior").points.ravel() == pytest.approx([0.5])
    g = make_grid(3, ExtendedDomain.interval(np.pi, 1.0), "interior")
    assert g.points.ravel() == pytest.approx([np.pi / 4, np.pi / 2, 3 * np.pi / 4], rel=1e-15)
    g2 = make_grid(2, ExtendedDomain.box((1.0, 1.0), 1.0), "interior")
    expected = [(1 / 3, 1 / 3), (1 / 3, 2 / 3), (2 / 3, 1 / 3), (2 / 3, 2 / 3)]
    assert g2.points == pytest.approx(np.array(expected), rel=1e-15)
    assert not g2.boundary.any()


def test_make_grid_bordered():
    g = make_grid(5, ExtendedDomain.interval(2.0, 1.0))
    assert g.points.ravel() == pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])
    assert g.boundary.tolist() == [True, False, False, False, True]
    g2 = make_grid(3, ExtendedDomain.box((1.0, 1.0), 1.0))
    # only the centre of a 3x3 bordered grid is interior
    assert g2.interior.tolist() == [False] * 4 + [True] + [False] * 4
    assert make_grid(1, ExtendedDomain.interval(1.0, 1.0)).points.ravel() == pytest.approx([0.5])


@pytest.mark.parametrize("kind", ["interior", "bordered"])
@pytest.mark.parametrize("n", [1, 2, 7, 32])
def test_grid_points_stay_in_physical_domain(kind, n):
    dom = ExtendedDomain.box((np.pi, 1.0), 2.0)
    g = make_grid(n, dom, kind)
    assert g.size == n**2
    for axis, L in zip(g.axes, dom.lengths):
        assert np.all(np.diff(axis) > 0)
        if kind == "interior":
            assert np.all((axis > 0) & (axis < L))
        else:
            assert np.all((axis >= 0) & (axis <= L))


def test_orthonormality_gram():
    dom = ExtendedDomain.interval(1.0, 1.0)
    x, w = gauss_legendre(-1.0, 2.0, quadrature_order(8))
    B = basis_matrix_1d(x, 8, 1.0, 1.0)
    G = B.T @ (B * w[:, None])
    assert np.abs(G - np.eye(8)).max() < 1e-10
    x2, w2 = gauss_legendre(-1.0, 2.0, quadrature_order(8))
    pts = np.stack(np.meshgrid(x2, x2, indexing="ij"), axis=-1).reshape(-1, 2)
    B2 = basis_matrix(pts, 4, ExtendedDomain.box((1.0, 1.0), 1.0))
    G2 = B2.T @ (B2 * np.outer(w2, w2).ravel()[:, None])
    assert np.abs(G2 - np.eye(16)).max() < 1e-10


def test_eigenrelation_at_quadrature_nodes():
    dom = ExtendedDomain.interval(np.pi, 2.0)
    x, _ = gauss_legendre(-2.0, np.pi + 2.0, quadrature_order(12))
    B = basis_matrix_1d(x, 12, np.pi, 2.0)
    B2 = basis_matrix_1d(x, 12, np.pi, 2.0, order=2)
    lam = np.array([eigenvalue(j, dom) for j in range(1, 13)])
    assert np.abs(-B2 - lam * B).max() <= 1e-10 * np.abs(lam * B).max()


def test_mode_ordering_is_lexicographic():
    assert mode_indices(2, 2).tolist() == [[1, 1], [1, 2], [2, 1], [2, 2]]


@settings(max_examples=60, deadline=None)
@given(
    j1=st.integers(1, 12),
    j2=st.integers(1, 12),
    x=st.floats(0.0, 1.0),
    y=st.floats(0.0, 2.0),
    delta=st.floats(0.1, 4.0),
)
def test_tensor_basis_is_product_of_factors(j1, j2, x, y, delta):
    dom2 = ExtendedDomain.box((1.0, 2.0), delta)
    dx = ExtendedDomain.interval(1.0, delta)
    dy = ExtendedDomain.interval(2.0, delta)
    assert eval_basis((j1, j2), (x, y), dom2) == eval_basis(j1, x, dx) * eval_basis(j2, y, dy)
    d = eval_basis_derivative((j1, j2), (x, y), dom2, order=1, axis=1)
    assert d == eval_basis(j1, x, dx) * eval_basis_derivative(j2, y, dy, order=1)


def test_basis_matrix_matches_scalar_evaluation(rng):
    dom = ExtendedDomain.box((1.0, 1.0), 0.5)
    pts = rng.uniform(0, 1, (10, 2))
    B = basis_matrix(pts, 3, dom)
    modes = mode_indices(3, 2)
    for p, row in zip(pts, B):
        assert row == pytest.approx([eval_basis(m, p, dom) for m in modes], rel=1e-13, abs=1e-15)
