import numpy as np
import pytest
import sympy as sp

from conftest import const_field
from morleych.analytic import Analytic, X, Y
from morleych.enrich import interpolate_morley
from morleych.invlap import (CompatibilityError, PoissonOracle, h_minus1_norm,
                             hat_inv_laplacian, reference_inverse_laplacian, subtract_mean,
                             tilde_inv_laplacian)
from morleych.mesh import build_crisscross_mesh
from morleych.norms import broken_norm as morley_norm

COSX = Analytic(sp.cos(sp.pi * X))
COSCOS = Analytic(sp.cos(sp.pi * X) * sp.cos(sp.pi * Y))


@pytest.fixture(scope="module")
def mesh8():
    return build_crisscross_mesh(8)


def test_cos_x_h_minus1(mesh8):
    assert h_minus1_norm(mesh8, COSX) == pytest.approx(np.sqrt(2) / np.pi, abs=1e-3)


def test_cos_x_solution_values(mesh8):
    sol = reference_inverse_laplacian(mesh8, COSX)
    o = sol.oracle
    exact = np.cos(np.pi * o.points[..., 0]) / np.pi ** 2
    assert np.abs(sol.values() - exact).max() < 1e-5
    assert abs(sol.mean()) < 1e-10


def test_cos_cos_eigenfunction(mesh8):
    sol = reference_inverse_laplacian(mesh8, COSCOS)
    o = sol.oracle
    exact = COSCOS(o.points[..., 0], o.points[..., 1]) / (2 * np.pi ** 2)
    assert np.abs(sol.values() - exact).max() < 1e-5
    assert h_minus1_norm(mesh8, COSCOS) == pytest.approx(1 / (np.sqrt(2) * np.pi), abs=1e-3)


def test_zero_data(mesh8):
    sol = reference_inverse_laplacian(mesh8, np.zeros(mesh8.n_vertices + mesh8.n_edges))
    assert not np.any(sol.values())
    assert h_minus1_norm(mesh8, lambda x, y: 0 * x) == 0.0


@pytest.mark.parametrize("c", [-3.0, 0.25, 7.5])
def test_homogeneity(mesh8, c):
    base = h_minus1_norm(mesh8, COSX)
    assert h_minus1_norm(mesh8, lambda x, y: c * np.cos(np.pi * x)) == pytest.approx(abs(c) * base,
                                                                                     rel=1e-10)


def test_incompatible_data(mesh8):
    with pytest.raises(CompatibilityError):
        h_minus1_norm(mesh8, lambda x, y: 1 + np.cos(np.pi * x))
    with pytest.raises(CompatibilityError):
        h_minus1_norm(mesh8, const_field(mesh8))


def test_remove_mean_option(mesh8):
    z = interpolate_morley(mesh8, COSX) + 0.3 * const_field(mesh8)
    assert h_minus1_norm(mesh8, z, remove_mean=True) == pytest.approx(
        h_minus1_norm(mesh8, subtract_mean(mesh8, z)), rel=1e-12)


def test_refine_levels_agree(mesh8):
    a = PoissonOracle(mesh8, 1).solve(COSCOS).grad_norm()
    b = PoissonOracle(mesh8, 2).solve(COSCOS).grad_norm()
    assert abs(a - b) <= 5e-3 * b


def test_poincare_sanity(mesh8):
    o = PoissonOracle(mesh8, 2)
    for f in (COSX, COSCOS):
        l2 = np.sqrt(np.sum(o.weights * f(o.points[..., 0], o.points[..., 1]) ** 2))
        assert h_minus1_norm(mesh8, f) <= l2


def test_invalid_refine(mesh8):
    with pytest.raises(ValueError):
        PoissonOracle(mesh8, 7)


# discrete operators -----------------------------------------------------------

@pytest.fixture(scope="module")
def zetas(mesh8):
    z1 = subtract_mean(mesh8, interpolate_morley(mesh8, COSX, constrained=True))
    z2 = subtract_mean(mesh8, interpolate_morley(mesh8, COSCOS, constrained=True))
    return z1, z2


def test_operators_zero(mesh8):
    z = np.zeros(mesh8.n_vertices + mesh8.n_edges)
    pot = Analytic(sp.Integer(0))
    assert not np.any(tilde_inv_laplacian(mesh8, z))
    assert np.abs(hat_inv_laplacian(mesh8, z, pot)).max() == 0.0


def test_tilde_linear(mesh8, zetas):
    z1, z2 = zetas
    lhs = tilde_inv_laplacian(mesh8, 2 * z1 - 0.5 * z2)
    rhs = 2 * tilde_inv_laplacian(mesh8, z1) - 0.5 * tilde_inv_laplacian(mesh8, z2)
    assert np.abs(lhs - rhs).max() <= 1e-9


def test_hat_linear(mesh8, zetas):
    z1, z2 = zetas
    p1 = Analytic(-sp.cos(sp.pi * X) / sp.pi ** 2)
    p2 = Analytic(-sp.cos(sp.pi * X) * sp.cos(sp.pi * Y) / (2 * sp.pi ** 2))
    p12 = Analytic(2 * p1.expr - 0.5 * p2.expr)
    lhs = hat_inv_laplacian(mesh8, 2 * z1 - 0.5 * z2, p12)
    rhs = 2 * hat_inv_laplacian(mesh8, z1, p1) - 0.5 * hat_inv_laplacian(mesh8, z2, p2)
    assert np.abs(lhs - rhs).max() <= 1e-9


def test_hat_without_boundary_form_equals_tilde_with_potential(mesh8, zetas):
    z1, _ = zetas
    pot = Analytic(-sp.cos(sp.pi * X) / sp.pi ** 2)
    a = hat_inv_laplacian(mesh8, z1, pot, include_boundary_form=False)
    b = tilde_inv_laplacian(mesh8, z1, potential=pot)
    assert np.array_equal(a, b)


def test_hat_requires_second_derivatives(mesh8, zetas):
    with pytest.raises(ValueError):
        hat_inv_laplacian(mesh8, zetas[0], None)
    with pytest.raises(ValueError):
        hat_inv_laplacian(mesh8, zetas[0], lambda x, y: x)


def test_beta_positive(mesh8, zetas):
    with pytest.raises(ValueError):
        tilde_inv_laplacian(mesh8, zetas[0], beta=0.0)


def test_tilde_close_to_exact(mesh8, zetas):
    v = tilde_inv_laplacian(mesh8, zetas[0])
    pot = Analytic(-sp.cos(sp.pi * X) / sp.pi ** 2)
    assert morley_norm(mesh8, 0, v, pot) < 0.1 * morley_norm(mesh8, 0, None, pot)


def test_rate_studies():
    from morleych.harness.convergence import inverse_laplacian_study
    rep = inverse_laplacian_study()
    assert rep.orders["tilde_H1"] >= 0.8
    assert rep.orders["hat_H2"] >= 0.8
