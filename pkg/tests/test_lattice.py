import warnings

import numpy as np
import pytest

import parahom as ph
from parahom.errors import DegenerateLatticeError, EllipticityError


def test_unit_interval_lattice():
    lat = ph.dual_lattice([[1.0]])
    assert lat.dual[0, 0] == pytest.approx(1.0, abs=1e-14)
    assert lat.r0 == pytest.approx(0.5, abs=1e-14)
    assert lat.r1 == pytest.approx(0.5, abs=1e-14)
    assert lat.cell_volume == pytest.approx(1.0, abs=1e-14)


def test_unit_square_lattice():
    lat = ph.dual_lattice(np.eye(2))
    assert lat.r0 == pytest.approx(0.5, abs=1e-14)
    assert lat.r1 == pytest.approx(np.sqrt(2) / 2, abs=1e-14)
    assert lat.cell_volume == pytest.approx(1.0, abs=1e-14)


def test_rectangular_lattice_dual_enumeration():
    # oracle: dual rows solve <b_j, a_k> = delta directly, then enumerate
    basis = np.array([[2.0, 0.0], [0.0, 1.0]])
    dual_oracle = np.linalg.inv(basis.T)
    shortest = min(np.linalg.norm(np.array(nu) @ dual_oracle)
                   for nu in [(i, j) for i in range(-3, 4) for j in range(-3, 4)
                              if (i, j) != (0, 0)])
    lat = ph.dual_lattice(basis)
    assert np.allclose(lat.dual, [[0.5, 0.0], [0.0, 1.0]], atol=1e-14)
    assert lat.r0 == pytest.approx(0.5 * shortest, abs=1e-14)
    assert lat.r0 == pytest.approx(0.25, abs=1e-14)
    assert lat.cell_volume == pytest.approx(2.0, abs=1e-14)


def test_biorthogonality_random_bases():
    rng = np.random.default_rng(0)
    for _ in range(10):
        basis = rng.uniform(-2, 2, size=(2, 2))
        if abs(np.linalg.det(basis)) < 0.3:
            continue
        lat = ph.dual_lattice(basis)
        assert np.allclose(lat.dual @ lat.basis.T, np.eye(2), atol=1e-12)


def test_singular_basis_rejected():
    with pytest.raises(DegenerateLatticeError):
        ph.dual_lattice([[1.0, 0.0], [2.0, 0.0]])


def test_coefficient_symmetrization_warns(lattice_1d):
    samples = np.tile(np.array([[2.0, 0.5], [0.2, 3.0]]), (4, 1, 1))
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        g = ph.PeriodicCoefficient(lattice=ph.unit_lattice(1), samples=samples)
    assert any("symmetrized" in str(w.message) for w in rec)
    assert np.allclose(g.samples[0], [[2.0, 0.35], [0.35, 3.0]])


def test_coefficient_eigenvalue_bounds(sin_coefficient_1d):
    flat = sin_coefficient_1d.samples.reshape(-1, 1, 1)
    eigs = np.linalg.eigvalsh(flat)
    assert eigs.min() >= 1.0 / sin_coefficient_1d.norm_inv_sup - 1e-10
    assert eigs.max() <= sin_coefficient_1d.norm_sup + 1e-10


def test_coefficient_must_be_positive(lattice_1d):
    samples = np.tile(np.array([[-1.0]]), (4, 1, 1))
    with pytest.raises(ValueError):
        ph.PeriodicCoefficient(lattice=lattice_1d, samples=samples)


def test_sample_scaled_constant(lattice_2d):
    g = ph.PeriodicCoefficient.constant(5.0, lattice_2d)
    pts = np.array([[0.3, 0.7], [12.4, -3.1]])
    vals = ph.sample_scaled(g, 0.37, pts)
    assert np.allclose(vals, 5.0, atol=1e-12)


def test_sample_scaled_sin_value(lattice_1d):
    g = ph.PeriodicCoefficient.from_callable(
        lambda y: (2 + np.sin(2 * np.pi * y[:, 0]))[:, None, None],
        lattice_1d, 8, "linear")
    # x/eps = 0.5 is a grid node, so interpolation is exact there
    val = ph.sample_scaled(g, 0.25, np.array([[0.125]]))
    assert val[0, 0, 0] == pytest.approx(2.0, abs=1e-14)


def test_sample_scaled_periodicity(sin_coefficient_1d):
    eps = 0.13
    x = np.array([[0.211], [0.731]])
    shifted = x + eps * 1.0
    a = ph.sample_scaled(sin_coefficient_1d, eps, x)
    b = ph.sample_scaled(sin_coefficient_1d, eps, shifted)
    assert np.allclose(a, b, atol=1e-10)


def test_symbol_bounds_1d(deriv_1d):
    assert deriv_1d.alpha0 == pytest.approx(1.0, abs=1e-12)
    assert deriv_1d.alpha1 == pytest.approx(1.0, abs=1e-12)


def test_symbol_bounds_gradient(grad_2d):
    assert grad_2d.alpha0 == pytest.approx(1.0, abs=1e-12)
    assert grad_2d.alpha1 == pytest.approx(1.0, abs=1e-12)


def test_symbol_bounds_anisotropic():
    mats = np.zeros((2, 2, 1))
    mats[0, 0, 0] = 1.0
    mats[1, 1, 0] = 2.0
    sym = ph.DifferentialSymbol.create(mats)
    assert sym.alpha0 == pytest.approx(1.0, abs=1e-6)
    assert sym.alpha1 == pytest.approx(4.0, abs=1e-6)


def test_symbol_rank_violation():
    mats = np.zeros((2, 2, 1))
    mats[0, 0, 0] = 1.0        # b(theta) = (theta_1, 0): drops rank at theta = e_2
    with pytest.raises(EllipticityError):
        ph.DifferentialSymbol.create(mats)


def test_symbol_bounds_refinement_monotone():
    mats = np.zeros((2, 2, 1))
    mats[0] = [[1.0], [0.3]]
    mats[1] = [[0.1], [1.7]]
    a0_coarse, a1_coarse = ph.symbol_bounds(mats, n_angles=64)
    a0_fine, a1_fine = ph.symbol_bounds(mats, n_angles=4096)
    assert a0_fine <= a0_coarse + 1e-14
    assert a1_fine >= a1_coarse - 1e-14
