import math

import numpy as np
import pytest
from scipy.integrate import quad

from spectral_lab import assembly as A
from spectral_lab import basis as B
from spectral_lab.eigensolver import eigenvalues
from spectral_lab.potentials import (
    PotentialError,
    ScalarPotential,
    VectorPotential,
    directional_vector_potential,
)


def osc_basis(dim, n, **kw):
    return B.build_hermite_basis(dim, n, **kw)


def test_p0_hermite_diagonal():
    spec, _ = osc_basis(1, 4)
    p0 = A.assemble_p0(spec)
    assert np.allclose(np.diag(p0.entries).real, [1, 3, 5, 7], atol=1e-14)
    assert p0.hermitian_flag == A.HERMITIAN


def test_p0_landau_levels():
    spec, _ = B.build_landau_basis(1.0, 2, 2)
    diag = np.diag(A.assemble_p0(spec).entries).real
    assert set(np.round(diag, 10)) <= {1.0, 3.0, 5.0}
    spec3, _ = B.build_landau_basis(3.0, 0, 0)
    assert abs(np.diag(A.assemble_p0(spec3).entries)[0] - 3.0) < 1e-12


def test_landau_kinetic_form_is_exact_diagonal():
    spec, grid = B.build_landau_basis(1.0, 2, 2)
    k = A.assemble_kinetic_form(A.LANDAU, spec, grid)
    expect = np.diag(B.model_eigenvalues(spec))
    assert np.max(np.abs(k.entries - expect)) < 1e-8


def test_multiplication_zero_potential():
    spec, grid = osc_basis(1, 3)
    pot = ScalarPotential("gaussian_bump", 0.0, (0.0,))
    m = A.assemble_multiplication(pot, spec, grid)
    assert np.max(np.abs(m.entries)) == 0.0


def test_multiplication_x_squared_oracle():
    # ladder oracle: <h_j | x^2 | h_k> for the first two modes
    spec, grid = osc_basis(1, 2)
    phi = B.evaluate_basis(spec, grid)
    x2 = phi.conj().T @ ((grid.weights * grid.nodes[:, 0] ** 2)[:, None] * phi)
    assert np.allclose(x2, [[0.5, 0.0], [0.0, 1.5]], atol=1e-12)


def test_multiplication_imaginary_constant_is_i_identity():
    spec, grid = osc_basis(1, 4)
    pot = ScalarPotential("constant_on_ball", 1j, (0.0,), width=1e9)
    m = A.assemble_multiplication(pot, spec, grid)
    assert np.max(np.abs(m.entries - 1j * np.eye(4))) < 1e-10
    assert m.hermitian_flag == A.NON_HERMITIAN


def test_multiplication_linearity():
    spec, grid = osc_basis(1, 5)
    u = ScalarPotential("gaussian_bump", 1.0, (0.4,), width=1.2)
    v = ScalarPotential("polynomial_decay", 1.0, (-0.3,), decay=2.0)
    alpha, beta = 0.7 - 0.2j, -1.3 + 0.5j
    phi = B.evaluate_basis(spec, grid)
    mixed = alpha * u.value(grid.nodes) + beta * v.value(grid.nodes)
    direct = phi.conj().T @ ((grid.weights * mixed)[:, None] * phi)
    combo = (
        alpha * A.assemble_multiplication(u, spec, grid).entries
        + beta * A.assemble_multiplication(v, spec, grid).entries
    )
    assert np.max(np.abs(direct - combo)) < 1e-12


def test_perturbation_reduces_to_multiplication():
    spec, grid = osc_basis(1, 5)
    v1 = ScalarPotential("gaussian_bump", 0.8j, (0.1,), width=1.1)
    l_only = A.assemble_perturbation_l(None, v1, spec, grid)
    mult = A.assemble_multiplication(v1, spec, grid)
    assert np.max(np.abs(l_only.entries - mult.entries)) < 1e-14
    zero = A.assemble_perturbation_l(None, None, spec, grid)
    assert np.max(np.abs(zero.entries)) == 0.0


def test_perturbation_gradient_term_vs_finite_difference_oracle():
    """-2i A d/dx - i A' projected on a fine uniform grid, entrywise 1e-5."""
    n = 8
    spec, grid = osc_basis(1, n)
    profile = ScalarPotential("gaussian_bump", 0.6, (0.2,), width=1.3)
    a1 = directional_vector_potential(profile, (1.0,))
    ours = A.assemble_perturbation_l(a1, None, spec, grid, include_quadratic=False)
    ours = ours.entries - A._multiplication_by_samples(
        2.0 * np.sum(A.model_a0(A.OSCILLATOR, spec, grid.nodes) * a1.value(grid.nodes), axis=1),
        B.evaluate_basis(spec, grid),
        grid.weights,
    )
    # independent oracle: central differences on a fine uniform grid
    xs = np.linspace(-9.0, 9.0, 6001)
    h = xs[1] - xs[0]
    fine = B.QuadratureGrid(xs[:, None], np.full(len(xs), h), 1.0, 1)
    phi = B.evaluate_basis(spec, fine)
    dphi = np.empty_like(phi)
    dphi[1:-1] = (phi[2:] - phi[:-2]) / (2 * h)
    dphi[0] = dphi[-1] = 0.0
    avals = profile.value(fine.nodes)
    aprime = profile.gradient(fine.nodes)[:, 0]
    action = -2j * avals[:, None] * dphi - 1j * aprime[:, None] * phi
    oracle = phi.conj().T @ (fine.weights[:, None] * action)
    assert np.max(np.abs(ours - oracle)) < 1e-5


def test_perturbation_requires_divergence():
    spec, grid = osc_basis(1, 4)
    band = ScalarPotential("constant_on_ball", 1.0, (0.0,), width=1.0)
    a1 = directional_vector_potential(band, (1.0,))
    with pytest.raises(PotentialError):
        A.assemble_perturbation_l(a1, None, spec, grid)


def test_full_assembly_trivial_and_hermitian():
    spec, grid = osc_basis(1, 6)
    p = A.assemble_full(A.OSCILLATOR, None, None, None, spec, grid)
    assert np.allclose(p.entries, np.diag(B.model_eigenvalues(spec)))
    w = ScalarPotential("gaussian_bump", 0.7, (0.0,), width=2.0)
    pw = A.assemble_full(A.OSCILLATOR, w, None, None, spec, grid)
    assert pw.hermitian_flag == A.HERMITIAN
    vals = eigenvalues(pw).eigenvalues
    assert np.max(np.abs(vals.imag)) < 1e-9


def test_full_assembly_trace_linearity_oracle():
    spec, grid = osc_basis(2, 4)
    bump = ScalarPotential("gaussian_bump", 1.0, (0.0, 0.0), width=1.5)
    tau = 0.37
    p = A.assemble_full(A.OSCILLATOR, None, None, bump.scaled(1j * tau), spec, grid)
    phi = B.evaluate_basis(spec, grid)
    overlaps = np.sum(
        grid.weights[:, None] * bump.value(grid.nodes).real[:, None] * np.abs(phi) ** 2,
        axis=0,
    )
    expected = np.trace(np.diag(B.model_eigenvalues(spec))) + 1j * tau * np.sum(overlaps)
    assert abs(np.trace(p.entries) - expected) < 1e-8


def test_gauge_shift_moves_eigenvalues_by_constant():
    spec, grid = osc_basis(1, 8)
    c = 0.83
    shift = ScalarPotential("constant_on_ball", c, (0.0,), width=1e9)
    base = A.assemble_full(A.OSCILLATOR, None, None, None, spec, grid)
    shifted = A.assemble_full(A.OSCILLATOR, shift, None, None, spec, grid)
    v0 = np.sort(eigenvalues(base).eigenvalues.real)
    v1 = np.sort(eigenvalues(shifted).eigenvalues.real)
    assert np.max(np.abs(v1 - v0 - c)) < 1e-8


def test_lowest_eigenvalue_stabilizes_with_basis_size():
    v1 = ScalarPotential("gaussian_bump", 0.5, (0.0,), width=1.0)
    lows = []
    for n in (12, 24):
        spec, grid = osc_basis(1, n)
        p = A.assemble_full(A.OSCILLATOR, None, None, v1, spec, grid)
        lows.append(np.min(eigenvalues(p).eigenvalues.real))
    assert abs(lows[1] - lows[0]) < 1e-6


def test_pauli_blocks_shift_landau_levels():
    spec, grid = B.build_landau_basis(1.0, 2, 2)
    plus, minus = A.assemble_pauli(1.0, None, None, None, spec, grid)
    vp = np.sort(eigenvalues(plus).eigenvalues.real)
    vm = np.sort(eigenvalues(minus).eigenvalues.real)
    # diagonal oracle: Landau levels shifted by +-B0
    assert set(np.round(vp, 8)) <= {2.0, 4.0, 6.0}
    assert set(np.round(vm, 8)) <= {0.0, 2.0, 4.0}
    assert plus.hermitian_flag == A.HERMITIAN
    assert minus.hermitian_flag == A.HERMITIAN


def test_pauli_blocks_differ_by_twice_field_matrix():
    spec, grid = B.build_landau_basis(1.0, 1, 1)
    prof = ScalarPotential("gaussian_bump", 0.3, (0.0, 0.0), width=1.4)
    a1 = directional_vector_potential(prof, (0.5, -1.0))
    plus, minus = A.assemble_pauli(1.0, None, a1, None, spec, grid)
    phi = B.evaluate_basis(spec, grid)
    bmat = A._multiplication_by_samples(
        A.magnetic_field_samples(1.0, a1, grid.nodes), phi, grid.weights
    )
    assert np.max(np.abs(plus.entries - minus.entries - 2.0 * bmat)) < 1e-12


def test_pauli_rejects_non_landau_basis():
    spec, grid = osc_basis(2, 3)
    with pytest.raises(A.AssemblyError):
        A.assemble_pauli(1.0, None, None, None, spec, grid)


def test_check_assumptions_window():
    grid = A.build_box_grid(3, 40.0, 21)
    rep = A.check_assumptions(None, None, r=1.0, delta=0.5, n=3, grid=grid)
    assert rep.verdict == "inadmissible"
    rep2 = A.check_assumptions(None, None, r=2.0, delta=0.5, n=3, grid=grid)
    assert rep2.verdict == "admissible" and rep2.v1_norm_lr == 0.0
    # n = 2 admits any r > 1
    grid2 = A.build_box_grid(2, 40.0, 21)
    assert A.check_assumptions(None, None, 1.5, 0.5, 2, grid2).verdict == "admissible"
    assert A.check_assumptions(None, None, 1.0, 0.5, 2, grid2).verdict == "inadmissible"
    assert A.check_assumptions(None, None, math.inf, 0.5, 2, grid2).verdict == "admissible"


def test_check_assumptions_radial_oracle_one_percent():
    # ||<x>^-2||_{L^2(R^3)}^2 against an independent radial quadrature
    v1 = ScalarPotential("polynomial_decay", 1.0, (0.0, 0.0, 0.0), decay=2.0)
    grid = A.build_box_grid(3, 200.0, 110)
    rep = A.check_assumptions(v1, None, r=2.0, delta=0.5, n=3, grid=grid)
    radial, _ = quad(lambda s: 4.0 * math.pi * s**2 * (1.0 + s**2) ** -2, 0.0, np.inf)
    assert abs(rep.v1_norm_lr**2 - radial) / radial < 0.01


def test_check_assumptions_weighted_a1_sups():
    prof = ScalarPotential("gaussian_bump", 0.2, (0.0, 0.0), width=1.0)
    a1 = directional_vector_potential(prof, (1.0, 0.0))
    grid = A.build_box_grid(2, 30.0, 41)
    rep = A.check_assumptions(None, a1, r=2.0, delta=0.5, n=2, grid=grid)
    assert rep.a1_weighted_sup > 0 and np.isfinite(rep.grad_a1_weighted_sup)


def test_hermitian_flag_validation():
    spec, _ = osc_basis(1, 2)
    bad = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    with pytest.raises(A.AssemblyError):
        A.OperatorMatrix(bad, spec, A.HERMITIAN)


def test_real_assembly_is_hermitian_to_tolerance():
    spec, grid = osc_basis(2, 4)
    w = ScalarPotential("compact_bump", 1.1, (0.2, -0.1), width=3.0)
    m = A.assemble_multiplication(w, spec, grid)
    assert np.max(np.abs(m.entries - m.entries.conj().T)) <= 1e-10
