import math

import numpy as np
import pytest

from spectral_lab import basis as B
from spectral_lab.basis import BasisError


def test_hermite_1d_discrete_orthonormality():
    spec, grid = B.build_hermite_basis(1, 4)
    g = B.gram_matrix(spec, grid)
    assert np.max(np.abs(g - np.eye(4))) < 1e-10


def test_hermite_ladder_identity_on_grid():
    # oracle: x h1 = (h0 + sqrt(2) h2) / sqrt(2), so <h0, x h1> = 1/sqrt(2)
    spec, grid = B.build_hermite_basis(1, 2)
    phi = B.evaluate_basis(spec, grid)
    x = grid.nodes[:, 0]
    val = np.sum(grid.weights * phi[:, 0] * x * phi[:, 1])
    assert abs(val - 1.0 / math.sqrt(2.0)) < 1e-12


def test_hermite_tensor_labels_graded():
    spec, grid = B.build_hermite_basis(2, 3)
    assert spec.size == 9
    assert set(spec.labels) == {(j, k) for j in range(3) for k in range(3)}
    degrees = [j + k for j, k in spec.labels]
    assert degrees == sorted(degrees)
    # ties broken lexicographically
    assert spec.labels[1] == (0, 1) and spec.labels[2] == (1, 0)
    g = B.gram_matrix(spec, grid)
    assert np.max(np.abs(g - np.eye(9))) < 1e-10


def test_ground_state_value_at_origin():
    spec, grid = B.build_hermite_basis(1, 1)
    h = B.hermite_function_values(0, np.array([0.0]))
    assert abs(h[0, 0] - math.pi ** -0.25) < 1e-12
    # the origin is a grid node, so the sampled sup matches too
    phi = B.evaluate_basis(spec, grid)
    assert abs(np.max(np.abs(phi[:, 0])) - math.pi ** -0.25) < 1e-12


def test_zero_size_basis_evaluates_empty():
    spec1, grid = B.build_hermite_basis(1, 3)
    empty = B.BasisSpec(B.HERMITE_1D, 0, (), 1)
    mat = B.evaluate_basis(empty, grid)
    assert mat.shape == (grid.npts, 0)


def test_hermite_rejects_bad_inputs():
    with pytest.raises(BasisError):
        B.build_hermite_basis(3, 4)
    with pytest.raises(BasisError):
        B.build_hermite_basis(1, 0)
    with pytest.raises(BasisError):
        B.build_hermite_basis(1, 4, length_scale=-1.0)
    with pytest.raises(BasisError):
        B.build_hermite_basis(1, 4, padding_factor=0.5)


def test_landau_labels_and_orthonormality():
    spec, grid = B.build_landau_basis(1.0, 2, 2)
    assert spec.size == 12
    for k, m in spec.labels:
        assert 0 <= k <= 2 and abs(m) <= 2
        assert k - max(m, 0) >= 0
    g = B.gram_matrix(spec, grid)
    assert np.max(np.abs(g - np.eye(spec.size))) < 1e-10


def test_landau_eigenvalues_in_first_levels():
    spec, _ = B.build_landau_basis(1.0, 2, 2)
    vals = sorted(set(B.model_eigenvalues(spec)))
    assert np.allclose(vals, [1.0, 3.0, 5.0], atol=1e-12)


def test_landau_scaling_oracle_b2():
    # scaling oracle: eigenvalues scale linearly with the field strength
    base, _ = B.build_landau_basis(1.0, 1, 1)
    scaled, _ = B.build_landau_basis(2.0, 1, 1)
    assert abs(min(B.model_eigenvalues(scaled)) - 2.0) < 1e-8
    assert np.allclose(
        B.model_eigenvalues(scaled), 2.0 * B.model_eigenvalues(base), atol=1e-12
    )


def test_landau_ground_state_normalized():
    spec, grid = B.build_landau_basis(1.0, 0, 0)
    assert spec.size == 1
    g = B.gram_matrix(spec, grid)
    assert abs(g[0, 0] - 1.0) < 1e-10


def test_landau_rejects_nonpositive_field():
    with pytest.raises(BasisError):
        B.build_landau_basis(0.0, 1, 1)
    with pytest.raises(BasisError):
        B.build_landau_basis(-2.0, 1, 1)


def test_dimension_mismatch_rejected():
    spec1, _ = B.build_hermite_basis(1, 3)
    _, grid2 = B.build_hermite_basis(2, 3)
    with pytest.raises(BasisError):
        B.evaluate_basis(spec1, grid2)


def test_identity_check_sample_matrix():
    spec, grid = B.build_hermite_basis(2, 4)
    phi = B.evaluate_basis(spec, grid)
    gram = phi.conj().T @ (grid.weights[:, None] * phi)
    assert np.max(np.abs(gram - np.eye(spec.size))) < 1e-10


def test_gradient_matches_finite_differences(rng):
    spec, _ = B.build_hermite_basis(1, 6)
    pts = rng.uniform(-3, 3, size=(40, 1))
    step = 1e-6
    up = B.BasisSpec(spec.kind, spec.size, spec.labels, 1)
    grid = B.QuadratureGrid(pts, np.ones(40), 1.0, 1)
    grads = B.evaluate_basis_gradient(up, grid)
    fplus = B.evaluate_basis(up, B.QuadratureGrid(pts + step, np.ones(40), 1.0, 1))
    fminus = B.evaluate_basis(up, B.QuadratureGrid(pts - step, np.ones(40), 1.0, 1))
    fd = (fplus - fminus) / (2 * step)
    assert np.max(np.abs(grads[:, :, 0] - fd)) < 1e-6


def test_landau_gradient_matches_finite_differences(rng):
    spec, _ = B.build_landau_basis(1.5, 2, 2)
    pts = rng.uniform(-2, 2, size=(30, 2))
    grid = B.QuadratureGrid(pts, np.ones(30), 1.0, 2)
    grads = B.evaluate_basis_gradient(spec, grid)
    step = 1e-6
    for axis in range(2):
        shift = np.zeros((30, 2))
        shift[:, axis] = step
        fp = B.evaluate_basis(spec, B.QuadratureGrid(pts + shift, np.ones(30), 1.0, 2))
        fm = B.evaluate_basis(spec, B.QuadratureGrid(pts - shift, np.ones(30), 1.0, 2))
        fd = (fp - fm) / (2 * step)
        assert np.max(np.abs(grads[:, :, axis] - fd)) < 1e-5


def test_quadrature_saturation_under_padding():
    # doubling the padding factor leaves matrix elements unchanged
    from spectral_lab.assembly import assemble_multiplication
    from spectral_lab.potentials import ScalarPotential

    pot = ScalarPotential("gaussian_bump", 1.0, (0.3,), width=1.5)
    mats = []
    for padding in (2.0, 4.0):
        spec, grid = B.build_hermite_basis(1, 8, padding_factor=padding)
        mats.append(assemble_multiplication(pot, spec, grid).entries)
    assert np.max(np.abs(mats[0] - mats[1])) < 1e-9


def test_large_order_quadrature_stays_finite():
    spec, grid = B.build_hermite_basis(1, 900, padding_factor=1.0)
    assert np.all(np.isfinite(grid.weights)) and np.all(grid.weights > 0)
    g = B.gram_matrix(spec, grid)
    assert np.max(np.abs(g - np.eye(spec.size))) < 1e-10
