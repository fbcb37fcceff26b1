"""Assembly of truncated operator matrices and assumption checks.

Matrix elements are quadrature sums over the basis grid.  Gradients of
basis functions always come from the exact ladder/analytic formulas in
:mod:`spectral_lab.basis`, so finite-difference discretizations remain
available as independent cross-checks in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import (
    LANDAU_SYMMETRIC,
    BasisError,
    BasisSpec,
    QuadratureGrid,
    evaluate_basis,
    evaluate_basis_gradient,
    model_eigenvalues,
)
from .potentials import PotentialError, ScalarPotential, VectorPotential

HERMITIAN = "hermitian"
NON_HERMITIAN = "non-hermitian"
UNKNOWN = "unknown"

HERMITICITY_TOL = 1e-10

OSCILLATOR = "oscillator"
LANDAU = "landau"


class AssemblyError(ValueError):
    """Raised for incompatible operands or unsupported assemblies."""


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex matrix tagged with its basis and a hermiticity flag."""

    entries: np.ndarray
    basis: BasisSpec
    hermitian_flag: str = UNKNOWN

    def __post_init__(self):
        m = self.entries
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise AssemblyError("operator matrix must be square")
        if m.shape[0] != self.basis.size:
            raise AssemblyError("matrix dimension does not match basis size")
        if self.hermitian_flag == HERMITIAN:
            drift = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
            if drift > HERMITICITY_TOL:
                raise AssemblyError(
                    f"matrix flagged hermitian but max |M - M*| = {drift:.3e}"
                )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if other.basis is not self.basis and other.basis != self.basis:
            raise AssemblyError("cannot add operators over different bases")
        if HERMITIAN == self.hermitian_flag == other.hermitian_flag:
            flag = HERMITIAN
        elif UNKNOWN in (self.hermitian_flag, other.hermitian_flag):
            flag = UNKNOWN
        else:
            flag = NON_HERMITIAN
        return OperatorMatrix(self.entries + other.entries, self.basis, flag)


@dataclass(frozen=True)
class AssumptionReport:
    """Computed admissibility quantities for a potential pair (V1, A1)."""

    v1_norm_lr: float
    r: float
    n: int
    delta: float
    a1_weighted_sup: float
    grad_a1_weighted_sup: float
    r_admissible: bool
    verdict: str  # "admissible" | "inadmissible"
    truncation_radius: float


def _flag_for(hermitian: bool) -> str:
    return HERMITIAN if hermitian else NON_HERMITIAN


def assemble_p0(basis: BasisSpec) -> OperatorMatrix:
    """Model operator in its own eigenbasis: an exact diagonal."""
    return OperatorMatrix(
        np.diag(model_eigenvalues(basis)).astype(complex), basis, HERMITIAN
    )


def assemble_multiplication(
    pot: ScalarPotential, basis: BasisSpec, grid: QuadratureGrid
) -> OperatorMatrix:
    """Matrix of multiplication by a scalar potential."""
    if isinstance(pot, VectorPotential):
        raise AssemblyError("multiplication operator needs a scalar potential")
    if pot.dim != basis.dim:
        raise AssemblyError("potential dimension does not match basis")
    phi = evaluate_basis(basis, grid)
    vals = pot.value(grid.nodes)
    m = phi.conj().T @ ((grid.weights * vals)[:, None] * phi)
    if pot.is_real:
        m = 0.5 * (m + m.conj().T)  # symmetrize away quadrature roundoff
    return OperatorMatrix(m.astype(complex), basis, _flag_for(pot.is_real))


def _multiplication_by_samples(
    samples: np.ndarray, phi: np.ndarray, weights: np.ndarray
) -> np.ndarray:
    return phi.conj().T @ ((weights * samples)[:, None] * phi)


def model_a0(model: str, basis: BasisSpec, pts: np.ndarray) -> np.ndarray:
    """Background vector potential A0 of the chosen model at the points."""
    if model == OSCILLATOR:
        return np.zeros_like(pts)
    if model == LANDAU:
        b = basis.b_field
        return 0.5 * b * np.column_stack([-pts[:, 1], pts[:, 0]])
    raise AssemblyError(f"unknown model {model!r}")


def assemble_perturbation_l(
    a1: VectorPotential | None,
    v1: ScalarPotential | None,
    basis: BasisSpec,
    grid: QuadratureGrid,
    model: str = OSCILLATOR,
    include_quadratic: bool = True,
) -> OperatorMatrix:
    """The perturbation -2i A1.grad - i (div A1) + 2 A0.A1 + A1^2 + V1.

    ``include_quadratic=False`` drops the A1^2 term; the remaining part is
    exactly linear in the amplitude of A1, which the threshold probe
    exploits.
    """
    n = basis.size
    phi = evaluate_basis(basis, grid)
    total = np.zeros((n, n), dtype=complex)
    hermitian = True
    if a1 is not None:
        if a1.dim != basis.dim:
            raise AssemblyError("A1 dimension does not match basis")
        if not a1.has_divergence():
            raise PotentialError("A1 must have a closed-form divergence")
        avals = a1.value(grid.nodes)
        grads = evaluate_basis_gradient(basis, grid)
        directional = np.einsum("pd,pjd->pj", avals, grads)
        total += -2j * (phi.conj().T @ ((grid.weights[:, None]) * directional))
        total += -1j * _multiplication_by_samples(
            a1.divergence(grid.nodes), phi, grid.weights
        )
        a0 = model_a0(model, basis, grid.nodes)
        total += _multiplication_by_samples(
            2.0 * np.sum(a0 * avals, axis=1), phi, grid.weights
        )
        if include_quadratic:
            total += _multiplication_by_samples(
                np.sum(avals * avals, axis=1), phi, grid.weights
            )
        hermitian = hermitian and a1.is_real
    if v1 is not None:
        if v1.dim != basis.dim:
            raise AssemblyError("V1 dimension does not match basis")
        total += _multiplication_by_samples(v1.value(grid.nodes), phi, grid.weights)
        hermitian = hermitian and v1.is_real
    if hermitian:
        total = 0.5 * (total + total.conj().T)
    return OperatorMatrix(total, basis, _flag_for(hermitian))


def assemble_full(
    model: str,
    w: ScalarPotential | None,
    a1: VectorPotential | None,
    v1: ScalarPotential | None,
    basis: BasisSpec,
    grid: QuadratureGrid,
) -> OperatorMatrix:
    """P = P0 + W + L on the truncated basis."""
    p = assemble_p0(basis)
    if w is not None:
        if not w.is_real:
            raise AssemblyError("the background W must be real-valued")
        p = p + assemble_multiplication(w, basis, grid)
    if a1 is not None or v1 is not None:
        p = p + assemble_perturbation_l(a1, v1, basis, grid, model=model)
    return p


def magnetic_field_samples(
    b_field: float, a1: VectorPotential | None, pts: np.ndarray
) -> np.ndarray:
    """Total field B(x) = B0 + curl A1 at the points."""
    total = np.full(pts.shape[0], b_field, dtype=complex)
    if a1 is not None:
        total = total + a1.curl_2d(pts)
    return total


def assemble_pauli(
    b_field: float,
    w: ScalarPotential | None,
    a1: VectorPotential | None,
    v1: ScalarPotential | None,
    basis: BasisSpec,
    grid: QuadratureGrid,
) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Diagonal blocks P+- = (-i grad + A)^2 +- B(x) + W + V1 (n = 2)."""
    if basis.dim != 2 or basis.kind != LANDAU_SYMMETRIC:
        raise AssemblyError("Pauli assembly requires the 2D Landau basis")
    base = assemble_full(LANDAU, w, a1, v1, basis, grid)
    phi = evaluate_basis(basis, grid)
    bsamp = magnetic_field_samples(b_field, a1, grid.nodes)
    bmat = _multiplication_by_samples(bsamp, phi, grid.weights)
    breal = a1 is None or a1.is_real
    if breal:
        bmat = 0.5 * (bmat + bmat.conj().T)
    if base.hermitian_flag == HERMITIAN and breal:
        flag = HERMITIAN
    else:
        flag = NON_HERMITIAN
    plus = OperatorMatrix(base.entries + bmat, basis, flag)
    minus = OperatorMatrix(base.entries - bmat, basis, flag)
    return plus, minus


def assemble_kinetic_form(
    model: str, basis: BasisSpec, grid: QuadratureGrid
) -> OperatorMatrix:
    """Quadratic-form matrix <(-i grad + A0) phi_i, (-i grad + A0) phi_j>.

    For the pure models this must reproduce the exact eigenvalue diagonal
    of ``assemble_p0`` minus the electric part, which makes it the
    standard validation of basis values, gradients and grid together.
    """
    phi = evaluate_basis(basis, grid)
    grads = evaluate_basis_gradient(basis, grid)
    a0 = model_a0(model, basis, grid.nodes)
    k = np.zeros((basis.size, basis.size), dtype=complex)
    for d in range(basis.dim):
        cd = -1j * grads[:, :, d] + a0[:, d][:, None] * phi
        k += cd.conj().T @ (grid.weights[:, None] * cd)
    k = 0.5 * (k + k.conj().T)
    return OperatorMatrix(k, basis, HERMITIAN)


def r_window_admissible(r: float, n: int) -> bool:
    """The Lebesgue exponent window of the V1 assumption."""
    if n == 2:
        return 1.0 < r
    if n >= 3:
        return r >= n / 2.0
    return False


def lr_norm_on_grid(
    pot: ScalarPotential, r: float, nodes: np.ndarray, weights: np.ndarray
) -> float:
    """Quadrature estimate of the L^r norm (r = inf -> sup over nodes)."""
    vals = np.abs(pot.value(nodes))
    if math.isinf(r):
        return float(np.max(vals)) if vals.size else 0.0
    return float(np.sum(weights * vals**r) ** (1.0 / r))


def build_box_grid(
    dim: int, radius: float, n_axis: int, grading: float = 6.0
) -> QuadratureGrid:
    """Tensor Gauss-Legendre grid on [-radius, radius]^dim with sinh grading.

    The sinh map concentrates nodes near the origin (where the potential
    families vary on scale one) while still reaching the large radii the
    decay estimates need.
    """
    if dim < 1 or n_axis < 2 or radius <= 0:
        raise BasisError("invalid box grid parameters")
    t, w = np.polynomial.legendre.leggauss(n_axis)
    x1 = radius * np.sinh(grading * t) / math.sinh(grading)
    w1 = w * radius * grading * np.cosh(grading * t) / math.sinh(grading)
    axes = [x1] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.column_stack([m.ravel() for m in mesh])
    weights = np.ones(nodes.shape[0])
    for d in range(dim):
        shape = [1] * dim
        shape[d] = n_axis
        weights *= np.broadcast_to(w1.reshape(shape), [n_axis] * dim).ravel()
    return QuadratureGrid(nodes, weights, padding_factor=1.0, dim=dim)


def check_assumptions(
    v1: ScalarPotential | None,
    a1: VectorPotential | None,
    r: float,
    delta: float,
    n: int,
    grid: QuadratureGrid,
) -> AssumptionReport:
    """Quadrature estimates of the admissibility quantities and a verdict.

    An exponent outside the allowed window yields verdict "inadmissible",
    never an exception.
    """
    if grid.dim != n:
        raise AssemblyError("assumption grid dimension must equal n")
    nodes, weights = grid.nodes, grid.weights
    v1_norm = 0.0
    if v1 is not None:
        v1_norm = lr_norm_on_grid(v1, r, nodes, weights)
    a1_sup = 0.0
    grad_sup = 0.0
    if a1 is not None:
        xw = (1.0 + np.sum(nodes**2, axis=1)) ** (0.5 * (1.0 + delta))
        avals = np.abs(a1.value(nodes))
        a1_sup = float(np.max(xw * np.linalg.norm(avals, axis=1)))
        if a1.has_divergence():
            gnorm = np.zeros(nodes.shape[0])
            for comp in a1.components:
                gnorm += np.sum(np.abs(comp.gradient(nodes)) ** 2, axis=1)
            grad_sup = float(np.max(xw * np.sqrt(gnorm)))
        else:
            grad_sup = math.inf
    admissible = r_window_admissible(r, n)
    verdict = "admissible" if admissible else "inadmissible"
    radius = float(np.max(np.abs(nodes)))
    return AssumptionReport(
        v1_norm_lr=v1_norm,
        r=r,
        n=n,
        delta=delta,
        a1_weighted_sup=a1_sup,
        grad_a1_weighted_sup=grad_sup,
        r_admissible=admissible,
        verdict=verdict,
        truncation_radius=radius,
    )
