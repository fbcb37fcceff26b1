"""Truncated eigenbases of the model operators and their quadrature grids.

Two families are provided: Hermite functions (eigenfunctions of the
harmonic oscillator, in 1D or as 2D tensor products ordered by total
degree) and the symmetric-gauge eigenfunctions of the 2D Landau
Hamiltonian with constant field.  Every constructed basis comes with a
Gauss-Hermite derived grid on which the basis is discretely orthonormal,
so matrix assembly reduces to weighted sums over nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, roots_hermite

HERMITE_1D = "hermite_1d"
HERMITE_TENSOR = "hermite_tensor"
LANDAU_SYMMETRIC = "landau_symmetric"

#: Discrete orthonormality tolerance guaranteed at default padding.
ORTHONORMALITY_TOL = 1e-10


class BasisError(ValueError):
    """Raised for invalid basis/grid parameters or mismatched pairs."""


@dataclass(frozen=True)
class BasisSpec:
    """A truncated eigenbasis.

    ``labels`` carries one entry per basis function: the Hermite degree
    ``n`` (1D), the multi-index ``(j, k)`` (2D tensor, graded by total
    degree with lexicographic tie-break), or the Landau pair
    ``(level, angular)``.
    """

    kind: str
    size: int
    labels: tuple
    dim: int
    length_scale: float = 1.0
    b_field: float = 0.0

    def __post_init__(self):
        # Builders require size >= 1; a bare zero-size spec stays legal so
        # degenerate evaluation paths return empty matrices.
        if self.size < 0 or self.size != len(self.labels):
            raise BasisError("basis size must match the label count")
        if len(set(self.labels)) != len(self.labels):
            raise BasisError("basis labels must be distinct")
        if self.length_scale <= 0:
            raise BasisError("length_scale must be positive")
        if self.kind == LANDAU_SYMMETRIC:
            if self.dim != 2:
                raise BasisError("landau_symmetric is implemented for n = 2 only")
            if self.b_field <= 0:
                raise BasisError("landau_symmetric requires B0 > 0")


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and strictly positive weights for position-space integrals."""

    nodes: np.ndarray  # (npts, dim)
    weights: np.ndarray  # (npts,)
    padding_factor: float
    dim: int

    def __post_init__(self):
        if self.weights.ndim != 1 or self.nodes.shape[0] != self.weights.shape[0]:
            raise BasisError("nodes and weights must have matching length")
        if np.any(self.weights <= 0):
            raise BasisError("quadrature weights must be strictly positive")
        if self.padding_factor < 1:
            raise BasisError("padding_factor must be >= 1")

    @property
    def npts(self) -> int:
        return self.nodes.shape[0]


def _hermite_recursion(n_max: int, x: np.ndarray):
    """Exponent-tracked recursion for the normalized Hermite functions.

    Yields (n, mantissa, log_scale) with h_n(x) = mantissa * exp(log_scale)
    per point.  The plain value recursion keeps intermediates of order
    one in the classically allowed region, but seeds at exp(-x^2/2),
    which underflows beyond |x| ~ 38; carrying the exponent separately
    keeps the top modes correct at the far quadrature nodes.
    """
    x = np.asarray(x, dtype=float)
    log_scale = -0.5 * x**2 - 0.25 * math.log(math.pi)
    u_prev = np.zeros_like(x)
    u = np.ones_like(x)
    yield 0, u, log_scale
    for n in range(n_max):
        u_next = math.sqrt(2.0 / (n + 1)) * x * u - math.sqrt(n / (n + 1)) * u_prev
        u_prev, u = u, u_next
        big = np.abs(u) > 1e150
        if np.any(big):
            u_prev = np.where(big, u_prev * 1e-150, u_prev)
            u = np.where(big, u * 1e-150, u)
            log_scale = log_scale + np.where(big, 150.0 * math.log(10.0), 0.0)
        yield n + 1, u, log_scale


def hermite_function_values(n_max: int, x: np.ndarray) -> np.ndarray:
    """Values of the normalized Hermite functions h_0..h_{n_max} at ``x``.

    Stable three-term recursion on function values (raw Hermite
    polynomials overflow beyond degree ~30), with exponent tracking so
    far-field nodes of large quadrature rules stay finite.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((x.shape[0], n_max + 1))
    with np.errstate(under="ignore"):
        for n, mant, log_scale in _hermite_recursion(n_max, x):
            out[:, n] = mant * np.exp(log_scale)
    return out


def hermite_function_derivatives(values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Derivatives h_n'(x) from the ladder identity h_n' = sqrt(2n) h_{n-1} - x h_n."""
    n_max = values.shape[1] - 1
    out = np.empty_like(values)
    out[:, 0] = -x * values[:, 0]
    for n in range(1, n_max + 1):
        out[:, n] = math.sqrt(2.0 * n) * values[:, n - 1] - x * values[:, n]
    return out


def _gauss_hermite(order: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Scaled Gauss-Hermite nodes and flat-measure weights.

    Returns nodes ``scale * t_i`` and weights ``scale * w_i * exp(t_i^2)``
    so that sums approximate the plain Lebesgue integral of functions
    with Gaussian decay matching the basis.  The textbook weights
    underflow beyond order ~700, so the modified weights come from the
    identity w_i exp(t_i^2) = 1 / (order * h_{order-1}(t_i)^2) with the
    exponent-tracked recursion supplying the log of the Hermite function.
    """
    if order % 2 == 0:
        order += 1  # odd order keeps a node at the origin (sup-norm checks)
    t = roots_hermite(order)[0]
    for _, mant, log_scale in _hermite_recursion(order - 1, t):
        pass
    logw = -math.log(order) - 2.0 * (np.log(np.abs(mant)) + log_scale)
    return scale * t, scale * np.exp(logw)


def build_hermite_basis(
    dim: int,
    n_modes_per_axis: int,
    length_scale: float = 1.0,
    padding_factor: float = 2.0,
) -> tuple[BasisSpec, QuadratureGrid]:
    """Hermite-function basis with its Gauss-Hermite grid.

    For ``dim == 2`` the basis is the full tensor product of the 1D modes,
    ordered by total degree |alpha| with lexicographic tie-break, so the
    layout of golden files does not depend on dict ordering.
    """
    if dim not in (1, 2):
        raise BasisError("hermite basis supports dim in {1, 2}")
    if n_modes_per_axis < 1:
        raise BasisError("n_modes_per_axis must be >= 1")
    if length_scale <= 0:
        raise BasisError("length_scale must be positive")
    if padding_factor < 1:
        raise BasisError("padding_factor must be >= 1")

    order = int(math.ceil(padding_factor * n_modes_per_axis))
    x1, w1 = _gauss_hermite(order, length_scale)
    if dim == 1:
        labels = tuple(range(n_modes_per_axis))
        spec = BasisSpec(HERMITE_1D, n_modes_per_axis, labels, 1, length_scale)
        grid = QuadratureGrid(x1[:, None], w1, padding_factor, 1)
        return spec, grid

    labels = tuple(
        sorted(
            ((j, k) for j in range(n_modes_per_axis) for k in range(n_modes_per_axis)),
            key=lambda a: (a[0] + a[1], a),
        )
    )
    xx, yy = np.meshgrid(x1, x1, indexing="ij")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])
    weights = np.outer(w1, w1).ravel()
    spec = BasisSpec(HERMITE_TENSOR, len(labels), labels, 2, length_scale)
    grid = QuadratureGrid(nodes, weights, padding_factor, 2)
    return spec, grid


def landau_labels(max_level: int, max_angular: int) -> tuple:
    """Valid (level, angular) pairs of the symmetric-gauge eigenbasis.

    A state with angular index m in level k exists only when the radial
    index k - max(m, 0) is nonnegative; pairs violating that are skipped.
    """
    out = []
    for k in range(max_level + 1):
        for m in range(-max_angular, max_angular + 1):
            if k - max(m, 0) >= 0:
                out.append((k, m))
    return tuple(out)


def build_landau_basis(
    b_field: float,
    max_level: int,
    max_angular: int,
    padding_factor: float = 2.0,
) -> tuple[BasisSpec, QuadratureGrid]:
    """Symmetric-gauge Landau eigenbasis for n = 2 with its tensor grid.

    Basis functions are complex Gaussians times associated Laguerre
    polynomials, L^2-normalized, indexed by (level k, angular index m)
    with 0 <= k <= max_level and |m| <= max_angular.
    """
    if b_field <= 0:
        raise BasisError("b_field must be positive")
    if max_level < 0 or max_angular < 0:
        raise BasisError("max_level and max_angular must be >= 0")
    labels = landau_labels(max_level, max_angular)
    # Polynomial degree of a product of two basis functions, per axis.
    max_degree = max_angular + 2 * max_level
    order = int(math.ceil(padding_factor * (max_degree + 1)))
    scale = math.sqrt(2.0 / b_field)
    x1, w1 = _gauss_hermite(order, scale)
    xx, yy = np.meshgrid(x1, x1, indexing="ij")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])
    weights = np.outer(w1, w1).ravel()
    spec = BasisSpec(
        LANDAU_SYMMETRIC, len(labels), labels, 2, length_scale=1.0, b_field=b_field
    )
    grid = QuadratureGrid(nodes, weights, padding_factor, 2)
    return spec, grid


def _landau_norm_constant(b_field: float, n_r: int, mu: int) -> float:
    log_n = 0.5 * (
        (mu + 1) * math.log(b_field)
        + math.lgamma(n_r + 1)
        - math.log(2 * math.pi)
        - mu * math.log(2.0)
        - math.lgamma(n_r + mu + 1)
    )
    return math.exp(log_n)


def _landau_columns(
    spec: BasisSpec, pts: np.ndarray, want_gradient: bool
) -> tuple[np.ndarray, np.ndarray | None]:
    b = spec.b_field
    x = pts[:, 0]
    y = pts[:, 1]
    u = 0.5 * b * (x**2 + y**2)
    eu = np.exp(-0.5 * u)
    z = x + 1j * y
    zbar = x - 1j * y
    vals = np.empty((pts.shape[0], spec.size), dtype=complex)
    grads = (
        np.empty((pts.shape[0], spec.size, 2), dtype=complex) if want_gradient else None
    )
    for col, (k, m) in enumerate(spec.labels):
        mu = abs(m)
        n_r = k - max(m, 0)
        zeta = z if m > 0 else zbar
        dzeta_dy = 1j if m > 0 else -1j
        c = _landau_norm_constant(b, n_r, mu)
        lag = eval_genlaguerre(n_r, mu, u)
        zpow = zeta**mu if mu else np.ones_like(z)
        vals[:, col] = c * zpow * lag * eu
        if not want_gradient:
            continue
        # d/du of L * exp(-u/2); dL/du = -L_{n_r-1}^{mu+1}.
        dlag = -eval_genlaguerre(n_r - 1, mu + 1, u) if n_r >= 1 else 0.0
        radial = c * zpow * (dlag - 0.5 * lag) * eu
        if mu:
            angular = c * mu * zeta ** (mu - 1) * lag * eu
        else:
            angular = 0.0
        grads[:, col, 0] = angular + radial * b * x
        grads[:, col, 1] = angular * dzeta_dy + radial * b * y
    return vals, grads


def _hermite_columns(
    spec: BasisSpec, pts: np.ndarray, want_gradient: bool
) -> tuple[np.ndarray, np.ndarray | None]:
    ell = spec.length_scale
    if spec.kind == HERMITE_1D:
        t = pts[:, 0] / ell
        n_max = max(spec.labels)
        h = hermite_function_values(n_max, t)
        vals = h[:, list(spec.labels)] / math.sqrt(ell)
        if not want_gradient:
            return vals, None
        dh = hermite_function_derivatives(h, t)
        grads = (dh[:, list(spec.labels)] / ell**1.5)[:, :, None]
        return vals, grads

    n_max = max(max(j, k) for j, k in spec.labels)
    h0 = hermite_function_values(n_max, pts[:, 0] / ell)
    h1 = hermite_function_values(n_max, pts[:, 1] / ell)
    jj = np.array([j for j, _ in spec.labels])
    kk = np.array([k for _, k in spec.labels])
    vals = h0[:, jj] * h1[:, kk] / ell
    if not want_gradient:
        return vals, None
    d0 = hermite_function_derivatives(h0, pts[:, 0] / ell)
    d1 = hermite_function_derivatives(h1, pts[:, 1] / ell)
    grads = np.empty((pts.shape[0], spec.size, 2))
    grads[:, :, 0] = d0[:, jj] * h1[:, kk] / ell**2
    grads[:, :, 1] = h0[:, jj] * d1[:, kk] / ell**2
    return vals, grads


def evaluate_basis(spec: BasisSpec, grid: QuadratureGrid) -> np.ndarray:
    """Sample matrix: column j holds basis function j at all grid nodes."""
    if grid.dim != spec.dim:
        raise BasisError(
            f"grid dimension {grid.dim} does not match basis dimension {spec.dim}"
        )
    if spec.size == 0:
        return np.empty((grid.npts, 0))
    if spec.kind == LANDAU_SYMMETRIC:
        vals, _ = _landau_columns(spec, grid.nodes, want_gradient=False)
    else:
        vals, _ = _hermite_columns(spec, grid.nodes, want_gradient=False)
    return vals


def evaluate_basis_gradient(spec: BasisSpec, grid: QuadratureGrid) -> np.ndarray:
    """Gradient samples, shape (npts, size, dim), from ladder/analytic formulas."""
    if grid.dim != spec.dim:
        raise BasisError(
            f"grid dimension {grid.dim} does not match basis dimension {spec.dim}"
        )
    if spec.kind == LANDAU_SYMMETRIC:
        _, grads = _landau_columns(spec, grid.nodes, want_gradient=True)
    else:
        _, grads = _hermite_columns(spec, grid.nodes, want_gradient=True)
    return grads


def gram_matrix(spec: BasisSpec, grid: QuadratureGrid) -> np.ndarray:
    """Quadrature Gram matrix; equals the identity for a valid pair."""
    phi = evaluate_basis(spec, grid)
    return phi.conj().T @ (grid.weights[:, None] * phi)


def model_eigenvalues(spec: BasisSpec) -> np.ndarray:
    """Exact eigenvalues of the model operator the basis diagonalizes.

    Hermite: (2|alpha| + dim) / length_scale^2 (the paper's scale has
    length_scale = 1).  Landau: B0 (2k + 1) per (k, m) pair.
    """
    if spec.kind == LANDAU_SYMMETRIC:
        return np.array([spec.b_field * (2 * k + 1) for k, _ in spec.labels], float)
    if spec.kind == HERMITE_1D:
        degree = np.array(spec.labels, float)
    else:
        degree = np.array([j + k for j, k in spec.labels], float)
    return (2.0 * degree + spec.dim) / spec.length_scale**2
