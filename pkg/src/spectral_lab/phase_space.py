"""Phase-space machinery: escape function, Weyl quantization, calculus checks.

The escape function is the bounded symbol whose transport derivative
along the free flow dominates a weighted elliptic quantity; its defining
cutoffs live in :mod:`spectral_lab.cutoffs`.  Grid Weyl quantization
uses a periodic torus surrogate; every spectral comparison of quantized
operators is restricted to phase-space bulk states (smooth windows in
both position and frequency) to suppress wrap-around artifacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cutoffs

GRID_MAX_SPACING = 0.25
GRID_MIN_RADIUS = 10.0


class PhaseSpaceError(ValueError):
    """Raised for invalid grids, symbols or cutoff parameters."""


@dataclass(frozen=True)
class SymbolField:
    """A phase-space function a(x, xi) with optional closed-form gradient.

    ``fn(x, xi)`` must broadcast over arrays; gradients return arrays of
    the same shape per coordinate.  ``weight_note`` records the symbol
    class the field targets (informational only).
    """

    fn: object
    grad_x: object = None
    grad_xi: object = None
    weight_note: str = ""

    def __call__(self, x, xi):
        return self.fn(x, xi)

    def gradient_x(self, x, xi, step: float = 1e-5):
        if self.grad_x is not None:
            return self.grad_x(x, xi)
        return (self.fn(x + step, xi) - self.fn(x - step, xi)) / (2.0 * step)

    def gradient_xi(self, x, xi, step: float = 1e-5):
        if self.grad_xi is not None:
            return self.grad_xi(x, xi)
        return (self.fn(x, xi + step) - self.fn(x, xi - step)) / (2.0 * step)


@dataclass(frozen=True)
class EscapeFunctionParams:
    """Parameters of the escape function.

    ``m0`` must exceed 2 and ``mu`` lies in (0, 1]; the cutoff builders
    default to the pinned smooth bumps and must respect the support and
    monotonicity constraints (see :func:`verify_cutoffs`).
    """

    m0: float = 3.0
    mu: float = 0.5
    psi: object = cutoffs.psi
    psi_deriv: object = cutoffs.psi_deriv
    chi: object = cutoffs.chi
    chi_deriv: object = cutoffs.chi_deriv

    def __post_init__(self):
        if not self.m0 > 2.0:
            raise PhaseSpaceError("m0 must be > 2")
        if not 0.0 < self.mu <= 1.0:
            raise PhaseSpaceError("mu must lie in (0, 1]")


def verify_cutoffs(params: EscapeFunctionParams, n_check: int = 2001) -> None:
    """Pointwise support/monotonicity verification of psi and chi."""
    t = np.linspace(-2.0, 2.0, n_check)
    p = params.psi(t)
    c = params.chi(t)
    dp = params.psi_deriv(t)
    if np.any(p[t < 0.25] != 0.0):
        raise PhaseSpaceError("psi must vanish below 1/4")
    if np.max(np.abs(p[t >= 0.5] - 1.0)) > 1e-12:
        raise PhaseSpaceError("psi must equal 1 above 1/2")
    if np.min(dp) < -1e-12:
        raise PhaseSpaceError("psi must be nondecreasing")
    if np.any((p < -1e-12) | (p > 1.0 + 1e-12)) or np.any((c < -1e-12) | (c > 1.0 + 1e-12)):
        raise PhaseSpaceError("cutoffs must take values in [0, 1]")
    if np.max(np.abs(c[t <= 0.5] - 1.0)) > 1e-12:
        raise PhaseSpaceError("chi must equal 1 below 1/2")
    if np.any(c[t > 1.0] != 0.0):
        raise PhaseSpaceError("chi must vanish above 1")


@dataclass(frozen=True)
class PhaseGrid:
    """Tensor grid over (x, xi) in [-radius, radius]^2 (one space dimension)."""

    radius: float
    spacing: float

    def __post_init__(self):
        if self.radius < GRID_MIN_RADIUS:
            raise PhaseSpaceError(f"phase grid radius must be >= {GRID_MIN_RADIUS}")
        if self.spacing > GRID_MAX_SPACING:
            raise PhaseSpaceError(f"phase grid spacing must be <= {GRID_MAX_SPACING}")
        if self.spacing <= 0:
            raise PhaseSpaceError("phase grid spacing must be positive")

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        n = int(round(2.0 * self.radius / self.spacing)) + 1
        ax = np.linspace(-self.radius, self.radius, n)
        return ax, ax

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x, xi = self.axes()
        return np.meshgrid(x, xi, indexing="ij")


# -- escape function ---------------------------------------------------------


def _pieces(x, xi, params: EscapeFunctionParams):
    """Shared intermediates of the escape function and its gradient."""
    bx = np.sqrt(1.0 + x * x)
    bxi = np.sqrt(1.0 + xi * xi)
    a = x * xi / bxi
    theta = a / bx
    r = bx / bxi
    ba = np.sqrt(1.0 + a * a)
    mtilde = params.m0 - ba ** (-params.mu)
    psi_p = params.psi(theta)
    psi_m = params.psi(-theta)
    psi0 = 1.0 - psi_p - psi_m
    psi1 = psi_m - psi_p
    chi_r = params.chi(r)
    return bx, bxi, a, theta, r, ba, mtilde, psi0, psi1, chi_r


def eval_lambda(x, xi, params: EscapeFunctionParams) -> np.ndarray:
    """The escape function lambda; bounded by m0 + 1 uniformly."""
    x = np.asarray(x, float)
    xi = np.asarray(xi, float)
    _, _, _, theta, _, _, mtilde, psi0, psi1, chi_r = _pieces(x, xi, params)
    return -(theta * psi0 - mtilde * psi1) * chi_r


def eval_lambda_grad_x(x, xi, params: EscapeFunctionParams) -> np.ndarray:
    """Closed-form spatial gradient of the escape function."""
    x = np.asarray(x, float)
    xi = np.asarray(xi, float)
    bx, bxi, a, theta, r, ba, mtilde, psi0, psi1, chi_r = _pieces(x, xi, params)
    da = xi / bxi
    dtheta = da / bx - theta * x / bx**2
    dr = x / (bx * bxi)
    dmt = params.mu * a * ba ** (-params.mu - 2.0) * da
    dpsi_p = params.psi_deriv(theta)
    dpsi_m = params.psi_deriv(-theta)
    dpsi0 = dpsi_m - dpsi_p
    dpsi1 = -dpsi_m - dpsi_p
    core = theta * psi0 - mtilde * psi1
    dcore = (psi0 + theta * dpsi0 - mtilde * dpsi1) * dtheta - dmt * psi1
    return -(dcore * chi_r + core * params.chi_deriv(r) * dr)


def escape_symbol(params: EscapeFunctionParams) -> SymbolField:
    """The escape function packaged as a SymbolField (spatial gradient only)."""
    return SymbolField(
        fn=lambda x, xi: eval_lambda(x, xi, params),
        grad_x=lambda x, xi: eval_lambda_grad_x(x, xi, params),
        weight_note="bounded, first metric",
    )


def hamiltonian_derivative(sym: SymbolField, x, xi) -> np.ndarray:
    """Transport derivative 2 xi . grad_x along the free flow."""
    return 2.0 * np.asarray(xi, float) * sym.gradient_x(x, xi)


def theta_symbol() -> SymbolField:
    def f(x, xi):
        x = np.asarray(x, float)
        xi = np.asarray(xi, float)
        return x * xi / (np.sqrt(1.0 + xi * xi) * np.sqrt(1.0 + x * x))

    def gx(x, xi):
        x = np.asarray(x, float)
        xi = np.asarray(xi, float)
        bx = np.sqrt(1.0 + x * x)
        bxi = np.sqrt(1.0 + xi * xi)
        theta = x * xi / (bxi * bx)
        return xi / (bxi * bx) - theta * x / bx**2

    return SymbolField(fn=f, grad_x=gx)


@dataclass
class EscapeCertificate:
    """Result of the escape-function inequality check."""

    c: float
    c_constant: float
    verdict: str  # "PASS" | "FAIL"
    min_location: tuple
    min_margin: float
    window_stable: bool
    candidates: list = field(default_factory=list)
    grid: PhaseGrid | None = None
    margin_fields: dict | None = None


def _margin_quantities(params: EscapeFunctionParams, xx, yy, lhs_override=None):
    if lhs_override is not None:
        lhs = lhs_override(xx, yy)
    else:
        lam = escape_symbol(params)
        lhs = -hamiltonian_derivative(lam, xx, yy)
    rhs = (1.0 + xx * xx) ** (-0.5 * (1.0 + params.mu)) * np.sqrt(
        1.0 + xx * xx + yy * yy
    )
    return lhs, rhs


def escape_margin_min(
    params: EscapeFunctionParams,
    radius: float,
    spacing: float,
    c: float,
    lhs_override=None,
    chunk_rows: int = 256,
) -> tuple[float, tuple]:
    """Minimum of the escape margin L - c R over a window, chunked in x.

    Streaming over x-rows keeps the doubled-window validations at a
    bounded memory footprint.
    """
    n = int(round(2.0 * radius / spacing)) + 1
    ax = np.linspace(-radius, radius, n)
    best = math.inf
    loc = (0.0, 0.0)
    for start in range(0, n, chunk_rows):
        xs = ax[start : start + chunk_rows]
        xx, yy = np.meshgrid(xs, ax, indexing="ij")
        lhs, rhs = _margin_quantities(params, xx, yy, lhs_override)
        margin = lhs - c * rhs
        idx = int(np.argmin(margin))
        m = float(margin.ravel()[idx])
        if m < best:
            best = m
            loc = (float(xx.ravel()[idx]), float(yy.ravel()[idx]))
    return best, loc


def check_escape_inequality(
    params: EscapeFunctionParams,
    grid: PhaseGrid,
    c_min: float = 1e-3,
    lhs_override=None,
) -> EscapeCertificate:
    """Certify -{|xi|^2, lambda} >= c <x>^(-1-mu) <X> - C on the grid.

    A candidate c is accepted when the implied constant is not an
    artifact of the finite window: the worst margin over the full grid
    must match the half-radius sub-window (within 5 percent), sit away
    from the boundary, and survive re-evaluation on the doubled window
    at the same spacing.  The certified c is the largest such candidate
    on a factor-2 ladder in [c_min, 1]; C comes from the doubled window
    plus a small pad so refinements cannot flip the verdict.
    """
    verify_cutoffs(params)
    xx, yy = grid.mesh()
    lhs, rhs = _margin_quantities(params, xx, yy, lhs_override)
    half = (np.abs(xx) <= grid.radius / 2.0) & (np.abs(yy) <= grid.radius / 2.0)
    candidates = []
    chosen = None
    c = 1.0
    while c >= c_min:
        margin = lhs - c * rhs
        idx = int(np.argmin(margin))
        loc = (float(xx.ravel()[idx]), float(yy.ravel()[idx]))
        m_full = float(margin.ravel()[idx])
        m_half = float(np.min(margin[half]))
        c_full = max(0.0, -m_full)
        c_half = max(0.0, -m_half)
        # Pre-screen: a constant produced by the window boundary roughly
        # doubles from the half window to the full one.
        stable = c_full <= 1.05 * c_half + 1e-9
        entry = {"c": c, "C": c_full, "C_half_window": c_half, "stable": stable}
        if stable and chosen is None:
            m_double, _ = escape_margin_min(
                params, 2.0 * grid.radius, grid.spacing, c, lhs_override
            )
            c_double = max(0.0, -m_double)
            entry["C_doubled_window"] = c_double
            if c_double <= 1.05 * c_full + 1e-9:
                # The worst margin creeps towards its asymptote like
                # R^(-1/2); pad C by three times the observed doubling
                # drift so larger windows and finer grids stay covered.
                drift = max(0.0, c_double - c_full)
                c_const = c_double + 3.0 * drift + 1e-9
                chosen = (c, c_const, loc, m_full)
                candidates.append(entry)
                break
            entry["stable"] = False
        candidates.append(entry)
        c *= 0.5
    if chosen is None:
        margin = lhs - c_min * rhs
        idx = int(np.argmin(margin))
        loc = (float(xx.ravel()[idx]), float(yy.ravel()[idx]))
        return EscapeCertificate(
            c=0.0,
            c_constant=math.inf,
            verdict="FAIL",
            min_location=loc,
            min_margin=float(np.min(margin)),
            window_stable=False,
            candidates=candidates,
            grid=grid,
            margin_fields={"x": xx, "xi": yy, "lhs": lhs, "rhs": rhs, "margin": margin},
        )
    c_star, c_const, loc, m_full = chosen
    margin = lhs - c_star * rhs
    return EscapeCertificate(
        c=c_star,
        c_constant=c_const,
        verdict="PASS",
        min_location=loc,
        min_margin=m_full,
        window_stable=True,
        candidates=candidates,
        grid=grid,
        margin_fields={"x": xx, "xi": yy, "lhs": lhs, "rhs": rhs, "margin": margin},
    )


def recheck_certificate(
    params: EscapeFunctionParams,
    cert: EscapeCertificate,
    grid: PhaseGrid,
    lhs_override=None,
) -> float:
    """Worst slack of a fixed certificate (c, C) on another grid.

    Nonnegative return means the certified inequality still holds there.
    """
    m, _ = escape_margin_min(
        params, grid.radius, grid.spacing, cert.c, lhs_override
    )
    return m + cert.c_constant


@dataclass
class ThetaMarginReport:
    min_margin: float
    argmin: tuple
    n_checked: int
    n_total: int


def check_htheta_inequality(
    params: EscapeFunctionParams, grid: PhaseGrid
) -> ThetaMarginReport:
    """Transport-derivative bound for the direction variable theta.

    On the support of psi0(theta) the derivative of theta along the free
    flow dominates <xi>/<x> - 2; checked pointwise wherever
    psi0(theta) > 0.
    """
    xx, yy = grid.mesh()
    th = theta_symbol()
    tvals = th(xx, yy)
    psi0 = 1.0 - params.psi(tvals) - params.psi(-tvals)
    mask = psi0 > 0.0
    lhs = hamiltonian_derivative(th, xx, yy)
    bound = np.sqrt(1.0 + yy * yy) / np.sqrt(1.0 + xx * xx) - 2.0
    margin = np.where(mask, lhs - bound, np.inf)
    idx = int(np.argmin(margin))
    return ThetaMarginReport(
        min_margin=float(np.min(margin[mask])),
        argmin=(float(xx.ravel()[idx]), float(yy.ravel()[idx])),
        n_checked=int(np.sum(mask)),
        n_total=int(mask.size),
    )


# -- grid Weyl quantization --------------------------------------------------


@dataclass(frozen=True)
class WeylGrid:
    """Periodic 1D quantization grid and its discrete Fourier dual."""

    n_points: int
    radius: float

    def __post_init__(self):
        if self.n_points < 4 or self.n_points % 2 != 0:
            raise PhaseSpaceError("n_points must be even and >= 4 (dual grid symmetry)")
        if self.radius <= 0:
            raise PhaseSpaceError("radius must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.radius / self.n_points

    @property
    def dxi(self) -> float:
        return math.pi / self.radius

    def x_nodes(self) -> np.ndarray:
        return -self.radius + self.dx * np.arange(self.n_points)

    def xi_nodes(self) -> np.ndarray:
        return self.dxi * (np.arange(self.n_points) - self.n_points // 2)

    def metadata(self) -> dict:
        return {
            "convention": "periodic torus, midpoint (Weyl) rule",
            "x_nodes": "-R + 2R/N * j, j = 0..N-1",
            "xi_nodes": "pi/R * (m - N/2), m = 0..N-1",
            "n_points": self.n_points,
            "radius": self.radius,
        }


def weyl_quantize_1d(sym: SymbolField, grid: WeylGrid) -> np.ndarray:
    """Matrix of the Weyl quantization of a symbol on the periodic grid.

    K[j, k] = dx dxi / (2 pi) * sum_m sym((x_j + x_k)/2, xi_m) e^{i (x_j - x_k) xi_m}.
    """
    x = grid.x_nodes()
    xi = grid.xi_nodes()
    mid = 0.5 * (x[:, None] + x[None, :])
    diff = x[:, None] - x[None, :]
    k = np.zeros((grid.n_points, grid.n_points), dtype=complex)
    for m in range(grid.n_points):
        k += np.asarray(sym(mid, xi[m]), dtype=complex) * np.exp(1j * xi[m] * diff)
    k *= grid.dx * grid.dxi / (2.0 * math.pi)
    return k


def bulk_windows(
    grid: WeylGrid, fraction: float = 0.5, rolloff: float = 0.75
) -> tuple[np.ndarray, np.ndarray]:
    """Smooth plateau windows in position and frequency.

    Returns (w_x over nodes, w_xi over dual nodes).  Hard spatial
    cutoffs admit Nyquist-oscillating states near the wrap seam that
    dominate defect norms; smooth windows in both variables suppress
    them superpolynomially.
    """
    if not 0.0 < fraction < rolloff <= 1.0:
        raise PhaseSpaceError("need 0 < fraction < rolloff <= 1")
    x = grid.x_nodes()
    xi = grid.xi_nodes()
    xi_max = grid.dxi * grid.n_points / 2.0
    wx = cutoffs.plateau_window(x, fraction * grid.radius, rolloff * grid.radius)
    wxi = cutoffs.plateau_window(xi, fraction * xi_max, rolloff * xi_max)
    return wx, wxi


def _frequency_filter_matrix(grid: WeylGrid, wxi: np.ndarray) -> np.ndarray:
    """Circulant matrix applying the smooth frequency window."""
    n = grid.n_points
    # Column k of F^-1 diag(q) F in the fftshift-ed ordering used here.
    q = np.fft.ifftshift(wxi)
    kernel = np.fft.ifft(q)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return kernel[idx]


def bulk_compression(grid: WeylGrid, fraction: float = 0.5) -> np.ndarray:
    """The compression T = W_x Q W_x used for bulk defect norms (hermitian)."""
    wx, wxi = bulk_windows(grid, fraction)
    q = _frequency_filter_matrix(grid, wxi)
    t = wx[:, None] * q * wx[None, :]
    return 0.5 * (t + t.conj().T)


def bulk_defect_norm(defect: np.ndarray, compression: np.ndarray) -> float:
    """Spectral norm of the bulk-compressed defect matrix."""
    return float(np.linalg.norm(compression @ defect @ compression, 2))


@dataclass
class MoyalDefects:
    d0: float
    d1: float


def poisson_bracket(a: SymbolField, b: SymbolField, x, xi) -> np.ndarray:
    """{a, b} = da/dxi db/dx - da/dx db/dxi."""
    return a.gradient_xi(x, xi) * b.gradient_x(x, xi) - a.gradient_x(x, xi) * b.gradient_xi(x, xi)


def moyal_leading_check(
    a: SymbolField, b: SymbolField, grid: WeylGrid, fraction: float = 0.5
) -> MoyalDefects:
    """Defect norms of the zeroth and first order composition expansions.

    d0 = ||Op(a) Op(b) - Op(ab)||, d1 with the ab + {a,b}/(2i) correction;
    both restricted to the phase-space bulk.
    """
    ka = weyl_quantize_1d(a, grid)
    kb = weyl_quantize_1d(b, grid)
    prod = SymbolField(fn=lambda x, xi: a(x, xi) * b(x, xi))
    corr = SymbolField(
        fn=lambda x, xi: a(x, xi) * b(x, xi) + poisson_bracket(a, b, x, xi) / 2j
    )
    k_ab = weyl_quantize_1d(prod, grid)
    k_corr = weyl_quantize_1d(corr, grid)
    comp = bulk_compression(grid, fraction)
    d0 = bulk_defect_norm(ka @ kb - k_ab, comp)
    d1 = bulk_defect_norm(ka @ kb - k_corr, comp)
    return MoyalDefects(d0=d0, d1=d1)


@dataclass
class GardingCertificate:
    lambda_min: float
    c_default: float
    verdict: str
    subspace_dim: int
    grid: WeylGrid


def bulk_subspace(grid: WeylGrid, fraction: float = 0.5, keep: float = 0.5) -> np.ndarray:
    """Orthonormal basis of phase-space bulk states.

    Columns span the eigenspace of the compression operator with
    eigenvalue >= ``keep``: states essentially untouched by both the
    spatial and the frequency window.
    """
    t = bulk_compression(grid, fraction)
    vals, vecs = np.linalg.eigh(t)
    return vecs[:, vals >= keep]


def garding_certificate(
    sym: SymbolField,
    grid: WeylGrid,
    c_default: float = 1.0,
    fraction: float = 0.5,
    eig_fn=None,
) -> GardingCertificate:
    """Lower bound of the hermitized quantization on the bulk subspace.

    The symbol must be nonnegative on the quantization grid; a negative
    sample raises with the witness point.  ``eig_fn`` maps a hermitian
    matrix to its (real) eigenvalues and defaults to the package
    eigensolver.
    """
    x = grid.x_nodes()
    mid = 0.5 * (x[:, None] + x[None, :])
    xi = grid.xi_nodes()
    vals = np.asarray(sym(mid[:, :, None], xi[None, None, :]), float)
    if vals.min() < 0.0:
        j, k, m = np.unravel_index(int(np.argmin(vals)), vals.shape)
        raise PhaseSpaceError(
            "symbol is negative at "
            f"(x={0.5 * (x[j] + x[k]):.6g}, xi={xi[m]:.6g}): {vals[j, k, m]:.3e}"
        )
    kq = weyl_quantize_1d(sym, grid)
    h = 0.5 * (kq + kq.conj().T)
    u = bulk_subspace(grid, fraction)
    hb = u.conj().T @ h @ u
    hb = 0.5 * (hb + hb.conj().T)
    if eig_fn is None:
        from .eigensolver import eigenvalues as _eig

        w = _eig(hb, compute_residuals=False).eigenvalues.real
    else:
        w = np.asarray(eig_fn(hb), float)
    lam_min = float(np.min(w))
    verdict = "PASS" if lam_min >= -c_default else "FAIL"
    return GardingCertificate(
        lambda_min=lam_min,
        c_default=c_default,
        verdict=verdict,
        subspace_dim=u.shape[1],
        grid=grid,
    )
