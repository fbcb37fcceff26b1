"""Dense complex eigensolver with residual certification.

All spectra are computed by unitary Hessenberg reduction followed by
implicitly shifted QR with deflation (Wilkinson shifts, deterministic
exceptional shift every 30 stalled iterations, iteration cap
40 * dimension).  The bulge chase runs in the compiled kernel when
available and in its pure-numpy twin otherwise; see
:mod:`spectral_lab._kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import BACKEND_NAME, QRConvergenceError, hessenberg, qr_hessenberg_eigvals
from .assembly import HERMITIAN, OperatorMatrix

#: residual threshold (relative to 1 + |lambda|) below which an
#: eigenvalue counts as converged in a single solve
RESIDUAL_TOL = 1e-8

MAXITER_FACTOR = 40
EXCEPTIONAL_EVERY = 30


class EigensolverConvergenceError(RuntimeError):
    """QR failed to deflate; carries the stuck block."""

    def __init__(self, block, iterations):
        lo, hi = block
        super().__init__(
            f"eigenvalue iteration stuck on block {lo}:{hi + 1} "
            f"after {iterations} iterations"
        )
        self.block = block


def _sort_key(w: np.ndarray) -> np.ndarray:
    return np.lexsort((w.imag, w.real))


@dataclass
class Spectrum:
    """All eigenvalues of a matrix, sorted by (Re, Im), with residuals."""

    eigenvalues: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    basis_size: int

    def __post_init__(self):
        if not (
            len(self.eigenvalues) == len(self.residuals) == len(self.converged)
        ):
            raise ValueError("spectrum fields must have equal length")

    @property
    def max_abs_imag(self) -> float:
        return float(np.max(np.abs(self.eigenvalues.imag))) if len(self.eigenvalues) else 0.0


def _matrix_of(m) -> tuple[np.ndarray, str]:
    if isinstance(m, OperatorMatrix):
        return np.asarray(m.entries, dtype=complex), m.hermitian_flag
    return np.asarray(m, dtype=complex), "unknown"


def _inverse_iteration_residuals(a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Residuals ||A v - lambda v|| / ||v|| from two inverse-iteration steps.

    The start vector is a fixed ramp, so residuals are deterministic.
    """
    from scipy.linalg import lu_factor, lu_solve

    n = a.shape[0]
    out = np.empty(len(w))
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    b0 = np.ones(n, dtype=complex) + 1e-3 * np.arange(n)
    eye = np.eye(n)
    for i, lam in enumerate(w):
        shift = lam + 1e-12 * scale * (1.0 + abs(lam) / scale)
        try:
            lu = lu_factor(a - shift * eye, check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            lu = lu_factor(a - (shift + 1e-8 * scale) * eye, check_finite=False)
        v = b0
        for _ in range(2):
            v = lu_solve(lu, v, check_finite=False)
            nv = np.linalg.norm(v)
            if nv == 0.0 or not np.isfinite(nv):
                v = None
                break
            v = v / nv
        if v is None:
            out[i] = np.inf
            continue
        out[i] = np.linalg.norm(a @ v - lam * v)
    return out


def eigenvalues(
    m,
    compute_residuals: bool = True,
    maxiter_factor: int = MAXITER_FACTOR,
) -> Spectrum:
    """Full spectrum of a dense complex matrix.

    Deterministic given the matrix (and backend).  Raises
    :class:`EigensolverConvergenceError` naming the stuck block if the
    QR iteration exceeds ``maxiter_factor * dimension`` sweeps.
    """
    a, flag = _matrix_of(m)
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    n = a.shape[0]
    h = hessenberg(a)
    try:
        w = qr_hessenberg_eigvals(h, maxiter_factor * max(n, 1), EXCEPTIONAL_EVERY)
    except QRConvergenceError as exc:
        raise EigensolverConvergenceError(exc.block, maxiter_factor * max(n, 1)) from exc
    order = _sort_key(w)
    w = w[order]
    if flag == HERMITIAN and len(w):
        # Imaginary parts of a flagged-hermitian solve are pure QR
        # roundoff; guard that before discarding them.
        drift = float(np.max(np.abs(w.imag)))
        bound = 1e-9 * (1.0 + float(np.max(np.abs(w))))
        if drift > bound:
            raise EigensolverConvergenceError((0, n - 1), maxiter_factor * n)
        w = w.real.astype(complex)
    if compute_residuals and n:
        res = _inverse_iteration_residuals(a, w)
    else:
        res = np.zeros(len(w))
    conv = res <= RESIDUAL_TOL * (1.0 + np.abs(w))
    if not compute_residuals:
        conv = np.ones(len(w), dtype=bool)
    return Spectrum(w, res, conv, basis_size=n)


@dataclass
class ConvergenceStudy:
    """Eigenvalues tracked across increasing basis sizes.

    ``spectra`` holds one Spectrum per size; flags refer to the largest
    size: an eigenvalue is converged when its nearest match at the
    previous size moved by less than ``rel_tol * (1 + |lambda|)``, and
    ambiguous when two previous-size candidates sit inside that
    tolerance (flagged, not guessed).
    """

    sizes: list
    spectra: list
    matched_shift: np.ndarray
    converged: np.ndarray
    ambiguous: np.ndarray
    rel_tol: float
    table: list = field(default_factory=list)

    @property
    def final(self) -> Spectrum:
        return self.spectra[-1]


def convergence_study(
    matrix_factory,
    sizes,
    rel_tol: float = 1e-4,
    compute_residuals: bool = False,
) -> ConvergenceStudy:
    """Track eigenvalues of ``matrix_factory(size)`` across basis sizes."""
    sizes = list(sizes)
    if len(sizes) < 2:
        raise ValueError("convergence study needs at least 2 basis sizes")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("basis sizes must be strictly increasing")
    spectra = [
        eigenvalues(matrix_factory(s), compute_residuals=compute_residuals)
        for s in sizes
    ]
    prev = spectra[-2].eigenvalues
    last = spectra[-1].eigenvalues
    shift = np.empty(len(last))
    conv = np.zeros(len(last), dtype=bool)
    amb = np.zeros(len(last), dtype=bool)
    for i, lam in enumerate(last):
        d = np.abs(prev - lam)
        tol = rel_tol * (1.0 + abs(lam))
        near = np.sort(d)
        shift[i] = near[0] if len(near) else np.inf
        inside = int(np.sum(d <= tol))
        if inside >= 2:
            amb[i] = True
        elif inside == 1:
            conv[i] = True
    table = []
    for i, lam in enumerate(last):
        table.append(
            {
                "eigenvalue": complex(lam),
                "shift": float(shift[i]),
                "converged": bool(conv[i]),
                "ambiguous": bool(amb[i]),
            }
        )
    return ConvergenceStudy(sizes, spectra, shift, conv, amb, rel_tol, table)


def backend_name() -> str:
    """Name of the active QR kernel backend ("cython" or "python")."""
    return BACKEND_NAME
