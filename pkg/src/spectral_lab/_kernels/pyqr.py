"""Pure-Python (numpy) implicitly shifted QR kernel.

Twin of the compiled kernel in ``_qr_cy``; same algorithm, same shift
and deflation rules, so either backend can serve the eigensolver.  Row
and column updates use numpy slices, which keeps the bulge chase at
O(n) python overhead per rotation.
"""

from __future__ import annotations

import numpy as np

from .common import eig2x2, wilkinson_shift

_EPS = float(np.finfo(np.float64).eps)


class QRConvergenceError(RuntimeError):
    """QR iteration failed to deflate within the iteration budget."""

    def __init__(self, lo: int, hi: int, iterations: int):
        super().__init__(
            f"QR iteration failed to deflate block {lo}:{hi + 1} "
            f"after {iterations} iterations"
        )
        self.block = (lo, hi)


def _givens(a: complex, b: complex):
    """c (real), s with [[c, s], [-conj(s), c]] @ (a, b) = (r, 0)."""
    if b == 0.0:
        return 1.0, 0.0 + 0.0j
    aa = abs(a)
    if aa == 0.0:
        return 0.0, np.conj(b) / abs(b)
    t = np.hypot(aa, abs(b))
    c = aa / t
    s = (a / aa) * np.conj(b) / t
    return c, s


def qr_hessenberg_eigvals(
    h: np.ndarray, maxiter: int, exceptional_every: int = 30
) -> np.ndarray:
    """Eigenvalues of an upper Hessenberg complex matrix, in place.

    Single (Wilkinson) shift bulge chasing with bottom-up deflation; a
    deterministic exceptional shift fires every ``exceptional_every``
    stalled iterations.
    """
    n = h.shape[0]
    w = np.empty(n, dtype=np.complex128)
    if n == 0:
        return w
    if n == 1:
        w[0] = h[0, 0]
        return w
    hi = n - 1
    total = 0
    stall = 0
    while hi >= 0:
        if hi == 0:
            w[0] = h[0, 0]
            break
        # Scan for a negligible subdiagonal inside the trailing block.
        l = hi
        while l > 0:
            tol = _EPS * (abs(h[l - 1, l - 1]) + abs(h[l, l]))
            if tol == 0.0:
                tol = _EPS
            if abs(h[l, l - 1]) <= tol:
                h[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            w[hi] = h[hi, hi]
            hi -= 1
            stall = 0
            continue
        if l == hi - 1:
            w[hi - 1], w[hi] = eig2x2(
                h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi]
            )
            hi -= 2
            stall = 0
            continue
        total += 1
        stall += 1
        if total > maxiter:
            raise QRConvergenceError(l, hi, total - 1)
        if stall % exceptional_every == 0:
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            mu = wilkinson_shift(
                h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi]
            )
        # Implicit single-shift sweep on the active block [l, hi].
        x = h[l, l] - mu
        y = h[l + 1, l]
        for i in range(l, hi):
            c, s = _givens(x, y)
            sc = np.conj(s)
            a_col = max(l, i - 1)
            r0 = h[i, a_col : hi + 1].copy()
            r1 = h[i + 1, a_col : hi + 1]
            h[i, a_col : hi + 1] = c * r0 + s * r1
            h[i + 1, a_col : hi + 1] = -sc * r0 + c * r1
            b_row = min(hi, i + 2)
            c0 = h[l : b_row + 1, i].copy()
            c1 = h[l : b_row + 1, i + 1]
            h[l : b_row + 1, i] = c * c0 + sc * c1
            h[l : b_row + 1, i + 1] = -s * c0 + c * c1
            if i < hi - 1:
                x = h[i + 1, i]
                y = h[i + 2, i]
    return w
