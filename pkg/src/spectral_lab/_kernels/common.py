"""Pieces shared by the compiled and pure-Python QR kernels."""

from __future__ import annotations

import numpy as np


def hessenberg(a: np.ndarray) -> np.ndarray:
    """Unitary reduction to upper Hessenberg form (Householder).

    Returns a fresh C-contiguous complex128 matrix; the input is not
    modified.  Only the Hessenberg part is meaningful on return, the
    eliminated entries are set to exact zeros.
    """
    h = np.array(a, dtype=np.complex128, order="C", copy=True)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1 :, k]
        tail = np.linalg.norm(x[1:])
        if tail == 0.0:
            continue
        nx = np.linalg.norm(x)
        x0 = x[0]
        phase = x0 / abs(x0) if x0 != 0.0 else 1.0
        alpha = -phase * nx
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        # H <- (I - 2 v v*) H (I - 2 v v*) restricted to the active panel.
        h[k + 1 :, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1 :, k:])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v.conj())
        h[k + 1, k] = alpha
        h[k + 2 :, k] = 0.0
    return h


def eig2x2(a, b, c, d):
    """Eigenvalues of [[a, b], [c, d]], cancellation-safe."""
    tr = a + d
    det = a * d - b * c
    disc = np.lib.scimath.sqrt((a - d) * (a - d) + 4.0 * b * c)
    if abs(tr + disc) >= abs(tr - disc):
        l1 = 0.5 * (tr + disc)
    else:
        l1 = 0.5 * (tr - disc)
    l2 = det / l1 if l1 != 0.0 else 0.5 * (tr - disc)
    return l1, l2


def wilkinson_shift(a, b, c, d):
    """Trailing-2x2 eigenvalue closest to the corner entry d."""
    l1, l2 = eig2x2(a, b, c, d)
    return l1 if abs(l1 - d) <= abs(l2 - d) else l2
