# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implicitly shifted QR kernel (twin of ``pyqr``)."""

import numpy as np

cimport cython
from libc.math cimport hypot, sqrt

ctypedef double complex dcomplex

cdef double EPS = 2.220446049250313e-16


class QRConvergenceError(RuntimeError):
    """QR iteration failed to deflate within the iteration budget."""

    def __init__(self, lo, hi, iterations):
        super().__init__(
            "QR iteration failed to deflate block %d:%d after %d iterations"
            % (lo, hi + 1, iterations)
        )
        self.block = (lo, hi)


cdef inline double cabs2(dcomplex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double cmod(dcomplex z) nogil:
    return hypot(z.real, z.imag)


cdef inline dcomplex csqrt_c(dcomplex z) nogil:
    cdef double m = cmod(z)
    cdef double re = sqrt(0.5 * (m + z.real))
    cdef double im
    if m + z.real <= 0.0:
        re = 0.0
    im = sqrt(0.5 * (m - z.real)) if m - z.real > 0.0 else 0.0
    if z.imag < 0.0:
        im = -im
    return re + 1j * im


cdef inline void eig2x2_c(dcomplex a, dcomplex b, dcomplex c, dcomplex d,
                          dcomplex *l1, dcomplex *l2) nogil:
    cdef dcomplex tr = a + d
    cdef dcomplex det = a * d - b * c
    cdef dcomplex disc = csqrt_c((a - d) * (a - d) + 4.0 * b * c)
    cdef dcomplex s1 = 0.5 * (tr + disc)
    cdef dcomplex s2 = 0.5 * (tr - disc)
    if cmod(tr + disc) >= cmod(tr - disc):
        l1[0] = s1
    else:
        l1[0] = s2
    if l1[0] != 0.0:
        l2[0] = det / l1[0]
    else:
        l2[0] = s2


def qr_hessenberg_eigvals(dcomplex[:, ::1] h, long maxiter,
                          long exceptional_every=30):
    """Eigenvalues of an upper Hessenberg complex matrix, in place."""
    cdef long n = h.shape[0]
    w_arr = np.empty(n, dtype=np.complex128)
    cdef dcomplex[::1] w = w_arr
    if n == 0:
        return w_arr
    if n == 1:
        w[0] = h[0, 0]
        return w_arr
    cdef long hi = n - 1
    cdef long total = 0, stall = 0
    cdef long l, i, j, a_col, b_row
    cdef double tol, aa, t, c
    cdef dcomplex mu, x, y, s, sc, r0, r1, l1, l2
    while hi >= 0:
        if hi == 0:
            w[0] = h[0, 0]
            break
        l = hi
        while l > 0:
            tol = EPS * (cmod(h[l - 1, l - 1]) + cmod(h[l, l]))
            if tol == 0.0:
                tol = EPS
            if cmod(h[l, l - 1]) <= tol:
                h[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            w[hi] = h[hi, hi]
            hi -= 1
            stall = 0
            continue
        if l == hi - 1:
            eig2x2_c(h[hi - 1, hi - 1], h[hi - 1, hi],
                     h[hi, hi - 1], h[hi, hi], &l1, &l2)
            w[hi - 1] = l1
            w[hi] = l2
            hi -= 2
            stall = 0
            continue
        total += 1
        stall += 1
        if total > maxiter:
            raise QRConvergenceError(l, hi, total - 1)
        if stall % exceptional_every == 0:
            mu = h[hi, hi] + 0.75 * cmod(h[hi, hi - 1])
        else:
            eig2x2_c(h[hi - 1, hi - 1], h[hi - 1, hi],
                     h[hi, hi - 1], h[hi, hi], &l1, &l2)
            if cmod(l1 - h[hi, hi]) <= cmod(l2 - h[hi, hi]):
                mu = l1
            else:
                mu = l2
        x = h[l, l] - mu
        y = h[l + 1, l]
        for i in range(l, hi):
            # Givens (c real, s) with [[c, s], [-conj(s), c]] @ (x, y) = (r, 0).
            if y == 0.0:
                c = 1.0
                s = 0.0
            else:
                aa = cmod(x)
                if aa == 0.0:
                    c = 0.0
                    s = (y.real - 1j * y.imag) / cmod(y)
                else:
                    t = hypot(aa, cmod(y))
                    c = aa / t
                    s = (x / aa) * (y.real - 1j * y.imag) / t
            sc = s.real - 1j * s.imag
            a_col = i - 1
            if a_col < l:
                a_col = l
            for j in range(a_col, hi + 1):
                r0 = h[i, j]
                r1 = h[i + 1, j]
                h[i, j] = c * r0 + s * r1
                h[i + 1, j] = -sc * r0 + c * r1
            b_row = i + 2
            if b_row > hi:
                b_row = hi
            for j in range(l, b_row + 1):
                r0 = h[j, i]
                r1 = h[j, i + 1]
                h[j, i] = c * r0 + sc * r1
                h[j, i + 1] = -s * r0 + c * r1
            if i < hi - 1:
                x = h[i + 1, i]
                y = h[i + 2, i]
    return w_arr
