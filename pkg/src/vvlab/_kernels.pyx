# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: O(M^2) functionals and the stencil right-hand side.

Sums use Neumaier compensation so the double sums agree with an exactly
rounded reference to a few ulps.
"""
import numpy as np

from libc.math cimport exp, fabs


cdef inline void _add(double* total, double* comp, double term) noexcept nogil:
    cdef double t = total[0] + term
    if fabs(total[0]) >= fabs(term):
        comp[0] += (total[0] - t) + term
    else:
        comp[0] += (term - t) + total[0]
    total[0] = t


def q_sum(const double[::1] x, const double[::1] az, const double[::1] azs, double c, double c1):
    """Sum over j, k of K(x_j - x_k) |z_j| |z#_k| (inputs already absolute)."""
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t j, k
    cdef double total = 0.0, comp = 0.0
    cdef double inv_c = 1.0 / c
    cdef double rate = c / (2.0 * c1)
    cdef double s, w
    with nogil:
        for j in range(m):
            if az[j] == 0.0:
                continue
            for k in range(m):
                if azs[k] == 0.0:
                    continue
                s = x[j] - x[k]
                if s >= 0.0:
                    w = inv_c
                else:
                    w = inv_c * exp(rate * s)
                _add(&total, &comp, w * az[j] * azs[k])
    return total + comp


def area_sum(const double[::1] z1, const double[::1] z2):
    """Sum over j < k of |z1_j z2_k - z1_k z2_j|."""
    cdef Py_ssize_t m = z1.shape[0]
    cdef Py_ssize_t j, k
    cdef double total = 0.0, comp = 0.0
    with nogil:
        for j in range(m):
            for k in range(j + 1, m):
                _add(&total, &comp, fabs(z1[j] * z2[k] - z1[k] * z2[j]))
    return total + comp


def stencil_rhs(const double[:, ::1] ue, const double[:, :, ::1] a, const double[:, :, ::1] bmid,
                const double[:, ::1] fe, double h, double eps, bint conservative):
    """-A(u_j) D0 u_j (or -D0 f) + eps * diffusion flux difference.

    ``ue`` and ``fe`` carry two ghost cells per side; ``a`` holds A at the M
    cells and ``bmid`` holds B at the M+1 faces.
    """
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = ue.shape[1]
    out_arr = np.empty((m, n))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t j, p, q
    cdef double inv2h = 0.5 / h
    cdef double scale = eps / (h * h)
    cdef double adv, right, left
    with nogil:
        for j in range(m):
            for p in range(n):
                adv = 0.0
                if conservative:
                    adv = (fe[j + 3, p] - fe[j + 1, p]) * inv2h
                else:
                    for q in range(n):
                        adv = adv + a[j, p, q] * (ue[j + 3, q] - ue[j + 1, q]) * inv2h
                right = 0.0
                left = 0.0
                for q in range(n):
                    right = right + bmid[j + 1, p, q] * (ue[j + 3, q] - ue[j + 2, q])
                    left = left + bmid[j, p, q] * (ue[j + 2, q] - ue[j + 1, q])
                out[j, p] = -adv + scale * (right - left)
    return out_arr
