# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_fallback.py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log1p, fabs

cnp.import_array()


# The matrix-vector products go through numpy (BLAS): it is faster than a
# naive loop at these sizes and gives the same rounding as the fallback.

def halfspace_pass(A, const double[::1] b, const double[::1] inv_norm2, const double[::1] tol, x):
    cdef const double[::1] v = np.dot(A, x)
    cdef Py_ssize_t m = v.shape[0], i
    cdef double vi, c
    sq = np.zeros(m)
    coef = np.zeros(m)
    cdef double[::1] sq_v = sq, coef_v = coef
    with nogil:
        for i in range(m):
            vi = v[i] - b[i]
            if vi > tol[i]:
                c = vi * inv_norm2[i]
                coef_v[i] = c
                sq_v[i] = vi * c
    return sq, coef


def union2_pass(A, const double[::1] b, const double[::1] inv_a, const double[::1] tol_a,
                P, const double[::1] q, const double[::1] inv_p, const double[::1] tol_p, x):
    cdef const double[::1] va = np.dot(A, x)
    cdef const double[::1] vp = np.dot(P, x)
    cdef Py_ssize_t m = va.shape[0], i
    cdef double v1, v2, c1, c2, d1, d2
    sq = np.zeros(m)
    coef = np.zeros(m)
    choice = np.zeros(m, dtype=np.int8)
    cdef double[::1] sq_v = sq, coef_v = coef
    cdef cnp.int8_t[::1] ch_v = choice
    with nogil:
        for i in range(m):
            v1 = va[i] - b[i]
            if v1 <= tol_a[i]:
                continue
            v2 = vp[i] - q[i]
            if v2 <= tol_p[i]:
                ch_v[i] = 1
                continue
            c1 = v1 * inv_a[i]
            c2 = v2 * inv_p[i]
            d1 = v1 * c1
            d2 = v2 * c2
            if d2 < d1:
                ch_v[i] = 1
                coef_v[i] = c2
                sq_v[i] = d2
            else:
                coef_v[i] = c1
                sq_v[i] = d1
    return sq, coef, choice


def accumulate_rows(A, w):
    return np.dot(w, A)


def accumulate_rows_choice(const double[:, ::1] A, const double[:, ::1] P,
                           const cnp.int8_t[::1] choice, const double[::1] w):
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1], i, j
    cdef double wi
    out = np.zeros(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            wi = w[i]
            if wi == 0.0:
                continue
            if choice[i]:
                for j in range(n):
                    o[j] += wi * P[i, j]
            else:
                for j in range(n):
                    o[j] += wi * A[i, j]
    return out


def sparse_box_project(const double[::1] x, double r, Py_ssize_t s):
    # keep[0..cnt) holds indices ordered by decreasing |x|, earlier index first on ties
    cdef Py_ssize_t n = x.shape[0], i, k, cnt = 0
    cdef double ai, xi
    keep_arr = np.empty(s, dtype=np.intp)
    mag_arr = np.empty(s)
    cdef Py_ssize_t[::1] keep = keep_arr
    cdef double[::1] mag = mag_arr
    out = np.zeros(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            ai = fabs(x[i])
            if cnt == s:
                if not ai > mag[s - 1]:
                    continue
                k = s - 1
            else:
                k = cnt
                cnt += 1
            while k > 0 and ai > mag[k - 1]:
                mag[k] = mag[k - 1]
                keep[k] = keep[k - 1]
                k -= 1
            mag[k] = ai
            keep[k] = i
        for k in range(cnt):
            xi = x[keep[k]]
            if xi > r:
                xi = r
            elif xi < -r:
                xi = -r
            o[keep[k]] = xi
    return out


def log_penalty_sum(const double[::1] sq, double eps):
    cdef Py_ssize_t i
    cdef double acc = 0.0, inv = 1.0 / eps
    with nogil:
        for i in range(sq.shape[0]):
            if sq[i] != 0.0:
                acc += log1p(sq[i] * inv)
    return acc


def frac_penalty_sum(const double[::1] sq, double eps):
    cdef Py_ssize_t i
    cdef double acc = 0.0, s
    with nogil:
        for i in range(sq.shape[0]):
            s = sq[i]
            if s != 0.0:
                acc += s / (s + eps) + eps * s
    return acc
