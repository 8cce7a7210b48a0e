# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled mixed-precision reduction kernels.

Same contracts as ofrr._kernels_py: products in the compute format,
index-ascending sequential accumulation in the accumulate format.  All data
travels as float64 holding format-representable values; rounding helpers cast
through float/binary16.  Two-operand products and sums of narrow-format
values computed in double and then rounded are exact single roundings, so the
results are bit-identical to native narrow arithmetic.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

cdef extern from "halfround.h":
    double ofrr_round_f16(double x) nogil
    double ofrr_round_f32(double x) nogil

BACKEND_NAME = "compiled"


cdef inline double _rnd(double x, int code) nogil:
    if code == 2:
        return x
    if code == 1:
        return ofrr_round_f32(x)
    return ofrr_round_f16(x)


cdef double _dot(const double* x, Py_ssize_t incx,
                 const double* y, Py_ssize_t incy,
                 Py_ssize_t n, int compute, int accumulate) nogil:
    cdef double acc = 0.0
    cdef double p
    cdef Py_ssize_t i
    if compute == 2 and accumulate == 2:
        for i in range(n):
            acc = acc + x[i * incx] * y[i * incy]
        return acc
    for i in range(n):
        p = _rnd(x[i * incx] * y[i * incy], compute)
        acc = _rnd(acc + p, accumulate)
    return acc


def dot_mixed(const double[:] x, const double[:] y, int compute, int accumulate):
    cdef Py_ssize_t n = x.shape[0]
    if n == 0:
        return 0.0
    cdef double r
    with nogil:
        r = _dot(&x[0], 1, &y[0], 1, n, compute, accumulate)
    return r


def gemm_mixed(const double[:, :] a, const double[:, :] b,
               int compute, int accumulate, int out_fmt):
    cdef Py_ssize_t m = a.shape[0], k = a.shape[1], n = b.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, n), dtype=np.float64, order="F")
    cdef double[::1, :] o = out
    cdef Py_ssize_t ars = a.strides[0] // 8, acs = a.strides[1] // 8
    cdef Py_ssize_t brs = b.strides[0] // 8, bcs = b.strides[1] // 8
    cdef Py_ssize_t i, j
    cdef const double* ap
    cdef const double* bp
    if m == 0 or n == 0:
        return out
    if k == 0:
        out[:, :] = 0.0
        return out
    ap = &a[0, 0]
    bp = &b[0, 0]
    with nogil:
        for j in range(n):
            for i in range(m):
                o[i, j] = _rnd(
                    _dot(ap + i * ars, acs, bp + j * bcs, brs, k,
                         compute, accumulate),
                    out_fmt)
    return out


def spmv_mixed(const long long[:] row_ptr, const long long[:] col_idx,
               const double[:] values, const double[:] x,
               int compute, int accumulate):
    cdef Py_ssize_t n = row_ptr.shape[0] - 1
    cdef cnp.ndarray[double, ndim=1] y = np.empty(n, dtype=np.float64)
    cdef double[::1] yv = y
    cdef Py_ssize_t i, t
    cdef double acc, p
    with nogil:
        for i in range(n):
            acc = 0.0
            for t in range(row_ptr[i], row_ptr[i + 1]):
                p = _rnd(values[t] * x[col_idx[t]], compute)
                acc = _rnd(acc + p, accumulate)
            yv[i] = acc
    return y


def jacobi_eig(object a_in, int max_sweeps, double tol):
    """Cyclic Jacobi eigendecomposition; mirrors the pure-python version."""
    cdef cnp.ndarray[double, ndim=2] a = np.array(a_in, dtype=np.float64, order="C")
    cdef Py_ssize_t n = a.shape[0]
    cdef cnp.ndarray[double, ndim=2] v = np.eye(n)
    cdef double[:, ::1] am = a
    cdef double[:, ::1] vm = v
    cdef double off = _off_norm(am)
    cdef int sweeps = 0
    cdef Py_ssize_t p, q, i
    cdef double skip, apq, app, aqq, theta, t, c, s, tp, tq
    while off > tol and sweeps < max_sweeps:
        skip = off / (<double>(n * n))
        with nogil:
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = am[p, q]
                    if fabs(apq) <= skip:
                        continue
                    app = am[p, p]
                    aqq = am[q, q]
                    theta = (aqq - app) / (2.0 * apq)
                    t = (1.0 if theta >= 0.0 else -1.0) / (
                        fabs(theta) + sqrt(theta * theta + 1.0))
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for i in range(n):
                        tp = am[p, i]
                        tq = am[q, i]
                        am[p, i] = c * tp - s * tq
                        am[q, i] = s * tp + c * tq
                    for i in range(n):
                        tp = am[i, p]
                        tq = am[i, q]
                        am[i, p] = c * tp - s * tq
                        am[i, q] = s * tp + c * tq
                    am[p, q] = 0.0
                    am[q, p] = 0.0
                    for i in range(n):
                        tp = vm[i, p]
                        tq = vm[i, q]
                        vm[i, p] = c * tp - s * tq
                        vm[i, q] = s * tp + c * tq
        off = _off_norm(am)
        sweeps += 1
    return np.diag(a).copy(), v, sweeps, off


cdef double _off_norm(double[:, ::1] a) nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef double ss = 0.0
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n):
            if i != j:
                ss += a[i, j] * a[i, j]
    return sqrt(ss)
