# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; same contract as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, tanh, fabs, isfinite

cnp.import_array()


cdef inline void _scalar_grad(int code, double x, double y, double* gx, double* gy) noexcept nogil:
    cdef double sx, sy
    if code == 0:
        sy = sin(y)
        sx = sin(x)
        gx[0] = 2.0 * x + 3.0 * sy * sy * sin(2.0 * x)
        gy[0] = -8.0 * y + 3.0 * sx * sx * sin(2.0 * y) - 10.0 * sin(2.0 * y)
    else:
        gx[0] = 0.5 * (1.0 + tanh(0.5 * x)) + 3.0 * y
        gy[0] = 3.0 * x - 0.5 * (1.0 + tanh(0.5 * y))


cdef inline bint _ok(double v, double limit) noexcept nogil:
    return fabs(v) <= limit


def scalar_gda(int code, double x0, double y0, const double[::1] tau1, const double[::1] tau2,
               const double[::1] nx, const double[::1] ny, bint alternating, double limit):
    if code != 0 and code != 1:
        raise ValueError(f"unknown scalar problem code {code}")
    cdef Py_ssize_t T = tau1.shape[0], t
    xs_arr = np.full(T + 1, np.nan)
    ys_arr = np.full(T + 1, np.nan)
    cdef double[::1] xs = xs_arr
    cdef double[::1] ys = ys_arr
    cdef double x = x0, y = y0, xn, gx, gy, dummy
    cdef Py_ssize_t done = T
    xs[0] = x
    ys[0] = y
    with nogil:
        for t in range(T):
            _scalar_grad(code, x, y, &gx, &gy)
            xn = x - tau1[t] * (gx + nx[t])
            if alternating:
                _scalar_grad(code, xn, y, &dummy, &gy)
            y = y + tau2[t] * (gy + ny[t])
            x = xn
            if not (_ok(x, limit) and _ok(y, limit)):
                done = t
                break
            xs[t + 1] = x
            ys[t + 1] = y
    return xs_arr, ys_arr, done


cdef inline double _dot(const double[:, ::1] M, Py_ssize_t i, double[::1] v) noexcept nogil:
    cdef Py_ssize_t k
    cdef double acc = 0.0
    for k in range(v.shape[0]):
        acc += M[i, k] * v[k]
    return acc


cdef inline double _dotc(const double[:, ::1] M, Py_ssize_t i, const double[::1] v) noexcept nogil:
    cdef Py_ssize_t k
    cdef double acc = 0.0
    for k in range(v.shape[0]):
        acc += M[i, k] * v[k]
    return acc


def rls_stoc_agda(const double[:, ::1] B, const double[:, ::1] C, const double[::1] y0, double lam,
                  double[::1] x, double[::1] y, const double[::1] tau1, const double[::1] tau2,
                  const cnp.int64_t[::1] i1, const cnp.int64_t[::1] i2, double limit):
    cdef Py_ssize_t n = B.shape[0], m = x.shape[0], p = y.shape[0]
    cdef Py_ssize_t T = i1.shape[0], t, k, i, j
    cdef double r, r2, s2, cx, cy, v
    cdef double[::1] xn = np.empty(m)
    cdef double[::1] yn = np.empty(p)
    cdef bint ok
    cdef Py_ssize_t done = T
    with nogil:
        for t in range(T):
            i = i1[t]
            j = i2[t]
            r = _dot(B, i, x) - _dot(C, i, y)
            cx = tau1[t] * 2.0 * n * r
            ok = True
            for k in range(m):
                v = x[k] - cx * B[i, k]
                xn[k] = v
                if not _ok(v, limit):
                    ok = False
            r2 = _dot(B, j, xn) - _dot(C, j, y)
            s2 = _dot(C, j, y) - _dotc(C, j, y0)
            cy = tau2[t] * (-2.0 * n * (r2 + lam * s2))
            for k in range(p):
                v = y[k] + cy * C[j, k]
                yn[k] = v
                if not _ok(v, limit):
                    ok = False
            if not ok:
                done = t
                break
            x[:] = xn
            y[:] = yn
    return done


def rls_vr_inner(const double[:, ::1] B, const double[:, ::1] C, const double[::1] y0, double lam,
                 double[::1] x, double[::1] y, const double[::1] rsnap, const double[::1] ssnap,
                 const double[::1] gx_full, const double[::1] gy_full, double tau1, double tau2,
                 const cnp.int64_t[::1] i1, const cnp.int64_t[::1] i2, Py_ssize_t sel,
                 double[::1] out_x, double[::1] out_y, double limit):
    cdef Py_ssize_t n = B.shape[0], m = x.shape[0], p = y.shape[0]
    cdef Py_ssize_t T = i1.shape[0], t, k, i, j
    cdef double r, r2, s2, cx, cy, v
    cdef double[::1] xn = np.empty(m)
    cdef double[::1] yn = np.empty(p)
    cdef bint ok
    cdef Py_ssize_t done = T
    with nogil:
        for t in range(T):
            if t == sel:
                out_x[:] = x
                out_y[:] = y
            i = i1[t]
            j = i2[t]
            r = _dot(B, i, x) - _dot(C, i, y)
            cx = 2.0 * n * (r - rsnap[i])
            ok = True
            for k in range(m):
                v = x[k] - tau1 * (cx * B[i, k] + gx_full[k])
                xn[k] = v
                if not _ok(v, limit):
                    ok = False
            r2 = _dot(B, j, xn) - _dot(C, j, y)
            s2 = _dot(C, j, y) - _dotc(C, j, y0)
            cy = -2.0 * n * ((r2 - rsnap[j]) + lam * (s2 - ssnap[j]))
            for k in range(p):
                v = y[k] + tau2 * (cy * C[j, k] + gy_full[k])
                yn[k] = v
                if not _ok(v, limit):
                    ok = False
            if not ok:
                done = t
                break
            x[:] = xn
            y[:] = yn
    return done
