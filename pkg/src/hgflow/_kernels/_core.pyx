# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled training kernels: BLAS-backed affine layers, fused SiLU, Adam.

Mirrors the call surface of ``numpy_backend``; selected at import by
``hgflow._kernels``. All arrays must be C-contiguous float64.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt, pow
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

NAME = "c"


cdef void _gemm_nn(double[:, ::1] a, double[:, ::1] b, double[:, ::1] c) nogil:
    # c (m,n) = a (m,k) @ b (k,n), all C-order; BLAS sees the transposes.
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[1]
    cdef double alpha = 1.0, beta = 0.0
    dgemm("N", "N", &n, &m, &k, &alpha, &b[0, 0], &n, &a[0, 0], &k,
          &beta, &c[0, 0], &n)


cdef void _gemm_nt(double[:, ::1] a, double[:, ::1] b, double[:, ::1] c) nogil:
    # c (m,n) = a (m,k) @ b.T, with b (n,k) C-order.
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[0]
    cdef double alpha = 1.0, beta = 0.0
    dgemm("T", "N", &n, &m, &k, &alpha, &b[0, 0], &k, &a[0, 0], &k,
          &beta, &c[0, 0], &n)


cdef void _gemm_tn(double[:, ::1] a, double[:, ::1] b, double[:, ::1] c) nogil:
    # c (m,n) = a.T @ b, with a (k,m) and b (k,n) C-order.
    cdef int k = a.shape[0], m = a.shape[1], n = b.shape[1]
    cdef double alpha = 1.0, beta = 0.0
    dgemm("N", "T", &n, &m, &k, &alpha, &b[0, 0], &n, &a[0, 0], &m,
          &beta, &c[0, 0], &n)


def affine_forward(double[:, ::1] x, double[:, ::1] w, double[::1] b):
    """y = x @ w + b for a batch x of shape (B, m)."""
    cdef Py_ssize_t rows = x.shape[0], n = w.shape[1]
    y_arr = np.empty((rows, n), dtype=np.float64)
    cdef double[:, ::1] y = y_arr
    cdef Py_ssize_t i, j
    with nogil:
        _gemm_nn(x, w, y)
        for i in range(rows):
            for j in range(n):
                y[i, j] += b[j]
    return y_arr


def affine_backward(double[:, ::1] x, double[:, ::1] w, double[:, ::1] gy,
                    bint need_gx):
    """Gradients of the affine map; gx is None when need_gx is false."""
    cdef Py_ssize_t rows = x.shape[0], m = x.shape[1], n = w.shape[1]
    gw_arr = np.empty((m, n), dtype=np.float64)
    gb_arr = np.zeros(n, dtype=np.float64)
    cdef double[:, ::1] gw = gw_arr
    cdef double[::1] gb = gb_arr
    cdef double[:, ::1] gx
    cdef Py_ssize_t i, j
    gx_arr = None
    if need_gx:
        gx_arr = np.empty((rows, m), dtype=np.float64)
        gx = gx_arr
        with nogil:
            _gemm_nt(gy, w, gx)
    with nogil:
        _gemm_tn(x, gy, gw)
        for i in range(rows):
            for j in range(n):
                gb[j] += gy[i, j]
    return gx_arr, gw_arr, gb_arr


def silu_forward(z_in):
    """Returns (silu(z), sigmoid(z)); the sigmoid is kept for backward."""
    cdef double[::1] z = np.ravel(z_in)
    cdef Py_ssize_t size = z.shape[0], i
    y_arr = np.empty(size, dtype=np.float64)
    s_arr = np.empty(size, dtype=np.float64)
    cdef double[::1] y = y_arr, s = s_arr
    cdef double e, num
    with nogil:
        # branch-free stable sigmoid (select instead of branch so the
        # exp call vectorizes): e = exp(-|z|), s = (z<0 ? e : 1)/(1+e)
        for i in range(size):
            e = exp(-fabs(z[i]))
            num = e if z[i] < 0.0 else 1.0
            s[i] = num / (1.0 + e)
            y[i] = z[i] * s[i]
    shape = np.shape(z_in)
    return y_arr.reshape(shape), s_arr.reshape(shape)


def silu_backward(z_in, s_in, gy_in):
    cdef double[::1] z = np.ravel(z_in)
    cdef double[::1] s = np.ravel(s_in)
    cdef double[::1] gy = np.ravel(gy_in)
    cdef Py_ssize_t size = z.shape[0], i
    gz_arr = np.empty(size, dtype=np.float64)
    cdef double[::1] gz = gz_arr
    with nogil:
        for i in range(size):
            gz[i] = gy[i] * (s[i] * (1.0 + z[i] * (1.0 - s[i])))
    return gz_arr.reshape(np.shape(z_in))


def adam_update(double[::1] values, double[::1] grad, double[::1] m,
                double[::1] v, long step, double lr, double beta1,
                double beta2, double eps):
    """Bias-corrected Adam update, in place on flat float64 arrays."""
    cdef Py_ssize_t size = values.shape[0], i
    cdef double c1 = 1.0 - pow(beta1, step)
    cdef double c2 = 1.0 - pow(beta2, step)
    cdef double g, mh, vh
    with nogil:
        for i in range(size):
            g = grad[i]
            m[i] = beta1 * m[i] + (1.0 - beta1) * g
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
            mh = m[i] / c1
            vh = v[i] / c2
            values[i] -= lr * mh / (sqrt(vh) + eps)
