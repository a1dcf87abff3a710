# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel lane: fused elementwise/reduction kernels for the tensor engine.

Mirrors the function table of ``kernels_py``. Matrix multiplication stays on
numpy's BLAS in this lane too; compiling it buys nothing at these sizes.
"""

import numpy as np

from libc.math cimport exp, log, sqrt, tanh

NAME = "compiled"


def matmul(a, b):
    return a @ b


cdef inline object _c64(object x):
    return np.ascontiguousarray(x, dtype=np.float64)


def relu_fwd(x):
    xc = _c64(x)
    out = np.empty_like(xc)
    cdef double[::1] xv = xc.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        ov[i] = xv[i] if xv[i] > 0.0 else 0.0
    return out


def relu_bwd(x, gout):
    xc = _c64(x)
    gc = _c64(gout)
    out = np.empty_like(xc)
    cdef double[::1] xv = xc.reshape(-1)
    cdef double[::1] gv = gc.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        ov[i] = gv[i] if xv[i] > 0.0 else 0.0
    return out


def tanh_fwd(x):
    xc = _c64(x)
    out = np.empty_like(xc)
    cdef double[::1] xv = xc.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    for i in range(n):
        ov[i] = tanh(xv[i])
    return out


def tanh_bwd(y, gout):
    yc = _c64(y)
    gc = _c64(gout)
    out = np.empty_like(yc)
    cdef double[::1] yv = yc.reshape(-1)
    cdef double[::1] gv = gc.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, n = yv.shape[0]
    for i in range(n):
        ov[i] = gv[i] * (1.0 - yv[i] * yv[i])
    return out


def sigmoid_fwd(x):
    xc = _c64(x)
    out = np.empty_like(xc)
    cdef double[::1] xv = xc.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef double e
    for i in range(n):
        if xv[i] >= 0.0:
            ov[i] = 1.0 / (1.0 + exp(-xv[i]))
        else:
            e = exp(xv[i])
            ov[i] = e / (1.0 + e)
    return out


def sigmoid_bwd(y, gout):
    yc = _c64(y)
    gc = _c64(gout)
    out = np.empty_like(yc)
    cdef double[::1] yv = yc.reshape(-1)
    cdef double[::1] gv = gc.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, n = yv.shape[0]
    for i in range(n):
        ov[i] = gv[i] * yv[i] * (1.0 - yv[i])
    return out


def softmax_rows(x):
    xc = _c64(x)
    out = np.empty_like(xc)
    cdef double[:, ::1] xv = xc
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, m = xv.shape[0], n = xv.shape[1]
    cdef double mx, s
    for i in range(m):
        mx = xv[i, 0]
        for j in range(1, n):
            if xv[i, j] > mx:
                mx = xv[i, j]
        s = 0.0
        for j in range(n):
            ov[i, j] = exp(xv[i, j] - mx)
            s += ov[i, j]
        for j in range(n):
            ov[i, j] /= s
    return out


def softmax_rows_bwd(y, gout):
    yc = _c64(y)
    gc = _c64(gout)
    out = np.empty_like(yc)
    cdef double[:, ::1] yv = yc
    cdef double[:, ::1] gv = gc
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, m = yv.shape[0], n = yv.shape[1]
    cdef double dot
    for i in range(m):
        dot = 0.0
        for j in range(n):
            dot += gv[i, j] * yv[i, j]
        for j in range(n):
            ov[i, j] = yv[i, j] * (gv[i, j] - dot)
    return out


def log_softmax_rows(x):
    xc = _c64(x)
    out = np.empty_like(xc)
    cdef double[:, ::1] xv = xc
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, m = xv.shape[0], n = xv.shape[1]
    cdef double mx, s
    for i in range(m):
        mx = xv[i, 0]
        for j in range(1, n):
            if xv[i, j] > mx:
                mx = xv[i, j]
        s = 0.0
        for j in range(n):
            s += exp(xv[i, j] - mx)
        s = log(s)
        for j in range(n):
            ov[i, j] = xv[i, j] - mx - s
    return out


def log_softmax_rows_bwd(y, gout):
    yc = _c64(y)
    gc = _c64(gout)
    out = np.empty_like(yc)
    cdef double[:, ::1] yv = yc
    cdef double[:, ::1] gv = gc
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, m = yv.shape[0], n = yv.shape[1]
    cdef double s
    for i in range(m):
        s = 0.0
        for j in range(n):
            s += gv[i, j]
        for j in range(n):
            ov[i, j] = gv[i, j] - exp(yv[i, j]) * s
    return out


def gather_rows(table, idx):
    return table[idx]


def scatter_add_rows(acc, idx, gout):
    # acc is always an allocated C-contiguous float64 gradient buffer
    cdef double[:, ::1] av = acc
    cdef long[::1] iv = np.ascontiguousarray(idx, dtype=np.int64)
    cdef double[:, ::1] gv = _c64(gout)
    cdef Py_ssize_t i, j, m = gv.shape[0], d = gv.shape[1]
    for i in range(m):
        for j in range(d):
            av[iv[i], j] += gv[i, j]


def sumsq(x):
    xc = _c64(x)
    cdef double[::1] xv = xc.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef double s = 0.0
    for i in range(n):
        s += xv[i] * xv[i]
    return s


def adam_update(p, g, m, v, long t, double lr, double beta1, double beta2, double eps):
    # p, m, v are C-contiguous float64 (ParamStore guarantees this), so
    # reshape(-1) is a writable view
    cdef double[::1] pv = p.reshape(-1)
    cdef double[::1] gv = _c64(g).reshape(-1)
    cdef double[::1] mv = m.reshape(-1)
    cdef double[::1] vv = v.reshape(-1)
    cdef Py_ssize_t i, n = pv.shape[0]
    cdef double c1 = 1.0 - beta1**t
    cdef double c2 = 1.0 - beta2**t
    cdef double mhat, vhat
    for i in range(n):
        mv[i] = beta1 * mv[i] + (1.0 - beta1) * gv[i]
        vv[i] = beta2 * vv[i] + (1.0 - beta2) * gv[i] * gv[i]
        mhat = mv[i] / c1
        vhat = vv[i] / c2
        pv[i] -= lr * mhat / (sqrt(vhat) + eps)
