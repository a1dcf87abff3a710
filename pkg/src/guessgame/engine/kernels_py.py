"""Pure-numpy kernel lane.

Same function table as the compiled extension in ``_kernels.pyx``; the
backend module picks one at import time. Matrix multiplication is BLAS-backed
through numpy in both lanes, so the lanes differ only in the elementwise and
reduction kernels that dominate per-op overhead at this scale.
"""

import numpy as np

NAME = "python"


def matmul(a, b):
    return a @ b


def relu_fwd(x):
    return np.maximum(x, 0.0)


def relu_bwd(x, gout):
    return gout * (x > 0.0)


def tanh_fwd(x):
    return np.tanh(x)


def tanh_bwd(y, gout):
    return gout * (1.0 - y * y)


def sigmoid_fwd(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_bwd(y, gout):
    return gout * y * (1.0 - y)


def softmax_rows(x):
    shifted = x - x.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=1, keepdims=True)


def softmax_rows_bwd(y, gout):
    dot = (gout * y).sum(axis=1, keepdims=True)
    return y * (gout - dot)


def log_softmax_rows(x):
    shifted = x - x.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def log_softmax_rows_bwd(y, gout):
    return gout - np.exp(y) * gout.sum(axis=1, keepdims=True)


def gather_rows(table, idx):
    return table[idx]


def scatter_add_rows(acc, idx, gout):
    np.add.at(acc, idx, gout)


def sumsq(x):
    flat = x.ravel()
    return float(flat @ flat)


def adam_update(p, g, m, v, t, lr, beta1, beta2, eps):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)
