"""Differentiable ops over 2-D tensors.

Everything the agent networks need: matmul, broadcasted add/mul, concat,
axis reductions, activations, (log-)softmax over rows, embedding gather,
dropout with an explicit keep-mask, and a weight-normalized linear map.
Broadcasting is limited to row vectors (1,n), column vectors (m,1), and
scalars (1,1); nothing wider is needed.
"""

import numpy as np

from . import backend
from .tensor import ShapeError, Tensor, record


def const(x):
    return Tensor(x, requires_grad=False)


def _as2d(t, kind):
    if t.data.ndim != 2:
        raise ShapeError(kind, t.data.shape)
    return t


def matmul(a, b):
    _as2d(a, "matmul"), _as2d(b, "matmul")
    if a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    out = Tensor(backend.K.matmul(a.data, b.data))

    def bw(g):
        ga = backend.K.matmul(g, b.data.T) if a.requires_grad else None
        gb = backend.K.matmul(a.data.T, g) if b.requires_grad else None
        return ga, gb

    return record(out, (a, b), bw)


def transpose(a):
    _as2d(a, "transpose")
    out = Tensor(a.data.T.copy())

    def bw(g):
        return (g.T.copy(),)

    return record(out, (a,), bw)


def _broadcast_kind(sa, sb, kind):
    if sa == sb:
        return "same"
    if sb == (1, sa[1]):
        return "row"
    if sb == (sa[0], 1):
        return "col"
    if sb == (1, 1):
        return "scalar"
    raise ShapeError(kind, sa, sb)


def _reduce_to(g, mode):
    if mode == "same":
        return g
    if mode == "row":
        return g.sum(axis=0, keepdims=True)
    if mode == "col":
        return g.sum(axis=1, keepdims=True)
    return g.sum().reshape(1, 1)


def add(a, b):
    _as2d(a, "add"), _as2d(b, "add")
    mode = _broadcast_kind(a.shape, b.shape, "add")
    out = Tensor(a.data + b.data)

    def bw(g):
        return g, _reduce_to(g, mode)

    return record(out, (a, b), bw)


def sub(a, b):
    _as2d(a, "sub"), _as2d(b, "sub")
    if a.shape != b.shape:
        raise ShapeError("sub", a.shape, b.shape)
    out = Tensor(a.data - b.data)

    def bw(g):
        return g, -g

    return record(out, (a, b), bw)


def mul(a, b):
    _as2d(a, "mul"), _as2d(b, "mul")
    mode = _broadcast_kind(a.shape, b.shape, "mul")
    out = Tensor(a.data * b.data)

    def bw(g):
        ga = g * b.data if a.requires_grad else None
        gb = _reduce_to(g * a.data, mode) if b.requires_grad else None
        return ga, gb

    return record(out, (a, b), bw)


def scale(a, c):
    out = Tensor(a.data * float(c))

    def bw(g):
        return (g * float(c),)

    return record(out, (a,), bw)


def add_scalar(a, c):
    out = Tensor(a.data + float(c))

    def bw(g):
        return (g,)

    return record(out, (a,), bw)


def powc(a, c):
    """Elementwise a**c for strictly positive a (norms, reciprocals)."""
    out = Tensor(a.data ** float(c))

    def bw(g):
        return (g * float(c) * a.data ** (float(c) - 1.0),)

    return record(out, (a,), bw)


def exp_(a):
    out = Tensor(np.exp(a.data))

    def bw(g):
        return (g * out.data,)

    return record(out, (a,), bw)


def concat_cols(tensors):
    tensors = list(tensors)  # snapshot: callers may keep appending to their list
    for t in tensors:
        _as2d(t, "concat")
    rows = {t.shape[0] for t in tensors}
    if len(rows) != 1:
        raise ShapeError("concat", *[t.shape for t in tensors])
    out = Tensor(np.concatenate([t.data for t in tensors], axis=1))
    cols = [t.shape[1] for t in tensors]
    offsets = np.cumsum([0] + cols)

    def bw(g):
        return [g[:, offsets[i]:offsets[i + 1]] for i in range(len(tensors))]

    return record(out, tuple(tensors), bw)


def slice_cols(a, lo, hi):
    _as2d(a, "slice")
    if not (0 <= lo < hi <= a.shape[1]):
        raise ShapeError("slice", a.shape, (lo, hi))
    out = Tensor(a.data[:, lo:hi].copy())

    def bw(g):
        full = np.zeros_like(a.data)
        full[:, lo:hi] = g
        return (full,)

    return record(out, (a,), bw)


def sum_axis(a, axis):
    _as2d(a, "sum")
    out = Tensor(a.data.sum(axis=axis, keepdims=True))

    def bw(g):
        return (np.broadcast_to(g, a.shape).copy(),)

    return record(out, (a,), bw)


def mean_axis(a, axis):
    _as2d(a, "mean")
    n = a.shape[axis]
    out = Tensor(a.data.mean(axis=axis, keepdims=True))

    def bw(g):
        return (np.broadcast_to(g / n, a.shape).copy(),)

    return record(out, (a,), bw)


def sum_all(a):
    out = Tensor(a.data.sum().reshape(1, 1))

    def bw(g):
        return (np.full_like(a.data, g[0, 0]),)

    return record(out, (a,), bw)


def mean_all(a):
    n = a.size
    out = Tensor(a.data.mean().reshape(1, 1))

    def bw(g):
        return (np.full_like(a.data, g[0, 0] / n),)

    return record(out, (a,), bw)


def repeat_rows(a, k):
    """Each row repeated k consecutive times: (m,n) -> (m*k, n)."""
    _as2d(a, "repeat_rows")
    out = Tensor(np.repeat(a.data, k, axis=0))

    def bw(g):
        return (g.reshape(a.shape[0], k, a.shape[1]).sum(axis=1),)

    return record(out, (a,), bw)


def reshape2d(a, rows, cols):
    """C-order reshape between 2-D layouts; size must match."""
    _as2d(a, "reshape")
    if rows * cols != a.size:
        raise ShapeError("reshape", a.shape, (rows, cols))
    out = Tensor(a.data.reshape(rows, cols).copy())

    def bw(g):
        return (g.reshape(a.shape),)

    return record(out, (a,), bw)


def attend_pool(values, weights):
    """Weighted sum of row groups: values (m*k, d) grouped per weight row (m, k) -> (m, d)."""
    _as2d(values, "attend_pool"), _as2d(weights, "attend_pool")
    m, k = weights.shape
    if values.shape[0] != m * k:
        raise ShapeError("attend_pool", values.shape, weights.shape)
    d = values.shape[1]
    v3 = values.data.reshape(m, k, d)
    out = Tensor(np.einsum("mk,mkd->md", weights.data, v3))

    def bw(g):
        gv = (weights.data[:, :, None] * g[:, None, :]).reshape(m * k, d) \
            if values.requires_grad else None
        gw = np.einsum("md,mkd->mk", g, v3) if weights.requires_grad else None
        return gv, gw

    return record(out, (values, weights), bw)


def relu(a):
    out = Tensor(backend.K.relu_fwd(a.data))

    def bw(g):
        return (backend.K.relu_bwd(a.data, g),)

    return record(out, (a,), bw)


def tanh_(a):
    out = Tensor(backend.K.tanh_fwd(a.data))

    def bw(g):
        return (backend.K.tanh_bwd(out.data, g),)

    return record(out, (a,), bw)


def sigmoid(a):
    out = Tensor(backend.K.sigmoid_fwd(a.data))

    def bw(g):
        return (backend.K.sigmoid_bwd(out.data, g),)

    return record(out, (a,), bw)


def softmax_rows(a):
    _as2d(a, "softmax")
    out = Tensor(backend.K.softmax_rows(a.data))

    def bw(g):
        return (backend.K.softmax_rows_bwd(out.data, g),)

    return record(out, (a,), bw)


def log_softmax_rows(a):
    _as2d(a, "log_softmax")
    out = Tensor(backend.K.log_softmax_rows(a.data))

    def bw(g):
        return (backend.K.log_softmax_rows_bwd(out.data, g),)

    return record(out, (a,), bw)


def gather_rows(table, idx):
    """Embedding lookup: table (V,d) gathered at integer idx (m,) -> (m,d)."""
    _as2d(table, "gather")
    idx = np.asarray(idx, dtype=np.int64)
    if idx.ndim != 1 or (idx.size and (idx.min() < 0 or idx.max() >= table.shape[0])):
        raise ShapeError("gather", table.shape, idx.shape)
    out = Tensor(backend.K.gather_rows(table.data, idx))

    def bw(g):
        acc = np.zeros_like(table.data)
        backend.K.scatter_add_rows(acc, idx, g)
        return (acc,)

    return record(out, (table,), bw)


def dropout(a, rate, rng, training):
    """Bernoulli keep-mask scaled by 1/keep-rate; identity when not training."""
    if not training or rate <= 0.0:
        return a
    keep = 1.0 - rate
    mask = (rng.uniform(a.shape) < keep).astype(np.float64) / keep
    return mul(a, const(mask))


def weight_norm_linear(x, v, g, b=None):
    """y = x @ W.T + b with W = g * v / ||v|| rowwise (direction/magnitude split)."""
    norm = powc(add_scalar(sum_axis(mul(v, v), axis=1), 1e-12), -0.5)
    w = mul(v, mul(g, norm))
    y = matmul(x, transpose(w))
    if b is not None:
        y = add(y, b)
    return y


_KINDS = {
    "matmul": matmul,
    "add": add,
    "mul": mul,
    "concat": concat_cols,
    "sum": sum_axis,
    "mean": mean_axis,
    "relu": relu,
    "tanh": tanh_,
    "sigmoid": sigmoid,
    "softmax": softmax_rows,
    "log_softmax": log_softmax_rows,
    "gather": gather_rows,
    "dropout": dropout,
    "weight_norm_linear": weight_norm_linear,
}


def forward_op(kind, *args, **kwargs):
    if kind not in _KINDS:
        raise ShapeError(kind, ())
    return _KINDS[kind](*args, **kwargs)


def op_kinds():
    return sorted(_KINDS)
