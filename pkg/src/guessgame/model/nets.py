"""Composed network blocks on top of the engine ops."""

import numpy as np

from ..engine import ops
from ..engine.tensor import Tensor


def linear(ps, name, x):
    y = ops.matmul(x, ps[f"{name}.w"])
    if f"{name}.b" in ps:
        y = ops.add(y, ps[f"{name}.b"])
    return y


def wn_layer(ps, name, x):
    return ops.weight_norm_linear(x, ps[f"{name}.v"], ps[f"{name}.g"], ps[f"{name}.b"])


def wn_mlp(ps, name, x):
    """Two weight-normed layers with ReLU activations."""
    h = ops.relu(wn_layer(ps, f"{name}.l1", x))
    return ops.relu(wn_layer(ps, f"{name}.l2", h))


def lstm_step(ps, name, x, h_prev, c_prev):
    hidden = h_prev.shape[1]
    gates = ops.add(ops.add(ops.matmul(x, ps[f"{name}.wx"]),
                            ops.matmul(h_prev, ps[f"{name}.wh"])),
                    ps[f"{name}.b"])
    i = ops.sigmoid(ops.slice_cols(gates, 0, hidden))
    f = ops.sigmoid(ops.slice_cols(gates, hidden, 2 * hidden))
    g = ops.tanh_(ops.slice_cols(gates, 2 * hidden, 3 * hidden))
    o = ops.sigmoid(ops.slice_cols(gates, 3 * hidden, 4 * hidden))
    c = ops.add(ops.mul(f, c_prev), ops.mul(i, g))
    h = ops.mul(o, ops.tanh_(c))
    return h, c


def zeros(m, n):
    return Tensor(np.zeros((m, n)))


def tile_param_row(ps, name, m):
    """Batch-tile a single learned row, keeping it differentiable."""
    return ops.gather_rows(ps[name], np.zeros(m, dtype=np.int64))


def mean_token_embedding(ps, table_name, ids, mask):
    """Mean of token embeddings over mask==1 positions; zero rows allowed.

    ids, mask: integer arrays (m, T). Differentiable into the table.
    """
    m, t_max = ids.shape
    counts = np.maximum(mask.sum(axis=1, keepdims=True), 1.0)
    total = None
    for t in range(t_max):
        col = mask[:, t:t + 1].astype(np.float64)
        if not col.any():
            continue
        emb = ops.mul(ops.gather_rows(ps[table_name], ids[:, t]), ops.const(col))
        total = emb if total is None else ops.add(total, emb)
    if total is None:
        return zeros(m, ps[table_name].shape[1])
    return ops.mul(total, ops.const(1.0 / counts))


def mean_soft_embedding(ps, table_name, soft_tokens, mask):
    """Soft-token variant: each step is a distribution over the vocabulary."""
    m = soft_tokens[0].shape[0]
    counts = np.maximum(mask.sum(axis=1, keepdims=True), 1.0)
    total = None
    for t, dist in enumerate(soft_tokens):
        col = mask[:, t:t + 1].astype(np.float64)
        if not col.any():
            continue
        emb = ops.mul(ops.matmul(dist, ps[table_name]), ops.const(col))
        total = emb if total is None else ops.add(total, emb)
    if total is None:
        return zeros(m, ps[table_name].shape[1])
    return ops.mul(total, ops.const(1.0 / counts))
