"""Shared test utilities: finite-difference gradient oracle."""

import numpy as np

from guessgame.engine import Tape, backward, ops
from guessgame.engine.tensor import Tensor


def fd_check(build_loss, arrays, eps=1e-4, tol=1e-4):
    """Compare analytic grads of build_loss(tensors) against central differences.

    build_loss receives one Tensor per input array and must return a scalar
    Tensor computed with engine ops. Returns the worst relative error seen.
    """
    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    with Tape() as tape:
        loss = build_loss(*tensors)
    backward(tape, loss)
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in tensors]

    def value(mutated):
        ts = [Tensor(a, requires_grad=False) for a in mutated]
        return build_loss(*ts).item()

    worst = 0.0
    for i, a in enumerate(arrays):
        flat = a.reshape(-1)
        for j in range(flat.size):
            bumped = [x.copy() for x in arrays]
            bumped[i].reshape(-1)[j] = flat[j] + eps
            up = value(bumped)
            bumped[i].reshape(-1)[j] = flat[j] - eps
            down = value(bumped)
            numeric = (up - down) / (2 * eps)
            got = analytic[i].reshape(-1)[j]
            err = abs(got - numeric) / max(1.0, abs(got), abs(numeric))
            worst = max(worst, err)
            assert err <= tol, (
                f"input {i} element {j}: analytic {got} vs numeric {numeric} (err {err})"
            )
    return worst


def weighted_sum(t, weights):
    return ops.sum_all(ops.mul(t, ops.const(weights)))
