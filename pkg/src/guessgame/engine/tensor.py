"""Dense float64 tensors with a reverse-mode tape.

A Tape records operations while it is the active context; backward() walks
the records once in reverse, accumulating gradients additively across fan-out.
Distinct games or workers own distinct tapes; nothing here is shared.
"""

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes do not conform to an op's rule."""

    def __init__(self, kind, *shapes):
        self.kind = kind
        self.shapes = shapes
        super().__init__(f"{kind}: incompatible shapes {' vs '.join(map(str, shapes))}")


class TapeError(RuntimeError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        self.data = arr
        self.requires_grad = requires_grad
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise ShapeError("item", self.data.shape)
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


_ACTIVE = []


class Tape:
    """Ordered op records; parents always precede children (recording order)."""

    __slots__ = ("nodes", "consumed")

    def __init__(self):
        self.nodes = []
        self.consumed = False

    def __enter__(self):
        _ACTIVE.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _ACTIVE.pop()
        assert popped is self
        return False


def active_tape():
    return _ACTIVE[-1] if _ACTIVE else None


def record(out, inputs, backward_fn):
    """Attach a backward rule to `out` if taping is on and any input needs grad."""
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.nodes.append((out, inputs, backward_fn))
    return out


def backward(tape, loss):
    """Populate .grad of every requires_grad leaf with d(loss)/d(leaf)."""
    if loss.size != 1:
        raise ShapeError("backward", loss.shape)
    if tape.consumed:
        raise TapeError("tape already consumed by a previous backward pass")
    tape.consumed = True
    loss.grad = np.ones_like(loss.data)
    for out, inputs, backward_fn in reversed(tape.nodes):
        gout = out.grad
        if gout is None:
            continue
        grads = backward_fn(gout)
        for tensor, g in zip(inputs, grads):
            if g is None or not tensor.requires_grad:
                continue
            if tensor.grad is None:
                tensor.grad = np.zeros_like(tensor.data)
            tensor.grad += g
