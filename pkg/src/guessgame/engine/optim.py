"""Named parameter store with Adam updates and freeze masks."""

import hashlib

import numpy as np

from . import backend
from .tensor import Tensor


class MissingGradient(RuntimeError):
    pass


class ParamStore:
    """Insertion-ordered map name -> Tensor plus per-parameter Adam moments."""

    def __init__(self):
        self.params = {}
        self._m = {}
        self._v = {}
        self.step_count = 0

    def add(self, name, array):
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = Tensor(np.ascontiguousarray(array, dtype=np.float64), requires_grad=True)
        self.params[name] = t
        self._m[name] = np.zeros_like(t.data)
        self._v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name):
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def names(self):
        return list(self.params)

    def zero_grad(self):
        for t in self.params.values():
            t.grad = np.zeros_like(t.data)

    def reset_moments(self):
        for name, t in self.params.items():
            self._m[name] = np.zeros_like(t.data)
            self._v[name] = np.zeros_like(t.data)
        self.step_count = 0

    def group_names(self, prefix):
        dotted = prefix if prefix.endswith(".") else prefix + "."
        return [n for n in self.params if n.startswith(dotted) or n == prefix]

    def expand_groups(self, prefixes):
        names = set()
        for p in prefixes:
            names.update(self.group_names(p))
        return names

    def hash_group(self, prefix):
        """sha256 over the raw bytes of every parameter in the group."""
        h = hashlib.sha256()
        for n in self.group_names(prefix):
            h.update(n.encode())
            h.update(self.params[n].data.tobytes())
        return h.hexdigest()

    def hash_all(self):
        h = hashlib.sha256()
        for n, t in self.params.items():
            h.update(n.encode())
            h.update(t.data.tobytes())
        return h.hexdigest()


def clip_global_norm(store, max_norm, frozen=()):
    """Scale all unfrozen gradients so their joint L2 norm is <= max_norm."""
    total = 0.0
    names = [n for n in store.params if n not in frozen]
    for n in names:
        g = store.params[n].grad
        if g is not None:
            total += backend.K.sumsq(g)
    norm = total**0.5
    if norm > max_norm and norm > 0.0:
        factor = max_norm / norm
        for n in names:
            g = store.params[n].grad
            if g is not None:
                g *= factor
    return norm


def adam_step(store, lr, betas=(0.9, 0.999), eps=1e-8, frozen=()):
    """One Adam update of every unfrozen parameter; frozen ones stay bitwise put.

    Gradients must be populated (zero_grad + backward) for all unfrozen
    parameters; they are cleared afterwards.
    """
    frozen = set(frozen)
    store.step_count += 1
    t = store.step_count
    b1, b2 = betas
    for name, p in store.params.items():
        if name in frozen:
            continue
        if p.grad is None:
            raise MissingGradient(f"parameter {name!r} has no gradient")
        backend.K.adam_update(p.data, p.grad, store._m[name], store._v[name],
                              t, lr, b1, b2, eps)
    for name, p in store.params.items():
        p.grad = None
