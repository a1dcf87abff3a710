"""Kernel-lane selection.

The compiled extension is preferred when importable; the numpy lane is the
fallback. Set GUESSGAME_BACKEND=python|compiled to force a lane. Switching
lanes mid-run is for tests and benchmarks only; a training run must stay on
one lane for bit-exact reproducibility.
"""

import os

from . import kernels_py

try:
    from . import _kernels as kernels_c
except ImportError:
    kernels_c = None

K = kernels_py


class BackendError(RuntimeError):
    pass


def available_backends():
    names = ["python"]
    if kernels_c is not None:
        names.append("compiled")
    return names


def set_backend(name):
    global K
    if name == "python":
        K = kernels_py
    elif name == "compiled":
        if kernels_c is None:
            raise BackendError("compiled kernel extension is not importable")
        K = kernels_c
    else:
        raise BackendError(f"unknown backend {name!r} (expected python|compiled)")


def backend_name():
    return K.NAME


_forced = os.environ.get("GUESSGAME_BACKEND", "").strip().lower()
if _forced:
    set_backend(_forced)
elif kernels_c is not None:
    K = kernels_c
