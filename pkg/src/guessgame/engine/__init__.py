from . import backend, checkpoint, ops, optim
from .optim import ParamStore, adam_step, clip_global_norm
from .tensor import ShapeError, Tape, TapeError, Tensor, backward

__all__ = [
    "backend", "checkpoint", "ops", "optim",
    "ParamStore", "adam_step", "clip_global_norm",
    "ShapeError", "Tape", "TapeError", "Tensor", "backward",
]
