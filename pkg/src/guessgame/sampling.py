"""Concrete (Gumbel-Softmax) sampling and the categorical-vs-uniform KL term."""

import math
from dataclasses import dataclass

import numpy as np

from .engine import ops
from .engine.tensor import Tensor

LOG_FLOOR = 1e-12


class DistributionError(ValueError):
    pass


@dataclass
class ConcreteSample:
    """Relaxed K-way categorical draw: soft rows are differentiable, hard rows are argmax."""

    soft: Tensor          # (m, K) rows in (0,1), each summing to 1
    hard_index: np.ndarray  # (m,) int argmax per row, ties to the lowest index
    temperature: float


def _rows(t):
    if not isinstance(t, Tensor):
        t = Tensor(np.asarray(t, dtype=np.float64))
    if t.data.ndim == 1:
        t = Tensor(t.data.reshape(1, -1), requires_grad=t.requires_grad)
    return t


def gumbel_softmax(logits, temperature, rng):
    """softmax((logits + Gumbel noise) / temperature), differentiable via the soft rows."""
    logits = _rows(logits)
    if logits.shape[1] < 2:
        raise DistributionError(f"need K >= 2 categories, got {logits.shape[1]}")
    if temperature <= 0.0:
        raise DistributionError(f"temperature must be positive, got {temperature}")
    if not np.isfinite(logits.data).all():
        raise DistributionError("non-finite logits")
    noise = rng.gumbel(logits.shape)
    soft = ops.softmax_rows(ops.scale(ops.add(logits, ops.const(noise)), 1.0 / temperature))
    hard = soft.data.argmax(axis=1)
    return ConcreteSample(soft=soft, hard_index=hard, temperature=temperature)


def _check_normalized_logprobs(logp):
    sums = np.exp(logp).sum(axis=1)
    if np.abs(sums - 1.0).max() > 1e-6:
        raise DistributionError("log-probabilities do not normalize (exp-sum != 1)")


def kl_categorical_uniform(log_probs):
    """KL( q || Uniform(K) ) = log K - H(q), computed in closed form per row.

    Accepts a (m, K) tensor of log-probabilities; returns an (m, 1) tensor.
    Always >= 0 and <= log K; exactly 0 for the uniform distribution.
    """
    log_probs = _rows(log_probs)
    _check_normalized_logprobs(log_probs.data)
    k = log_probs.shape[1]
    q = ops.softmax_rows(log_probs)  # exp(logp) with a numerically safe path
    return ops.sum_axis(ops.mul(q, ops.add_scalar(log_probs, math.log(k))), axis=1)


def kl_from_probs(probs):
    """Same KL from a plain probability vector; numeric floor keeps log finite."""
    p = np.asarray(probs, dtype=np.float64)
    if abs(p.sum() - 1.0) > 1e-6:
        raise DistributionError("probabilities do not sum to 1")
    k = p.size
    return float(np.sum(p * (np.log(np.maximum(p, LOG_FLOOR)) + math.log(k))))


def sample_categorical(probs, rng):
    """Index ~ Categorical(probs); inverse-CDF on one uniform draw."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or abs(p.sum() - 1.0) > 1e-6 or (p < 0).any():
        raise DistributionError("probabilities must be a normalized vector")
    u = rng.uniform()
    cum = np.cumsum(p)
    return int(np.searchsorted(cum, u, side="right").clip(0, p.size - 1))
