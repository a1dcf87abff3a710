"""Stage 1: single-round supervised pre-training on contrast pairs.

ELBO variants encode the gold question into a latent posterior, reconstruct
it with the speaker, and regularize the posterior toward the uniform (or
standard-normal) prior. MLE variants skip the encoder and the KL term and
reconstruct from the policy's own latent. All variants additionally train
the predictor on the round-1 guess given the gold question and answer.
"""

import math

import numpy as np

from ..engine import Tape, adam_step, backward, clip_global_norm, ops
from ..model import (
    Mode, PoolBatch, build_params, embed_code, embed_question, encode_posterior,
    initial_state, placeholder_inputs, predictor, qbot_round, question_policy,
    speaker_teacher_forced, questions_to_arrays,
)
from ..model.modules import LatentCode, context_encode, dialog_rnn_step
from ..rng import RngStream
from ..sampling import gumbel_softmax, kl_categorical_uniform
from ..world import ANSWER_TO_ID
from .config import TrainConfig, TrainError


def elbo_loss(recon_nll, per_n_logits):
    """Mean reconstruction NLL plus the mean per-variable KL to the uniform prior."""
    kl = None
    for lp in per_n_logits:
        term = kl_categorical_uniform(lp)
        kl = term if kl is None else ops.add(kl, term)
    kl = ops.scale(kl, 1.0 / len(per_n_logits))
    return ops.add(ops.mean_all(recon_nll), ops.mean_all(kl)), kl


def gaussian_kl(mu, logsig):
    """Mean over dims of KL(N(mu, sigma^2) || N(0,1)) per row."""
    var = ops.exp_(logsig)
    term = ops.sub(ops.add(ops.mul(mu, mu), var), ops.add_scalar(logsig, 1.0))
    return ops.scale(ops.mean_axis(term, axis=1), 0.5)


def _batch_arrays(examples):
    pools = [ex.pool for ex in examples]
    pb = PoolBatch.from_pools(pools)
    ids, mask = questions_to_arrays([ex.question.tokens for ex in examples])
    answers = np.array([ANSWER_TO_ID[ex.gold_answer] for ex in examples], dtype=np.int64)
    targets = np.array([ex.pool.target_index for ex in examples], dtype=np.int64)
    onehot = np.zeros((len(examples), pools[0].size))
    onehot[np.arange(len(examples)), targets] = 1.0
    return pb, ids, mask, answers, targets, onehot


def _prediction_branch(ps, cfg, pb, ids, mask, answers, mode):
    """Placeholder planner step, then predict from the gold round-1 fact."""
    m = pb.m
    state = initial_state(ps, cfg, m)
    e_q0, e_a0 = placeholder_inputs(ps, m)
    _, x_ctx, _, _ = context_encode(ps, cfg, state, e_q0, e_a0, pb)
    h, h_bar, cell = dialog_rnn_step(ps, cfg, x_ctx, state, mode)
    code, h = question_policy(ps, cfg, h, mode)
    e_q = embed_question(ps, ids_mask=(ids, mask))
    e_a = ops.gather_rows(ps["emb.a"], answers)
    state.facts.append(ops.concat_cols([e_q, e_a]))
    state = type(state)(h=h, h_bar=h_bar, cell=cell, facts=state.facts, round=1)
    logits, guess = predictor(ps, cfg, h, state.facts, pb, mode)
    return logits, guess, code, e_q


def _latent_from_posterior(ps, cfg, pb, e_q, mode):
    code, aux = encode_posterior(ps, cfg, pb, e_q)
    if cfg.latent == "discrete":
        per_n = aux
        samples = [gumbel_softmax(lp, mode.temp(cfg), mode.rng) for lp in per_n]
        soft = [s.soft for s in samples]
        indices = np.stack([s.hard_index for s in samples], axis=1)
        return LatentCode("discrete", indices=indices, soft=soft, logits=code.logits), per_n
    mu, logsig = aux
    if logsig is not None:
        eps = ops.const(mode.rng.normal(mu.shape))
        z = ops.add(mu, ops.mul(ops.exp_(ops.scale(logsig, 0.5)), eps))
    else:
        z = mu
    return LatentCode("continuous", z=z), (mu, logsig)


def stage1_train(config, examples, val_examples=None, callback=None):
    """Train from scratch on contrast pairs; returns (params, model_cfg, history)."""
    if config.stage != "stage1":
        raise TrainError("stage1_train requires a stage1 config")
    if not examples:
        raise TrainError("empty dataset")
    cfg = config.model_config()
    root = RngStream(config.seed, f"train/{config.variant}/stage1")
    ps = build_params(cfg, root.split("params"))
    betas = (config.beta1, config.beta2)
    history = []
    n = len(examples)
    for epoch in range(config.epochs):
        order = root.split(f"shuffle/{epoch}").permutation(n)
        noise = root.split(f"noise/{epoch}")
        mode = Mode(train=True, rng=noise, temperature=config.temp_at(epoch))
        sums = {"recon": 0.0, "kl": 0.0, "pred_ce": 0.0, "total": 0.0}
        batches = 0
        for lo in range(0, n - config.batch + 1, config.batch):
            batch = [examples[i] for i in order[lo:lo + config.batch]]
            pb, ids, mask, answers, targets, onehot = _batch_arrays(batch)
            ps.zero_grad()
            with Tape() as tape:
                logits, _, policy_code, e_q_gold = _prediction_branch(
                    ps, cfg, pb, ids, mask, answers, mode)
                lp = ops.log_softmax_rows(logits)
                pred_ce = ops.scale(
                    ops.mean_all(ops.sum_axis(ops.mul(lp, ops.const(onehot)), axis=1)), -1.0)

                if cfg.with_encoder:
                    code, aux = _latent_from_posterior(ps, cfg, pb, e_q_gold, mode)
                    e_z = embed_code(ps, cfg, code, mode)
                    recon = speaker_teacher_forced(ps, cfg, e_z, ids, mask)
                    if cfg.latent == "discrete":
                        elbo, _ = elbo_loss(recon, aux)
                        kl_val = elbo.item() - ops.mean_all(recon).item()
                    else:
                        mu, logsig = aux
                        kl = gaussian_kl(mu, logsig)
                        elbo = ops.add(ops.mean_all(recon), ops.mean_all(kl))
                        kl_val = ops.mean_all(kl).item()
                    loss = ops.add(elbo, pred_ce)
                    recon_val = ops.mean_all(recon).item()
                else:
                    # MLE: reconstruct from the policy's own latent, no KL term
                    e_z = embed_code(ps, cfg, policy_code, mode)
                    recon = speaker_teacher_forced(ps, cfg, e_z, ids, mask)
                    loss = ops.add(ops.mean_all(recon), pred_ce)
                    recon_val, kl_val = ops.mean_all(recon).item(), 0.0
            if not math.isfinite(loss.item()):
                raise TrainError(f"loss diverged (non-finite) at epoch {epoch}")
            backward(tape, loss)
            clip_global_norm(ps, config.clip)
            adam_step(ps, config.lr, betas, config.eps)
            sums["recon"] += recon_val
            sums["kl"] += kl_val
            sums["pred_ce"] += pred_ce.item()
            sums["total"] += loss.item()
            batches += 1
        row = {k: v / max(batches, 1) for k, v in sums.items()}
        row["epoch"] = epoch
        row["elbo"] = row["recon"] + row["kl"]
        if val_examples:
            row["val_acc"] = stage1_accuracy(ps, cfg, val_examples)
        history.append(row)
        if callback:
            callback(row)
    return ps, cfg, history


def stage1_accuracy(ps, cfg, examples, batch=256):
    """Round-1 guess accuracy given the gold question and answer (eval mode)."""
    mode = Mode(train=False)
    hits = 0
    for lo in range(0, len(examples), batch):
        chunk = examples[lo:lo + batch]
        pb, ids, mask, answers, targets, _ = _batch_arrays(chunk)
        logits, _, _, _ = _prediction_branch(ps, cfg, pb, ids, mask, answers, mode)
        hits += int((logits.data.argmax(axis=1) == targets).sum())
    return hits / len(examples)
