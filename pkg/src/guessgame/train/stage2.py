"""Stage 2: fine-tuning on full games with only the guessing loss.

Rolls out R rounds against the oracle answerer inside one tape, accumulates
the predictor cross-entropy on every post-answer guess, and applies Adam
under the stage's freeze mask. Generated tokens and answers are detached
observations; gradients reach the policy through the residual connection
(and, for speaker-fine-tuning variants, through relaxed token choices).
"""

import math

import numpy as np

from ..engine import Tape, adam_step, backward, clip_global_norm, ops
from ..model import Mode, PoolBatch, abot_answer, final_guess, initial_state, qbot_round
from ..rng import RngStream
from ..world import ANSWER_TO_ID, END, WorldConfig, question_from_ids, sample_random_pool
from ..world.pools import sample_contrast_pair
from .config import TrainError


def _sample_pools(config, world_cfg, rng, count):
    pools = []
    for _ in range(count):
        if config.pool_sampling == "contrast":
            pools.append(sample_contrast_pair(world_cfg, rng).pool)
        else:
            pools.append(sample_random_pool(config.pool_size, world_cfg, rng))
    return pools


def _questions_of(out):
    qs = []
    for i in range(out.question_ids.shape[0]):
        content = out.question_ids[i][out.question_mask[i] > 0]
        qs.append(question_from_ids(list(content) + [END]))
    return qs


def _answer_ids(pools, questions):
    ids = np.empty(len(pools), dtype=np.int64)
    for i, (pool, q) in enumerate(zip(pools, questions)):
        ans, _ = abot_answer(pool, q)
        ids[i] = ANSWER_TO_ID[ans]
    return ids


def _ce(logits, onehot):
    lp = ops.log_softmax_rows(logits)
    return ops.scale(ops.mean_all(ops.sum_axis(ops.mul(lp, ops.const(onehot)), axis=1)), -1.0)


def _prev_q_payload(out, concrete):
    if concrete and out.decode.soft_tokens is not None:
        return {"soft_tokens": out.decode.soft_tokens, "mask": out.decode.mask}
    return (out.question_ids, out.question_mask)


def rollout_batch_loss(ps, cfg, config, pools, mode, z_supplier=None):
    """One taped R-round rollout; returns (loss tensor, final-round accuracy)."""
    m = len(pools)
    pb = PoolBatch.from_pools(pools)
    onehot = np.zeros((m, pools[0].size))
    for i, pool in enumerate(pools):
        onehot[i, pool.target_index] = 1.0
    concrete = config.concrete_speaker()

    state = initial_state(ps, cfg, m)
    sup_state = None
    if z_supplier is not None:
        sup_ps, sup_cfg = z_supplier
        sup_state = initial_state(sup_ps, sup_cfg, m)
    prev_q = prev_a = None
    sup_prev_q = None
    loss = None
    last_logits = None
    for r in range(config.rounds):
        out = qbot_round(ps, cfg, pb, state, prev_q, prev_a, mode,
                         concrete_speaker=concrete, speak=z_supplier is None)
        state = out.state
        if z_supplier is not None:
            # frozen copy tracks the same dialog and supplies the spoken question
            sup_out = qbot_round(sup_ps, sup_cfg, pb, sup_state, sup_prev_q, prev_a,
                                 Mode(train=False))
            sup_state = sup_out.state
            questions = _questions_of(sup_out)
            sup_prev_q = (sup_out.question_ids, sup_out.question_mask)
            prev_q = (sup_out.question_ids, sup_out.question_mask)
        else:
            questions = _questions_of(out)
            prev_q = _prev_q_payload(out, concrete)
        prev_a = _answer_ids(pools, questions)
        if r > 0:
            loss = _add(loss, _ce(out.guess_logits, onehot))
    logits, _ = final_guess(ps, cfg, pb, state, prev_q, prev_a, mode)
    loss = _add(loss, _ce(logits, onehot))
    acc = float((logits.data.argmax(axis=1) == onehot.argmax(axis=1)).mean())
    return loss, acc


def _add(total, term):
    return term if total is None else ops.add(total, term)


def stage2_train(config, ps, cfg, world_cfg=None, callback=None, z_supplier=None):
    """Fine-tune in place under the stage's freeze mask; returns history."""
    if config.stage not in ("stage2a", "stage2b", "stage2"):
        raise TrainError("stage2_train requires a stage-2 config")
    world_cfg = world_cfg or WorldConfig()
    frozen = ps.expand_groups(config.freeze_groups())
    speaker_hash_before = ps.hash_group("spk")
    root = RngStream(config.seed, f"train/{config.variant}/{config.stage}")
    ps.reset_moments()
    betas = (config.beta1, config.beta2)
    history = []
    for epoch in range(config.epochs):
        pool_rng = root.split(f"pools/{epoch}")
        noise = root.split(f"noise/{epoch}")
        mode = Mode(train=True, rng=noise, temperature=config.temp_at(epoch))
        sums, batches, accs = 0.0, 0, []
        for _ in range(max(config.games_per_epoch // config.batch, 1)):
            pools = _sample_pools(config, world_cfg, pool_rng, config.batch)
            ps.zero_grad()
            with Tape() as tape:
                loss, acc = rollout_batch_loss(ps, cfg, config, pools, mode,
                                               z_supplier=z_supplier)
            if not math.isfinite(loss.item()):
                raise TrainError(f"loss diverged (non-finite) at epoch {epoch}")
            backward(tape, loss)
            clip_global_norm(ps, config.clip, frozen)
            adam_step(ps, config.lr, betas, config.eps, frozen)
            sums += loss.item()
            accs.append(acc)
            batches += 1
        row = {"epoch": epoch, "loss": sums / batches, "train_acc": float(np.mean(accs))}
        history.append(row)
        if callback:
            callback(row)
    if config.speaker_is_fixed() and ps.hash_group("spk") != speaker_hash_before:
        raise TrainError("freeze-mask violation: speaker parameters changed")
    return history
