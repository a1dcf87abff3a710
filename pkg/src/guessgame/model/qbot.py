"""One dialog round of the questioner, composed in the canonical order:
predict from the facts so far, advance the planner on the previous
question/answer, sample the intention code, speak.

The guess a round call returns is therefore conditioned on facts through the
previous answer; the driver obtains the post-answer guess for round r from
the round r+1 call (or from a final predictor call after the last answer).
"""

from dataclasses import dataclass

import numpy as np

from ..engine import ops
from . import modules
from .modules import DialogState, PoolBatch


@dataclass
class RoundOutput:
    question_ids: np.ndarray   # (m, T-1) content tokens
    question_mask: np.ndarray
    guess_logits: object       # (m, P) Tensor (pre-question guess)
    guess: object              # (m, P) Tensor softmax
    state: DialogState
    code: object               # LatentCode
    decode: object             # modules.Decode


def qbot_round(ps, cfg, pool, state, prev_q, prev_a, mode, concrete_speaker=False,
               speak=True):
    """Run one round. prev_q/prev_a describe the previous round's fact:

    - round 0: both None (the placeholder fact is already in state.facts)
    - later rounds: prev_q is (ids, mask) or soft-token payload, prev_a is
      an (m,) answer-id array; the fact embedding is appended before predicting.

    speak=False skips the decoder (the parallel-speaker ablation replaces the
    spoken question with a frozen copy's output).
    """
    if state.round == 0:
        e_q, e_a = modules.placeholder_inputs(ps, pool.m)
    else:
        e_q = _embed_prev_question(ps, prev_q)
        e_a = modules.embed_answer(ps, prev_a)
        state.facts.append(ops.concat_cols([e_q, e_a]))

    guess_logits, guess = modules.predictor(ps, cfg, state.h, state.facts, pool, mode)

    _, x_context, _, _ = modules.context_encode(ps, cfg, state, e_q, e_a, pool)
    h, h_bar, cell = modules.dialog_rnn_step(ps, cfg, x_context, state, mode)
    code, h = modules.question_policy(ps, cfg, h, mode)

    decode = None
    if speak:
        e_z = modules.embed_code(ps, cfg, code, mode)
        decode = modules.speaker_free_running(ps, cfg, e_z, mode, concrete=concrete_speaker)

    new_state = DialogState(h=h, h_bar=h_bar, cell=cell, facts=state.facts,
                            round=state.round + 1, histories=state.histories)
    return RoundOutput(question_ids=decode.ids if decode else None,
                       question_mask=decode.mask if decode else None,
                       guess_logits=guess_logits, guess=guess, state=new_state,
                       code=code, decode=decode)


def _embed_prev_question(ps, prev_q):
    if isinstance(prev_q, dict) and "soft_tokens" in prev_q:
        return modules.embed_question(ps, soft_tokens=prev_q["soft_tokens"],
                                      soft_mask=prev_q["mask"])
    ids, mask = prev_q
    return modules.embed_question(ps, ids_mask=(ids, mask))


def final_guess(ps, cfg, pool, state, last_q, last_a, mode):
    """Post-answer guess after the final round: append the last fact, predict."""
    e_q = _embed_prev_question(ps, last_q)
    e_a = modules.embed_answer(ps, last_a)
    state.facts.append(ops.concat_cols([e_q, e_a]))
    return modules.predictor(ps, cfg, state.h, state.facts, pool, mode)
