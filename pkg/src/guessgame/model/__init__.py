from .abot import abot_answer
from .config import EVAL, Mode, ModelConfig
from .modules import (
    DialogState, LatentCode, PoolBatch, context_attention, context_encode,
    dialog_rnn_step, embed_answer, embed_code, embed_question, encode_posterior,
    initial_state, latent_logits, predictor, placeholder_inputs, question_policy,
    questions_to_arrays, speaker_free_running, speaker_teacher_forced,
)
from .params import GROUPS, build_params
from .qbot import RoundOutput, final_guess, qbot_round
