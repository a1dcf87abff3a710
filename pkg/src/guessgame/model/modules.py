"""The questioner's modules: context coder, dialog cell, question policy,
speaker, predictor, and the posterior encoder used for variational pre-training.

Everything is batched over games: tensors carry a leading batch dimension m,
pool features are stacked (m*P*B, d) in game-major order.
"""

from dataclasses import dataclass, field

import numpy as np

from ..engine import ops
from ..engine.tensor import Tensor
from ..sampling import gumbel_softmax
from ..world import END, MAX_LEN, PAD
from . import nets


@dataclass
class PoolBatch:
    """Constant pool features for a batch of same-size pools."""

    p: int
    b: int
    feats: Tensor           # (m*P*B, d) game-major
    expand: np.ndarray      # (P, P*B) image -> box incidence
    m: int

    @classmethod
    def from_pools(cls, pools):
        arr = np.stack([pool.features() for pool in pools])  # (m, P, B, d)
        m, p, b, d = arr.shape
        feats = Tensor(arr.reshape(m * p * b, d))
        expand = np.kron(np.eye(p), np.ones((1, b)))
        return cls(p=p, b=b, feats=feats, expand=expand, m=m)

    @classmethod
    def from_feature_array(cls, arr):
        m, p, b, d = arr.shape
        feats = Tensor(arr.reshape(m * p * b, d))
        return cls(p=p, b=b, feats=feats, expand=np.kron(np.eye(p), np.ones((1, b))), m=m)


def questions_to_arrays(token_seqs, t_max=MAX_LEN):
    """Pad token-id sequences (end token excluded) to (m, T) ids + content mask."""
    m = len(token_seqs)
    ids = np.full((m, t_max), PAD, dtype=np.int64)
    mask = np.zeros((m, t_max), dtype=np.float64)
    for i, seq in enumerate(token_seqs):
        content = [t for t in seq if t not in (END, PAD)][:t_max]
        ids[i, :len(content)] = content
        mask[i, :len(content)] = 1.0
    return ids, mask


@dataclass
class DialogState:
    h: Tensor
    h_bar: Tensor
    cell: Tensor
    facts: list           # fact embeddings (m, 2E); facts[0] is the placeholder
    round: int = 0
    histories: list = field(default_factory=list)  # per-round bookkeeping, opaque


@dataclass
class LatentCode:
    kind: str                      # "discrete" | "continuous"
    indices: np.ndarray = None     # (m, N) argmax choices
    soft: list = None              # N tensors (m, K), train-mode samples
    logits: Tensor = None          # (m, N*K) log-softmax rows
    z: Tensor = None               # (m, Z) continuous latent


def initial_state(ps, cfg, m):
    e_q0 = nets.tile_param_row(ps, "emb.q0", m)
    e_a0 = nets.tile_param_row(ps, "emb.a0", m)
    fact0 = ops.concat_cols([e_q0, e_a0])
    return DialogState(h=nets.zeros(m, cfg.hidden), h_bar=nets.zeros(m, cfg.hidden),
                       cell=nets.zeros(m, cfg.hidden), facts=[fact0], round=0)


def placeholder_inputs(ps, m):
    return nets.tile_param_row(ps, "emb.q0", m), nets.tile_param_row(ps, "emb.a0", m)


def embed_question(ps, token_seqs=None, ids_mask=None, soft_tokens=None, soft_mask=None):
    """Question representation: mean token embedding (hard ids or soft rows)."""
    if soft_tokens is not None:
        return nets.mean_soft_embedding(ps, "emb.q", soft_tokens, soft_mask)
    if ids_mask is None:
        ids_mask = questions_to_arrays(token_seqs)
    return nets.mean_token_embedding(ps, "emb.q", *ids_mask)


def embed_answer(ps, answer_ids):
    return ops.gather_rows(ps["emb.a"], np.asarray(answer_ids, dtype=np.int64))


def context_attention(ps, pool, query):
    """Hierarchical attention: image weights alpha (m,P), box weights beta
    (m, P*B, grouped per image), pooled feature v_hat (m, d)."""
    gq = nets.wn_mlp(ps, "ctx.g", query)
    gq_rep = ops.repeat_rows(gq, pool.p * pool.b)
    k1 = nets.wn_mlp(ps, "ctx.f1", pool.feats)
    s1 = nets.wn_layer(ps, "ctx.f2", ops.mul(gq_rep, k1))
    per_image = ops.mean_axis(ops.reshape2d(s1, pool.m * pool.p, pool.b), axis=1)
    alpha = ops.softmax_rows(ops.reshape2d(per_image, pool.m, pool.p))
    k3 = nets.wn_mlp(ps, "ctx.f3", pool.feats)
    s3 = nets.wn_layer(ps, "ctx.f4", ops.mul(gq_rep, k3))
    beta = ops.reshape2d(ops.softmax_rows(ops.reshape2d(s3, pool.m * pool.p, pool.b)),
                         pool.m, pool.p * pool.b)
    joint = ops.mul(ops.matmul(alpha, ops.const(pool.expand)), beta)
    v_hat = ops.attend_pool(pool.feats, joint)
    return alpha, beta, v_hat


def context_encode(ps, cfg, state, e_q, e_a, pool):
    """Planner context coder: query from [h_bar, e_q, e_a], then pool attention."""
    e_c = nets.linear(ps, "ctx.f5", ops.concat_cols([state.h_bar, e_q, e_a]))
    alpha, beta, v_hat = context_attention(ps, pool, e_c)
    x_context = ops.concat_cols([v_hat, e_q, e_a])
    return v_hat, x_context, alpha, beta


def dialog_rnn_step(ps, cfg, x_context, state, mode):
    """Advance (h, cell); parallel hidden h_bar uses its own output gate."""
    h, cell = nets.lstm_step(ps, "rnn", x_context, state.h, state.cell)
    h = ops.dropout(h, cfg.dropout, mode.rng, mode.train)
    gate = ops.sigmoid(ops.add(ops.add(ops.matmul(x_context, ps["rnn.w1"]),
                                       ops.matmul(state.h, ps["rnn.w2"])),
                               ps["rnn.gb"]))
    h_bar = ops.mul(gate, ops.tanh_(cell))
    h_bar = ops.dropout(h_bar, cfg.dropout, mode.rng, mode.train)
    return h, h_bar, cell


def latent_logits(ps, cfg, h):
    """Per-variable log-softmax rows l_{n,k}; list of (m,K) plus concat (m,N*K)."""
    per_n = [ops.log_softmax_rows(ops.matmul(h, ps[f"policy.wz.{n}"]))
             for n in range(cfg.n_latent)]
    return per_n, ops.concat_cols(per_n)


def question_policy(ps, cfg, h, mode):
    """Sample/argmax the intention code and apply the residual h + relu(W^l l)."""
    if cfg.latent == "discrete":
        per_n, full = latent_logits(ps, cfg, h)
        if mode.train:
            samples = [gumbel_softmax(lp, mode.temp(cfg), mode.rng) for lp in per_n]
            soft = [s.soft for s in samples]
            indices = np.stack([s.hard_index for s in samples], axis=1)
        else:
            soft = None
            indices = np.stack([lp.data.argmax(axis=1) for lp in per_n], axis=1)
        code = LatentCode("discrete", indices=indices, soft=soft, logits=full)
        residual_in = full
    else:
        mu = ops.matmul(h, ps["policy.mu.w"])
        if mode.train and cfg.stochastic_continuous and "policy.logsig.w" in ps:
            logsig = ops.matmul(h, ps["policy.logsig.w"])
            eps = ops.const(mode.rng.normal(mu.shape))
            z = ops.add(mu, ops.mul(ops.exp_(ops.scale(logsig, 0.5)), eps))
        else:
            z = mu
        code = LatentCode("continuous", z=z)
        residual_in = z
    h_out = ops.add(h, ops.relu(ops.matmul(residual_in, ps["policy.wl"])))
    return code, h_out


def embed_code(ps, cfg, code, mode):
    """Speaker input e_z: dictionary mix (soft in training, hard rows in eval)."""
    if code.kind == "continuous":
        return code.z
    if mode.train and code.soft is not None:
        e_z = None
        for n in range(cfg.n_latent):
            part = ops.matmul(code.soft[n], ps[f"spk.dict.{n}"])
            e_z = part if e_z is None else ops.add(e_z, part)
        return e_z
    e_z = None
    for n in range(cfg.n_latent):
        part = ops.gather_rows(ps[f"spk.dict.{n}"], code.indices[:, n])
        e_z = part if e_z is None else ops.add(e_z, part)
    return e_z


def speaker_init(ps, cfg, e_z):
    m = e_z.shape[0]
    h0 = ops.matmul(e_z, ps["spk.in.w"])
    return h0, nets.zeros(m, cfg.hidden)


def speaker_teacher_forced(ps, cfg, e_z, ids, mask):
    """Negative log-likelihood of target tokens (end token included).

    ids/mask: (m, T) content positions from questions_to_arrays; row i scores
    its content tokens plus the end token at position lengths[i]. Returns the
    per-row total NLL (m, 1), differentiable.
    """
    m, t_max = ids.shape
    if t_max > cfg.max_len:
        raise ValueError(f"target length {t_max} exceeds cap {cfg.max_len}")
    lengths = mask.sum(axis=1).astype(int)
    n_steps = int(lengths.max()) + 1  # content plus the end token
    h, c = speaker_init(ps, cfg, e_z)
    x = nets.tile_param_row(ps, "spk.start", m)
    nll = None
    for t in range(n_steps):
        h, c = nets.lstm_step(ps, "spk", x, h, c)
        logp = ops.log_softmax_rows(nets.linear(ps, "spk.out", h))
        target = np.where(t < lengths, ids[:, min(t, t_max - 1)], END)
        active = (t <= lengths).astype(np.float64).reshape(m, 1)
        onehot = np.zeros((m, cfg.vocab))
        onehot[np.arange(m), target] = 1.0
        picked = ops.sum_axis(ops.mul(logp, ops.const(onehot)), axis=1)
        term = ops.mul(picked, ops.const(active))
        nll = term if nll is None else ops.add(nll, term)
        if t + 1 < n_steps:
            x = ops.gather_rows(ps["spk.emb"], target)
    return ops.scale(nll, -1.0)


@dataclass
class Decode:
    ids: np.ndarray          # (m, T-1) content tokens, PAD-filled
    mask: np.ndarray         # (m, T-1) content positions
    total_logp: object       # (m, 1) Tensor: sum of chosen-token log-probs
    step_logps: np.ndarray   # (m, T) per-step chosen log-prob values (0 when inactive)
    ended: np.ndarray        # (m,) row emitted its end token within the cap
    soft_tokens: list = None  # concrete mode: per-step distributions (m, V)


def speaker_free_running(ps, cfg, e_z, mode, concrete=False):
    """Greedy decode up to the length cap; each row stops at its end token.

    concrete=True relaxes token choice with Gumbel-Softmax in training so
    gradients reach the decoder through the soft token distributions.
    """
    m = e_z.shape[0]
    h, c = speaker_init(ps, cfg, e_z)
    x = nets.tile_param_row(ps, "spk.start", m)
    t_steps = cfg.max_len - 1
    ids = np.full((m, t_steps), PAD, dtype=np.int64)
    mask = np.zeros((m, t_steps), dtype=np.float64)
    step_logps = np.zeros((m, t_steps + 1))
    alive = np.ones(m, dtype=bool)
    total_logp = None
    soft_tokens = [] if concrete else None
    for t in range(t_steps):
        h, c = nets.lstm_step(ps, "spk", x, h, c)
        logits = nets.linear(ps, "spk.out", h)
        logp = ops.log_softmax_rows(logits)
        if concrete and mode.train:
            sample = gumbel_softmax(logp, mode.temp(cfg), mode.rng)
            chosen = sample.hard_index
            soft_tokens.append(sample.soft)
            x = ops.matmul(sample.soft, ps["spk.emb"])
        else:
            chosen = logp.data.argmax(axis=1)
            if concrete:
                soft_tokens.append(ops.softmax_rows(logits))
            x = ops.gather_rows(ps["spk.emb"], chosen)
        onehot = np.zeros((m, cfg.vocab))
        onehot[np.arange(m), chosen] = 1.0
        picked = ops.sum_axis(ops.mul(logp, ops.const(onehot)), axis=1)
        step_mask = alive.astype(np.float64).reshape(m, 1)
        term = ops.mul(picked, ops.const(step_mask))
        total_logp = term if total_logp is None else ops.add(total_logp, term)
        step_logps[:, t] = np.where(alive, picked.data[:, 0], 0.0)
        emitted = alive & (chosen != END)
        ids[emitted, t] = chosen[emitted]
        mask[emitted, t] = 1.0
        alive = alive & (chosen != END)
        if not alive.any():
            break
    return Decode(ids=ids, mask=mask, total_logp=total_logp,
                  step_logps=step_logps, ended=~alive, soft_tokens=soft_tokens)


def predictor(ps, cfg, h, facts, pool, mode):
    """Guess distribution over pool images from dialog state and fact history."""
    if pool.m != h.shape[0]:
        raise ValueError("pool batch and state batch differ")
    nf = len(facts)
    qm = nets.wn_mlp(ps, "pred.fq", h)
    stacked = ops.reshape2d(ops.concat_cols(facts), pool.m * nf, cfg.fact_dim)
    km = nets.wn_mlp(ps, "pred.fk", stacked)
    scores = nets.wn_layer(ps, "pred.fs", ops.mul(ops.repeat_rows(qm, nf), km))
    weights = ops.softmax_rows(ops.reshape2d(scores, pool.m, nf))
    e_f = ops.attend_pool(stacked, weights)

    q_y = ops.concat_cols([h, e_f])
    bq = nets.wn_mlp(ps, "pred.bq", q_y)
    bk = nets.wn_mlp(ps, "pred.bk", pool.feats)
    bscore = nets.wn_layer(ps, "pred.bs", ops.mul(ops.repeat_rows(bq, pool.p * pool.b), bk))
    beta = ops.softmax_rows(ops.reshape2d(bscore, pool.m * pool.p, pool.b))
    e_i = ops.attend_pool(pool.feats, beta)          # (m*P, d)

    g1 = nets.wn_mlp(ps, "pred.g1", e_i)             # (m*P, attn)
    g2 = ops.repeat_rows(nets.wn_mlp(ps, "pred.g2", q_y), pool.p)
    hidden = ops.relu(nets.wn_layer(ps, "pred.g3.l1", ops.mul(g2, g1)))
    hidden = ops.dropout(hidden, cfg.dropout, mode.rng, mode.train)
    l_y = nets.wn_layer(ps, "pred.g3.l2", hidden)    # (m*P, 1)
    logits = ops.reshape2d(l_y, pool.m, pool.p)
    return logits, ops.softmax_rows(logits)


def encode_posterior(ps, cfg, pool, e_q):
    """Posterior over the latent code given (pool, question); question is the query."""
    _, _, v_hat = context_attention(ps, pool, e_q)
    h = ops.matmul(v_hat, ps["enc.wz"])
    if cfg.latent == "discrete":
        per_n, full = latent_logits(ps, cfg, h)
        return LatentCode("discrete", logits=full,
                          indices=np.stack([lp.data.argmax(axis=1) for lp in per_n], axis=1),
                          soft=None), per_n
    mu = ops.matmul(h, ps["policy.mu.w"])
    logsig = ops.matmul(h, ps["policy.logsig.w"]) if "policy.logsig.w" in ps else None
    return LatentCode("continuous", z=mu), (mu, logsig)
