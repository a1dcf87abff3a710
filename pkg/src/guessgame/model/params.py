"""Parameter construction and the freeze-group layout.

Group prefixes (used by freeze masks and hash checks):
  emb.    question/answer token embeddings and the round-0 placeholders
  ctx.    context-coder attention nets (shared by planner and encoder)
  rnn.    dialog recurrent cell and its extra output gate
  policy. latent heads and the residual map
  spk.    speaker: latent dictionaries, decoder LSTM, output head
  pred.   predictor: fact attention, box attention, score nets
  enc.    posterior-encoder projection
"""

from ..engine import ParamStore

GROUPS = ("emb", "ctx", "rnn", "policy", "spk", "pred", "enc")


def _init(rng, name, shape, scale):
    return rng.split(f"init/{name}").normal(shape) * scale


def _add_linear(ps, rng, name, n_in, n_out, bias=True):
    ps.add(f"{name}.w", _init(rng, f"{name}.w", (n_in, n_out), n_in**-0.5))
    if bias:
        ps.add(f"{name}.b", _init(rng, f"{name}.b", (1, n_out), 0.0))


def _add_wn(ps, rng, name, n_in, n_out):
    """Weight-normalized layer: direction v, per-row magnitude g, bias."""
    v = _init(rng, f"{name}.v", (n_out, n_in), n_in**-0.5)
    ps.add(f"{name}.v", v)
    ps.add(f"{name}.g", ((v**2).sum(axis=1, keepdims=True)) ** 0.5)
    ps.add(f"{name}.b", _init(rng, f"{name}.b", (1, n_out), 0.0))


def _add_wn_mlp(ps, rng, name, n_in, n_hidden, n_out):
    _add_wn(ps, rng, f"{name}.l1", n_in, n_hidden)
    _add_wn(ps, rng, f"{name}.l2", n_hidden, n_out)


def _add_lstm(ps, rng, name, n_in, n_hidden):
    ps.add(f"{name}.wx", _init(rng, f"{name}.wx", (n_in, 4 * n_hidden), n_in**-0.5))
    ps.add(f"{name}.wh", _init(rng, f"{name}.wh", (n_hidden, 4 * n_hidden), n_hidden**-0.5))
    b = _init(rng, f"{name}.b", (1, 4 * n_hidden), 0.0)
    b[0, n_hidden:2 * n_hidden] = 1.0  # forget-gate bias
    ps.add(f"{name}.b", b)


def build_params(cfg, rng):
    ps = ParamStore()
    h, e, a, d = cfg.hidden, cfg.embed, cfg.attn, cfg.feature_dim

    ps.add("emb.q", _init(rng, "emb.q", (cfg.vocab, e), 0.1))
    ps.add("emb.a", _init(rng, "emb.a", (cfg.answers, e), 0.1))
    ps.add("emb.q0", _init(rng, "emb.q0", (1, e), 0.1))
    ps.add("emb.a0", _init(rng, "emb.a0", (1, e), 0.1))

    # context coder: f5 reduces [h_bar, e_q, e_a] to the attention query size
    _add_linear(ps, rng, "ctx.f5", h + 2 * e, e)
    _add_wn_mlp(ps, rng, "ctx.g", e, a, a)
    _add_wn_mlp(ps, rng, "ctx.f1", d, a, a)
    _add_wn(ps, rng, "ctx.f2", a, 1)
    _add_wn_mlp(ps, rng, "ctx.f3", d, a, a)
    _add_wn(ps, rng, "ctx.f4", a, 1)

    _add_lstm(ps, rng, "rnn", d + 2 * e, h)
    ps.add("rnn.w1", _init(rng, "rnn.w1", (d + 2 * e, h), (d + 2 * e)**-0.5))
    ps.add("rnn.w2", _init(rng, "rnn.w2", (h, h), h**-0.5))
    ps.add("rnn.gb", _init(rng, "rnn.gb", (1, h), 0.0))

    if cfg.latent == "discrete":
        for n in range(cfg.n_latent):
            ps.add(f"policy.wz.{n}", _init(rng, f"policy.wz.{n}", (h, cfg.k_latent), h**-0.5))
    else:
        ps.add("policy.mu.w", _init(rng, "policy.mu.w", (h, cfg.z_dim), h**-0.5))
        if cfg.stochastic_continuous:
            ps.add("policy.logsig.w", _init(rng, "policy.logsig.w", (h, cfg.z_dim), 0.01 * h**-0.5))
    ps.add("policy.wl", _init(rng, "policy.wl", (cfg.z_dim, h), cfg.z_dim**-0.5))

    if cfg.latent == "discrete":
        for n in range(cfg.n_latent):
            ps.add(f"spk.dict.{n}", _init(rng, f"spk.dict.{n}", (cfg.k_latent, e), 0.1))
        ps.add("spk.in.w", _init(rng, "spk.in.w", (e, h), e**-0.5))
    else:
        ps.add("spk.in.w", _init(rng, "spk.in.w", (cfg.z_dim, h), cfg.z_dim**-0.5))
    ps.add("spk.start", _init(rng, "spk.start", (1, e), 0.1))
    ps.add("spk.emb", _init(rng, "spk.emb", (cfg.vocab, e), 0.1))
    _add_lstm(ps, rng, "spk", e, h)
    _add_linear(ps, rng, "spk.out", h, cfg.vocab)

    _add_wn_mlp(ps, rng, "pred.fq", h, a, a)
    _add_wn_mlp(ps, rng, "pred.fk", cfg.fact_dim, a, a)
    _add_wn(ps, rng, "pred.fs", a, 1)
    _add_wn_mlp(ps, rng, "pred.bq", h + cfg.fact_dim, a, a)
    _add_wn_mlp(ps, rng, "pred.bk", d, a, a)
    _add_wn(ps, rng, "pred.bs", a, 1)
    _add_wn_mlp(ps, rng, "pred.g1", d, a, a)
    _add_wn_mlp(ps, rng, "pred.g2", h + cfg.fact_dim, a, a)
    _add_wn(ps, rng, "pred.g3.l1", a, a)
    _add_wn(ps, rng, "pred.g3.l2", a, 1)

    if cfg.with_encoder:
        ps.add("enc.wz", _init(rng, "enc.wz", (d, h), d**-0.5))

    return ps
