"""Model hyperparameters and forward-pass mode."""

from dataclasses import dataclass

from ..world import ANSWER_SIZE, FEATURE_DIM, MAX_LEN, VOCAB_SIZE


@dataclass
class ModelConfig:
    hidden: int = 64
    embed: int = 32
    attn: int = 64
    n_latent: int = 8
    k_latent: int = 4
    latent: str = "discrete"  # "discrete" | "continuous"
    with_encoder: bool = True  # ELBO pre-training needs the posterior encoder
    stochastic_continuous: bool = True  # continuous+ELBO samples z; MLE uses the mean
    dropout: float = 0.1
    temperature: float = 1.0
    feature_dim: int = FEATURE_DIM
    vocab: int = VOCAB_SIZE
    answers: int = ANSWER_SIZE
    max_len: int = MAX_LEN

    @property
    def z_dim(self):
        # continuous latents match the discrete logit budget
        return self.n_latent * self.k_latent

    @property
    def fact_dim(self):
        return 2 * self.embed

    def to_dict(self):
        return {
            "hidden": self.hidden, "embed": self.embed, "attn": self.attn,
            "n_latent": self.n_latent, "k_latent": self.k_latent,
            "latent": self.latent, "with_encoder": self.with_encoder,
            "stochastic_continuous": self.stochastic_continuous,
            "dropout": self.dropout, "temperature": self.temperature,
        }

    @classmethod
    def from_dict(cls, d):
        cfg = cls()
        for k, v in d.items():
            if hasattr(cfg, k):
                setattr(cfg, k, v)
        return cfg


@dataclass
class Mode:
    train: bool = False
    rng: object = None
    temperature: float = None

    def temp(self, cfg):
        return self.temperature if self.temperature is not None else cfg.temperature


EVAL = Mode(train=False)
