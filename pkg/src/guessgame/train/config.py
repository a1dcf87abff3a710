"""Training configuration: stages, variants, and their freeze sets."""

from dataclasses import dataclass, field

from ..model.config import ModelConfig

STAGES = ("stage1", "stage2a", "stage2b", "stage2")
VARIANTS = ("ours_discrete_elbo", "continuous_elbo", "continuous_mle",
            "typical_transfer", "parallel_speaker", "finetuned_speaker")

DEFAULT_EPOCHS = {"stage1": 15, "stage2a": 20, "stage2b": 5, "stage2": 25}


class TrainError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    stage: str = "stage1"
    variant: str = "ours_discrete_elbo"
    epochs: int = None
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch: int = 32
    clip: float = 5.0
    dropout: float = 0.1
    temperature: float = 1.0
    temp_anneal: str = "none"  # none | linear
    temp_final: float = 0.5
    seed: int = 0
    # stage-2 game sampling
    rounds: int = 5
    pool_size: int = 2
    pool_sampling: str = "random"
    games_per_epoch: int = 1024
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.stage not in STAGES:
            raise TrainError(f"unknown stage {self.stage!r}")
        if self.variant not in VARIANTS:
            raise TrainError(f"unknown variant {self.variant!r}")
        if self.epochs is None:
            self.epochs = DEFAULT_EPOCHS[self.stage]

    def temp_at(self, epoch):
        if self.temp_anneal == "linear" and self.epochs > 1:
            frac = epoch / (self.epochs - 1)
            return self.temperature + frac * (self.temp_final - self.temperature)
        return self.temperature

    def model_config(self):
        if self.variant in ("ours_discrete_elbo", "parallel_speaker", "finetuned_speaker"):
            mc = ModelConfig(latent="discrete", with_encoder=True)
        elif self.variant == "continuous_elbo":
            mc = ModelConfig(latent="continuous", with_encoder=True,
                             stochastic_continuous=True)
        else:  # continuous_mle, typical_transfer
            mc = ModelConfig(latent="continuous", with_encoder=False,
                             stochastic_continuous=False)
        mc.dropout = self.dropout
        mc.temperature = self.temperature
        return mc

    def freeze_groups(self):
        if self.stage == "stage1":
            return set()
        if self.stage == "stage2a":
            return {"ctx", "policy", "spk", "enc"}
        # stage2b and joint stage2
        if self.variant in ("typical_transfer", "finetuned_speaker"):
            return set()
        return {"spk"}

    def speaker_is_fixed(self):
        return self.variant not in ("typical_transfer", "finetuned_speaker")

    def concrete_speaker(self):
        """Variants that fine-tune the speaker relax token choices in stage 2."""
        return self.stage in ("stage2", "stage2b", "stage2a") and not self.speaker_is_fixed()

    def to_dict(self):
        d = {k: getattr(self, k) for k in (
            "stage", "variant", "epochs", "lr", "beta1", "beta2", "eps", "batch",
            "clip", "dropout", "temperature", "temp_anneal", "temp_final", "seed",
            "rounds", "pool_size", "pool_sampling", "games_per_epoch")}
        return d

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)
