"""Pool samplers: random pools of P images and contrast pairs for stage-1 supervision."""

from dataclasses import dataclass

import numpy as np

from .grammar import Question, generate_question
from .images import WorldError, WorldImage, generate_image, render_features
from .oracle import NOT_RELEVANT, ask_oracle

POOL_SIZES = (2, 4, 9)
MAX_CONTRAST_ATTEMPTS = 10_000


@dataclass(frozen=True)
class Pool:
    images: tuple
    target_index: int  # 0-based
    sampling: str      # "contrast" | "random"

    def __post_init__(self):
        if self.sampling == "contrast" and len(self.images) != 2:
            raise WorldError("contrast pools have exactly two images")
        if not (0 <= self.target_index < len(self.images)):
            raise WorldError("target index outside pool")

    @property
    def size(self):
        return len(self.images)

    def features(self):
        """P x B x d array of slot features."""
        return np.stack([render_features(img) for img in self.images])


@dataclass(frozen=True)
class Stage1Example:
    pool: Pool
    question: Question
    answers: tuple  # answer word per pool image

    def __post_init__(self):
        a, b = self.answers
        if a == b or NOT_RELEVANT in self.answers:
            raise WorldError("contrast answers must differ and be relevant")

    @property
    def gold_answer(self):
        return self.answers[self.pool.target_index]


def sample_random_pool(p, config, rng, domain_tag=None):
    if p not in POOL_SIZES:
        raise WorldError(f"pool size {p} not in {POOL_SIZES}")
    images = tuple(generate_image(config, rng, domain_tag) for _ in range(p))
    target = rng.integer(0, p)
    return Pool(images, target, "random")


def sample_contrast_pair(config, rng):
    """Rejection-sample (question, image pair) with differing relevant answers."""
    for _ in range(MAX_CONTRAST_ATTEMPTS):
        question = generate_question(rng)
        img_a = generate_image(config, rng)
        img_b = generate_image(config, rng)
        ans_a = ask_oracle(img_a, question)
        ans_b = ask_oracle(img_b, question)
        if ans_a != ans_b and NOT_RELEVANT not in (ans_a, ans_b):
            target = rng.integer(0, 2)
            pool = Pool((img_a, img_b), target, "contrast")
            return Stage1Example(pool, question, (ans_a, ans_b))
    raise WorldError(
        f"no contrast pair found in {MAX_CONTRAST_ATTEMPTS} attempts; degenerate world config"
    )
