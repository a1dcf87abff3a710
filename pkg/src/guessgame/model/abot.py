"""Answerer: delegates to the deterministic oracle on the target image.

Relevance is an indicator per pool image (the oracle either answers or says
not_relevant); the per-question pool relevance used by the metrics is the max
over images.
"""

from ..world import NOT_RELEVANT, ask_oracle


def abot_answer(pool, question):
    """(answer word for the target image, relevance indicator per pool image)."""
    answers = [ask_oracle(img, question) for img in pool.images]
    indicators = [0 if a == NOT_RELEVANT else 1 for a in answers]
    return answers[pool.target_index], indicators
