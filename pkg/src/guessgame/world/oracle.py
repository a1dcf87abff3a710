"""Deterministic rule-based answerer over attribute images."""

from .grammar import ParsedQuestion, parse
from .images import COLORS, SHAPES, SIZES

NOT_RELEVANT = "not_relevant"
COUNTS = ("zero", "one", "two", "three", "four")

ANSWER_VOCAB = COLORS + SHAPES + COUNTS + ("yes", "no", NOT_RELEVANT)
ANSWER_TO_ID = {w: i for i, w in enumerate(ANSWER_VOCAB)}
ANSWER_SIZE = len(ANSWER_VOCAB)
NOT_RELEVANT_ID = ANSWER_TO_ID[NOT_RELEVANT]


def _attr_domain(word):
    if word in SHAPES:
        return "shape"
    if word in COLORS:
        return "color"
    if word in SIZES:
        return "size"
    raise ValueError(f"{word!r} is not an attribute word")


def ask_oracle(image, question):
    """Answer word for a question about an image; not_relevant is the total fallback.

    Ambiguity rule: attribute lookups answer for the lowest-index present
    matching slot, which keeps the oracle a pure function.
    """
    parsed = question if isinstance(question, ParsedQuestion) else parse(question)
    if parsed is None:
        return NOT_RELEVANT
    slots = image.present_slots()
    if parsed.template_id == 0:  # what color is the <shape> ?
        for s in slots:
            if s.shape == parsed.slots["<shape>"]:
                return s.color
        return NOT_RELEVANT
    if parsed.template_id == 1:  # what shape is the <color> object ?
        for s in slots:
            if s.color == parsed.slots["<color>"]:
                return s.shape
        return NOT_RELEVANT
    if parsed.template_id == 2:  # how many <attr> ?
        word = parsed.slots["<attr>"]
        domain = _attr_domain(word)
        n = sum(1 for s in slots if getattr(s, domain) == word)
        return COUNTS[n]
    if parsed.template_id == 3:  # is there a <color> <shape> ?
        want_c, want_s = parsed.slots["<color>"], parsed.slots["<shape>"]
        hit = any(s.color == want_c and s.shape == want_s for s in slots)
        return "yes" if hit else "no"
    return NOT_RELEVANT


def ask_oracle_id(image, question):
    return ANSWER_TO_ID[ask_oracle(image, question)]
