"""Question grammar: a small templated language over the attribute world.

Four templates cover color lookup, shape lookup, counting, and existence.
Questions are token-id sequences of length <= MAX_LEN terminated by the end
token; anything that does not exactly match a template is unparseable and
the oracle answers not_relevant.
"""

from dataclasses import dataclass

from .images import COLORS, SHAPES, SIZES

COUNT_WORDS = ("zero", "one", "two", "three", "four")
FUNCTION_WORDS = ("what", "color", "shape", "is", "the", "object",
                  "how", "many", "there", "a", "?")

END_WORD = "<end>"
PAD_WORD = "<pad>"

VOCAB = FUNCTION_WORDS + SHAPES + COLORS + SIZES + COUNT_WORDS + (END_WORD, PAD_WORD)
WORD_TO_ID = {w: i for i, w in enumerate(VOCAB)}
END = WORD_TO_ID[END_WORD]
PAD = WORD_TO_ID[PAD_WORD]
VOCAB_SIZE = len(VOCAB)

MAX_LEN = 8  # including the end token

ATTRIBUTE_WORDS = SHAPES + COLORS + SIZES


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class Question:
    tokens: tuple  # token ids, ending with END
    template_id: int = -1

    def __post_init__(self):
        toks = tuple(int(t) for t in self.tokens)
        object.__setattr__(self, "tokens", toks)
        if not toks or len(toks) > MAX_LEN:
            raise GrammarError(f"question length {len(toks)} out of range")
        if toks[-1] != END or END in toks[:-1]:
            raise GrammarError("question must contain exactly one end token, at the end")
        if any(t < 0 or t >= VOCAB_SIZE for t in toks):
            raise GrammarError("token id outside vocabulary")

    def words(self):
        return [VOCAB[t] for t in self.tokens[:-1]]

    def text(self):
        return " ".join(self.words())


def from_words(words, template_id=-1):
    try:
        ids = [WORD_TO_ID[w] for w in words]
    except KeyError as e:
        raise GrammarError(f"unknown word {e.args[0]!r}") from None
    return Question(tuple(ids) + (END,), template_id)


# template id -> word pattern; slot markers name their domain
TEMPLATES = (
    ("what", "color", "is", "the", "<shape>", "?"),
    ("what", "shape", "is", "the", "<color>", "object", "?"),
    ("how", "many", "<attr>", "?"),
    ("is", "there", "a", "<color>", "<shape>", "?"),
)

_SLOT_DOMAINS = {"<shape>": SHAPES, "<color>": COLORS, "<attr>": ATTRIBUTE_WORDS}


@dataclass(frozen=True)
class ParsedQuestion:
    template_id: int
    slots: dict


def parse(question):
    """Match token ids against the templates; None when nothing matches."""
    words = question.words() if isinstance(question, Question) else [
        VOCAB[t] for t in question if t != END and t != PAD
    ]
    for tid, pattern in enumerate(TEMPLATES):
        if len(words) != len(pattern):
            continue
        slots = {}
        ok = True
        for got, want in zip(words, pattern):
            if want in _SLOT_DOMAINS:
                if got in _SLOT_DOMAINS[want]:
                    slots[want] = got
                else:
                    ok = False
                    break
            elif got != want:
                ok = False
                break
        if ok:
            return ParsedQuestion(tid, slots)
    return None


def generate_question(rng):
    """Uniform template, uniform slot fillers."""
    tid = rng.integer(0, len(TEMPLATES))
    words = []
    u_needed = sum(1 for w in TEMPLATES[tid] if w in _SLOT_DOMAINS)
    u = rng.uniform((max(u_needed, 1),))
    k = 0
    for w in TEMPLATES[tid]:
        if w in _SLOT_DOMAINS:
            domain = _SLOT_DOMAINS[w]
            words.append(domain[int(u[k] * len(domain)) % len(domain)])
            k += 1
        else:
            words.append(w)
    return from_words(words, tid)


def question_from_ids(ids, template_id=-1):
    """Build a Question from raw decoder output: truncate at END, cap length."""
    toks = []
    for t in ids:
        t = int(t)
        if t == END:
            break
        toks.append(t)
    toks = toks[: MAX_LEN - 1]
    return Question(tuple(toks) + (END,), template_id)
