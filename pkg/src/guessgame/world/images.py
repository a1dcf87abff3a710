"""Synthetic attribute-slot images.

An image is B=4 object slots, each either absent or carrying (shape, color,
size) attributes. Slot features are one-hot blocks plus a presence bit, ten
numbers per slot. Domain tags select attribute marginals; the shifted tags
skew them to emulate out-of-domain pools.
"""

from dataclasses import dataclass, field

import numpy as np

SHAPES = ("circle", "square", "triangle")
COLORS = ("red", "green", "blue", "yellow")
SIZES = ("small", "large")
DOMAIN_TAGS = ("base", "shifted_a", "shifted_b")

FEATURE_DIM = 10  # 3 shape + 4 color + 2 size + presence


class WorldError(RuntimeError):
    pass


@dataclass(frozen=True)
class Slot:
    present: bool
    shape: str = SHAPES[0]
    color: str = COLORS[0]
    size: str = SIZES[0]

    def canonical(self):
        # absent slots carry no attribute semantics
        return self if self.present else Slot(False)


@dataclass(frozen=True)
class WorldImage:
    slots: tuple
    domain_tag: str = "base"

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(s.canonical() for s in self.slots))
        if not any(s.present for s in self.slots):
            raise WorldError("image must have at least one present slot")

    def present_slots(self):
        return [s for s in self.slots if s.present]


def _uniform(values):
    return {v: 1.0 / len(values) for v in values}


def _marginals(tag):
    if tag == "base":
        return _uniform(SHAPES), _uniform(COLORS), _uniform(SIZES)
    if tag == "shifted_a":
        # triangle-heavy shape marginal
        return ({"circle": 0.15, "square": 0.15, "triangle": 0.70},
                _uniform(COLORS), _uniform(SIZES))
    if tag == "shifted_b":
        # red-heavy colors plus a size skew
        return (_uniform(SHAPES),
                {"red": 0.70, "green": 0.10, "blue": 0.10, "yellow": 0.10},
                {"small": 0.20, "large": 0.80})
    raise WorldError(f"unknown domain tag {tag!r}")


@dataclass
class WorldConfig:
    b_slots: int = 4
    p_present: float = 0.8
    domain_tag: str = "base"
    force_all_present: bool = False
    extra: dict = field(default_factory=dict)

    def marginals(self, tag=None):
        return _marginals(tag or self.domain_tag)


def marginal_l1(tag_a, tag_b):
    """Sum of L1 distances between the per-attribute marginals of two tags."""
    total = 0.0
    for da, db in zip(_marginals(tag_a), _marginals(tag_b)):
        total += sum(abs(da[k] - db[k]) for k in da)
    return total


def _pick(dist, u):
    acc = 0.0
    for value, p in dist.items():
        acc += p
        if u < acc:
            return value
    return value  # u==1.0 edge


def generate_image(config, rng, domain_tag=None):
    """Slots drawn i.i.d. from the tag's marginals; at least one slot present."""
    tag = domain_tag or config.domain_tag
    shape_m, color_m, size_m = _marginals(tag)
    u = rng.uniform((config.b_slots, 4))
    slots = []
    for b in range(config.b_slots):
        present = config.force_all_present or (u[b, 0] < config.p_present)
        slots.append(Slot(present, _pick(shape_m, u[b, 1]),
                          _pick(color_m, u[b, 2]), _pick(size_m, u[b, 3])))
    if not any(s.present for s in slots):
        s0 = slots[0]
        slots[0] = Slot(True, s0.shape, s0.color, s0.size)
    return WorldImage(tuple(slots), tag)


def render_features(image):
    """B x 10 feature matrix; absent slots are all-zero rows."""
    feats = np.zeros((len(image.slots), FEATURE_DIM))
    for b, slot in enumerate(image.slots):
        if not slot.present:
            continue
        feats[b, SHAPES.index(slot.shape)] = 1.0
        feats[b, 3 + COLORS.index(slot.color)] = 1.0
        feats[b, 7 + SIZES.index(slot.size)] = 1.0
        feats[b, 9] = 1.0
    return feats


def describe_image(image):
    """Human-readable slot listing for the terminal UI."""
    parts = []
    for slot in image.slots:
        if slot.present:
            parts.append(f"{slot.size} {slot.color} {slot.shape}")
    return ", ".join(parts)
