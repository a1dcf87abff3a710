"""Stage-1 dataset files: length-prefixed binary records plus a text question corpus."""

import struct
from pathlib import Path

from .grammar import Question
from .images import COLORS, DOMAIN_TAGS, SHAPES, SIZES, Slot, WorldImage
from .pools import Pool, Stage1Example, sample_contrast_pair

MAGIC = b"DWDD"
VERSION = 1


class DatasetError(RuntimeError):
    pass


def _encode_image(img):
    out = bytearray()
    out.append(DOMAIN_TAGS.index(img.domain_tag))
    out.append(len(img.slots))
    for s in img.slots:
        out += bytes([1 if s.present else 0, SHAPES.index(s.shape),
                      COLORS.index(s.color), SIZES.index(s.size)])
    return bytes(out)


def _decode_image(buf, off):
    tag = DOMAIN_TAGS[buf[off]]
    nslots = buf[off + 1]
    off += 2
    slots = []
    for _ in range(nslots):
        present, sh, co, si = buf[off:off + 4]
        off += 4
        slots.append(Slot(bool(present), SHAPES[sh], COLORS[co], SIZES[si]))
    return WorldImage(tuple(slots), tag), off


def _encode_example(ex):
    out = bytearray()
    for img in ex.pool.images:
        out += _encode_image(img)
    out.append(ex.pool.target_index)
    out.append(len(ex.question.tokens))
    out += bytes(ex.question.tokens)
    from .oracle import ANSWER_TO_ID
    out += bytes(ANSWER_TO_ID[a] for a in ex.answers)
    return bytes(out)


def _decode_example(buf):
    from .oracle import ANSWER_VOCAB
    img_a, off = _decode_image(buf, 0)
    img_b, off = _decode_image(buf, off)
    target = buf[off]
    ntok = buf[off + 1]
    off += 2
    tokens = tuple(buf[off:off + ntok])
    off += ntok
    answers = (ANSWER_VOCAB[buf[off]], ANSWER_VOCAB[buf[off + 1]])
    pool = Pool((img_a, img_b), target, "contrast")
    return Stage1Example(pool, Question(tokens), answers)


def save_examples(path, examples):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(examples)))
        for ex in examples:
            payload = _encode_example(ex)
            f.write(struct.pack("<I", len(payload)))
            f.write(payload)


def load_examples(path):
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise DatasetError("bad magic; not a stage-1 dataset file")
    version, count = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise DatasetError(f"unsupported dataset version {version}")
    off = 12
    out = []
    for _ in range(count):
        (n,) = struct.unpack_from("<I", buf, off)
        off += 4
        out.append(_decode_example(buf[off:off + n]))
        off += n
    return out


def write_corpus(path, questions):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for q in questions:
            f.write(q.text() + "\n")


def read_corpus(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [line.split() for line in lines if line.strip()]


def build_stage1_dataset(n, config, rng, out_dir, prefix="train"):
    """Generate n contrast examples; write the record file and the question corpus."""
    if n < 1:
        raise DatasetError("need at least one example")
    examples = [sample_contrast_pair(config, rng) for _ in range(n)]
    out_dir = Path(out_dir)
    data_path = out_dir / f"{prefix}.dwdd"
    corpus_path = out_dir / f"{prefix}_corpus.txt"
    save_examples(data_path, examples)
    write_corpus(corpus_path, [ex.question for ex in examples])
    return data_path, corpus_path
