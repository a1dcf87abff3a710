"""Flat binary parameter checkpoints and trainer checkpoint bundles.

Parameter blob layout (little-endian):
  magic "DWD1" | u32 version | u32 count |
  per parameter: u16 name length | UTF-8 name | u8 rank | u32 dims... |
                 raw float64 data
Round-trips are bit-exact. A trainer checkpoint is the blob in
``<stem>.params`` plus a canonical-JSON sidecar ``<stem>.json`` holding the
config snapshot, stage/variant tags, epoch, and a metric snapshot.
"""

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"DWD1"
VERSION = 1


class CheckpointError(RuntimeError):
    pass


def params_to_bytes(store):
    chunks = [MAGIC, struct.pack("<II", VERSION, len(store.params))]
    for name, t in store.params.items():
        raw = name.encode("utf-8")
        arr = np.ascontiguousarray(t.data, dtype="<f8")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    return b"".join(chunks)


def params_from_bytes(blob):
    if blob[:4] != MAGIC:
        raise CheckpointError("bad magic; not a parameter checkpoint")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    off = 12
    out = []
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", blob, off)
        off += 2
        name = blob[off:off + nlen].decode("utf-8")
        off += nlen
        (rank,) = struct.unpack_from("<B", blob, off)
        off += 1
        dims = struct.unpack_from(f"<{rank}I", blob, off)
        off += 4 * rank
        n = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(blob, dtype="<f8", count=n, offset=off).reshape(dims).copy()
        off += 8 * n
        out.append((name, arr))
    if off != len(blob):
        raise CheckpointError("trailing bytes after last parameter record")
    return out


def load_params_into(store, blob):
    loaded = dict(params_from_bytes(blob))
    if set(loaded) != set(store.params):
        missing = set(store.params) - set(loaded)
        extra = set(loaded) - set(store.params)
        raise CheckpointError(f"parameter name mismatch: missing={sorted(missing)} extra={sorted(extra)}")
    for name, arr in loaded.items():
        t = store.params[name]
        if t.data.shape != arr.shape:
            raise CheckpointError(f"shape mismatch for {name}: {t.data.shape} vs {arr.shape}")
        t.data[...] = arr


def _canonical_json(meta):
    return json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n"


def save_checkpoint(path_stem, store, meta):
    """Write <stem>.params (DWD1 blob) and <stem>.json (canonical meta)."""
    stem = Path(path_stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    stem.with_suffix(".params").write_bytes(params_to_bytes(store))
    stem.with_suffix(".json").write_text(_canonical_json(meta), encoding="utf-8")
    return stem


def load_checkpoint(path_stem):
    stem = Path(path_stem)
    blob = stem.with_suffix(".params").read_bytes()
    meta = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
    return params_from_bytes(blob), meta


def checkpoint_meta(path_stem):
    return json.loads(Path(path_stem).with_suffix(".json").read_text(encoding="utf-8"))
