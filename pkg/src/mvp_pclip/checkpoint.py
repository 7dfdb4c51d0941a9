"""Flat binary checkpoint container.

Layout (all integers little-endian)::

    magic      8 bytes   b"MVPCKPT\\0"
    version    u32
    meta_len   u32, then meta_len bytes of UTF-8 JSON (sorted keys)
    seed       i64       backbone seed
    n_arrays   u32
    per array: name_len u16, name bytes, ndim u8, shape u32 * ndim,
               data as <f8 in C order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from .fileio import atomic_write_bytes

MAGIC = b"MVPCKPT\0"
VERSION = 1


class CheckpointError(ValueError):
    pass


def encode_checkpoint(meta: dict, seed: int, arrays: Dict[str, np.ndarray]) -> bytes:
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(meta_bytes)), meta_bytes,
             struct.pack("<qI", int(seed), len(arrays))]
    for name in sorted(arrays):
        arr = np.ascontiguousarray(np.asarray(arrays[name], dtype="<f8"))
        nb = name.encode("utf-8")
        parts.append(struct.pack("<H", len(nb)) + nb)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def decode_checkpoint(data: bytes) -> Tuple[dict, int, Dict[str, np.ndarray]]:
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise CheckpointError(f"truncated checkpoint at byte offset {pos}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    if take(8) != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, meta_len = struct.unpack("<II", take(8))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    meta = json.loads(take(meta_len).decode("utf-8"))
    seed, count = struct.unpack("<qI", take(12))
    arrays = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2))
        name = take(nlen).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        size = int(np.prod(shape)) if ndim else 1
        arrays[name] = np.frombuffer(take(8 * size), dtype="<f8").reshape(shape).copy()
    if pos != len(data):
        raise CheckpointError(f"{len(data) - pos} trailing bytes after checkpoint")
    return meta, seed, arrays


def save_checkpoint(path, model, extra: dict = None) -> None:
    """Persist the config, backbone seed and prompt banks of ``model``."""
    meta = {"config": model.config.to_dict(), "backbone_sha256": model.backbone.digest()}
    if extra:
        meta.update(extra)
    arrays = {name: p.detach().numpy() for name, p in model.named_parameters()}
    atomic_write_bytes(path, encode_checkpoint(meta, model.config.encoder.seed, arrays))


def load_checkpoint(path):
    """Rebuild a detector from a checkpoint; verifies the backbone hash."""
    from .model import MVPCLIP, PipelineConfig

    meta, seed, arrays = decode_checkpoint(Path(path).read_bytes())
    config = PipelineConfig.from_dict(meta["config"])
    if config.encoder.seed != seed:
        raise CheckpointError("backbone seed disagrees with the stored config")
    model = MVPCLIP(config)
    if model.backbone.digest() != meta.get("backbone_sha256"):
        raise CheckpointError("backbone hash mismatch")
    model.load_parameters(arrays)
    return model, meta


__all__ = ["CheckpointError", "atomic_write_bytes", "decode_checkpoint", "encode_checkpoint",
           "load_checkpoint", "save_checkpoint"]
