"""Binary checkpoint format for parameter sets.

Layout, all integers little-endian: magic ``CRLP``, format version u32,
entry count u32, then per entry a u16 name length, the UTF-8 name, a u8
rank, u32 dims, and the f32 payload in row-major order. Entries appear in
parameter insertion order, so the same parameters always serialize to the
same bytes on every platform; equality of files is equality of models.

Model save/load adds scalar ``meta.*`` entries (shape [1]) carrying the two
hyperparameters that cannot be recovered from weight shapes, which makes a
checkpoint self-describing.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import CheckpointFormatError
from ..numerics import ParamSet, Tensor
from .config import EncoderConfig
from .model import EncoderModel

MAGIC = b"CRLP"
FORMAT_VERSION = 1

_META_PREFIX = "meta."


def encode_checkpoint(params: ParamSet) -> bytes:
    out = [MAGIC, struct.pack("<I", FORMAT_VERSION), struct.pack("<I", len(params))]
    for name, tensor in params.items():
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise CheckpointFormatError(f"parameter name too long: {name[:40]}...")
        data = np.ascontiguousarray(tensor.data, dtype=np.float32)
        if data.ndim > 0xFF:
            raise CheckpointFormatError(f"parameter {name} has too many dimensions")
        out.append(struct.pack("<H", len(raw)))
        out.append(raw)
        out.append(struct.pack("<B", data.ndim))
        out.append(struct.pack(f"<{data.ndim}I", *data.shape))
        out.append(data.astype("<f4").tobytes())
    return b"".join(out)


def decode_checkpoint(blob: bytes) -> List[Tuple[str, np.ndarray]]:
    """Parse checkpoint bytes; raises CheckpointFormatError on any defect."""
    view = memoryview(blob)
    if len(view) < 12 or bytes(view[:4]) != MAGIC:
        raise CheckpointFormatError("not a CRLP checkpoint (bad magic)")
    (version,) = struct.unpack("<I", view[4:8])
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    (count,) = struct.unpack("<I", view[8:12])
    offset = 12
    entries: List[Tuple[str, np.ndarray]] = []
    seen = set()
    for _ in range(count):
        try:
            (name_len,) = struct.unpack_from("<H", view, offset)
            offset += 2
            name = bytes(view[offset : offset + name_len]).decode("utf-8")
            if len(view[offset : offset + name_len]) != name_len:
                raise struct.error("truncated name")
            offset += name_len
            (ndim,) = struct.unpack_from("<B", view, offset)
            offset += 1
            dims = struct.unpack_from(f"<{ndim}I", view, offset)
            offset += 4 * ndim
            n_values = int(np.prod(dims, dtype=np.int64)) if ndim else 1
            payload = view[offset : offset + 4 * n_values]
            if len(payload) != 4 * n_values:
                raise struct.error("truncated payload")
            offset += 4 * n_values
        except (struct.error, UnicodeDecodeError) as exc:
            raise CheckpointFormatError(f"truncated or corrupt checkpoint: {exc}") from None
        if name in seen:
            raise CheckpointFormatError(f"duplicate checkpoint entry {name!r}")
        seen.add(name)
        array = np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)
        entries.append((name, array))
    if offset != len(view):
        raise CheckpointFormatError(f"{len(view) - offset} trailing bytes after last entry")
    return entries


def save_checkpoint(params: ParamSet, path) -> None:
    Path(path).write_bytes(encode_checkpoint(params))


def load_checkpoint(path) -> List[Tuple[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise CheckpointFormatError(f"checkpoint file not found: {path}")
    return decode_checkpoint(path.read_bytes())


def params_hash(params: ParamSet) -> str:
    """SHA-256 of the serialized bytes; equal hash means bit-equal weights."""
    return hashlib.sha256(encode_checkpoint(params)).hexdigest()


def save_model(model: EncoderModel, path, head: Optional[ParamSet] = None) -> None:
    combined = ParamSet()
    for name, tensor in model.params.items():
        combined.add(name, tensor)
    if head is not None:
        for name, tensor in head.items():
            combined.add(name, tensor)
    combined.add(
        f"{_META_PREFIX}n_heads",
        Tensor(np.array([model.config.n_heads], dtype=np.float32)),
    )
    combined.add(
        f"{_META_PREFIX}dropout_p",
        Tensor(np.array([model.config.dropout_p], dtype=np.float32)),
    )
    save_checkpoint(combined, path)


def load_model(path) -> Tuple[EncoderModel, Optional[ParamSet]]:
    """Rebuild a model (and head, if present) from a checkpoint file."""
    entries = load_checkpoint(path)
    table: Dict[str, np.ndarray] = dict(entries)

    for required in ("encoder.tok_emb", "encoder.pos_emb", f"{_META_PREFIX}n_heads",
                     f"{_META_PREFIX}dropout_p"):
        if required not in table:
            raise CheckpointFormatError(f"checkpoint missing entry {required!r}")

    n_layers = 0
    while f"encoder.layers.{n_layers}.attn.wq" in table:
        n_layers += 1
    if n_layers == 0:
        raise CheckpointFormatError("checkpoint holds no encoder layers")

    tok_emb = table["encoder.tok_emb"]
    config = EncoderConfig(
        vocab_size=tok_emb.shape[0],
        max_len=table["encoder.pos_emb"].shape[0],
        d_model=tok_emb.shape[1],
        n_heads=int(round(float(table[f"{_META_PREFIX}n_heads"][0]))),
        n_layers=n_layers,
        d_ff=table["encoder.layers.0.ffn.w1"].shape[1],
        dropout_p=float(table[f"{_META_PREFIX}dropout_p"][0]),
    )

    params = ParamSet()
    head = ParamSet()
    for name, array in entries:
        if name.startswith(_META_PREFIX):
            continue
        target = head if name.startswith("head.") else params
        target.add(name, Tensor(array.copy()))
    model = EncoderModel(config=config, params=params)
    return model, (head if len(head) else None)
