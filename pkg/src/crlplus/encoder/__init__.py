"""Transformer encoder, classifier head, and checkpoint serialization."""

from .checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    load_model,
    params_hash,
    save_checkpoint,
    save_model,
)
from .config import EncoderConfig
from .model import (
    PAD_BIAS,
    EncoderModel,
    augment_views,
    classify,
    encode,
    freeze_encoder,
    init_encoder,
    init_head,
)

__all__ = [
    "FORMAT_VERSION",
    "MAGIC",
    "decode_checkpoint",
    "encode_checkpoint",
    "load_checkpoint",
    "load_model",
    "params_hash",
    "save_checkpoint",
    "save_model",
    "EncoderConfig",
    "PAD_BIAS",
    "EncoderModel",
    "augment_views",
    "classify",
    "encode",
    "freeze_encoder",
    "init_encoder",
    "init_head",
]
