"""Toy transformer encoder and the linear classification head.

The encoder is a standard post-layernorm transformer: token plus learned
positional embeddings, then per layer multi-head self-attention with an
additive padding bias, residual, layernorm, GELU feed-forward, residual,
layernorm. Dropout runs after the attention output and after the
feed-forward output, and only when the caller supplies an RNG; the same
forward pass without an RNG is the deterministic encoder used for
evaluation and for the frozen-encoder phase. Pooling is the mean over
non-pad positions, which keeps the output invariant to trailing padding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..corpus import TokenizedBatch
from ..errors import ParameterError, ShapeError
from ..numerics import (
    ParamSet,
    SeededRng,
    Tensor,
    concat,
    dropout,
    gather,
    gelu,
    layernorm,
    matmul,
    softmax,
    tsum,
)
from .config import EncoderConfig

# Additive attention bias at padded key positions; large enough that the
# post-softmax weight underflows to exactly 0 in f32, which is what makes
# padding invariance exact rather than approximate.
PAD_BIAS = -1e9

_INIT_STD = 0.02


@dataclass
class EncoderModel:
    config: EncoderConfig
    params: ParamSet


def init_encoder(config: EncoderConfig, rng: SeededRng) -> EncoderModel:
    """Fresh encoder; weights normal(0, 0.02), biases zero, layernorm scale one.

    Draws happen in a fixed parameter order from a single stream, so one
    (seed, stream) pair pins every weight.
    """
    gen = rng.generator()
    params = ParamSet()

    def w(name: str, shape: Tuple[int, ...]) -> None:
        params.add(name, Tensor(gen.normal(0.0, _INIT_STD, size=shape).astype(np.float32)))

    def zeros(name: str, shape: Tuple[int, ...]) -> None:
        params.add(name, Tensor(np.zeros(shape, dtype=np.float32)))

    def ones(name: str, shape: Tuple[int, ...]) -> None:
        params.add(name, Tensor(np.ones(shape, dtype=np.float32)))

    d, ff = config.d_model, config.d_ff
    w("encoder.tok_emb", (config.vocab_size, d))
    w("encoder.pos_emb", (config.max_len, d))
    for i in range(config.n_layers):
        base = f"encoder.layers.{i}"
        for part in ("wq", "wk", "wv", "wo"):
            w(f"{base}.attn.{part}", (d, d))
        for part in ("bq", "bk", "bv", "bo"):
            zeros(f"{base}.attn.{part}", (d,))
        ones(f"{base}.ln1.scale", (d,))
        zeros(f"{base}.ln1.shift", (d,))
        w(f"{base}.ffn.w1", (d, ff))
        zeros(f"{base}.ffn.b1", (ff,))
        w(f"{base}.ffn.w2", (ff, d))
        zeros(f"{base}.ffn.b2", (d,))
        ones(f"{base}.ln2.scale", (d,))
        zeros(f"{base}.ln2.shift", (d,))
    return EncoderModel(config=config, params=params)


def init_head(config: EncoderConfig, n_classes: int, rng: SeededRng) -> ParamSet:
    """Linear head mapping pooled embeddings to class logits."""
    if n_classes < 2:
        raise ParameterError(f"n_classes must be >= 2, got {n_classes}")
    gen = rng.generator()
    params = ParamSet()
    params.add(
        "head.weight",
        Tensor(gen.normal(0.0, _INIT_STD, size=(config.d_model, n_classes)).astype(np.float32)),
    )
    params.add("head.bias", Tensor(np.zeros((n_classes,), dtype=np.float32)))
    return params


def _trim(batch: TokenizedBatch) -> Tuple[np.ndarray, np.ndarray]:
    """Drop trailing all-pad columns; exact thanks to the additive pad bias."""
    width = int(batch.mask.sum(axis=1).max())
    return batch.ids[:, :width], batch.mask[:, :width]


def encode(
    model: EncoderModel,
    batch: TokenizedBatch,
    rng: SeededRng = None,
    params: ParamSet = None,
) -> Tensor:
    """Pooled representations, one row per document.

    Passing ``rng`` turns on dropout (the stochastic mode that generates
    augmented views); omitting it gives the deterministic encoder. ``params``
    overrides the model's own set so that gradient evaluation can rebuild
    the graph against candidate parameters; names and shapes must match.
    """
    cfg = model.config
    p = cfg.dropout_p if rng is not None else 0.0
    ps = model.params if params is None else params

    if len(batch) == 0:
        raise ShapeError("cannot encode an empty batch")
    if batch.ids.max(initial=0) >= cfg.vocab_size:
        raise ShapeError(
            f"token id {int(batch.ids.max())} out of range for vocab_size {cfg.vocab_size}"
        )
    ids, mask = _trim(batch)
    n_rows, width = ids.shape
    if width > cfg.max_len:
        raise ShapeError(f"sequence width {width} exceeds max_len {cfg.max_len}")

    pos = gather(ps["encoder.pos_emb"], np.arange(width, dtype=np.int64))
    x = gather(ps["encoder.tok_emb"], ids) + pos

    # [n_rows, 1, 1, width] bias added to attention scores at padded keys
    key_bias = ((1.0 - mask) * PAD_BIAS)[:, None, None, :].astype(np.float32)
    scale = 1.0 / np.sqrt(np.float32(cfg.d_head))

    for i in range(cfg.n_layers):
        base = f"encoder.layers.{i}"

        def _heads(t: Tensor) -> Tensor:
            return t.reshape((n_rows, width, cfg.n_heads, cfg.d_head)).transpose((0, 2, 1, 3))

        q = _heads(matmul(x, ps[f"{base}.attn.wq"]) + ps[f"{base}.attn.bq"])
        k = _heads(matmul(x, ps[f"{base}.attn.wk"]) + ps[f"{base}.attn.bk"])
        v = _heads(matmul(x, ps[f"{base}.attn.wv"]) + ps[f"{base}.attn.bv"])
        scores = matmul(q, k.transpose((0, 1, 3, 2))) * scale + key_bias
        attn = matmul(softmax(scores, axis=-1), v)
        attn = attn.transpose((0, 2, 1, 3)).reshape((n_rows, width, cfg.d_model))
        attn = matmul(attn, ps[f"{base}.attn.wo"]) + ps[f"{base}.attn.bo"]
        if p > 0.0:
            attn, _ = dropout(attn, p, rng.derive(i, 0))
        x = layernorm(x + attn, ps[f"{base}.ln1.scale"], ps[f"{base}.ln1.shift"])

        h = gelu(matmul(x, ps[f"{base}.ffn.w1"]) + ps[f"{base}.ffn.b1"])
        h = matmul(h, ps[f"{base}.ffn.w2"]) + ps[f"{base}.ffn.b2"]
        if p > 0.0:
            h, _ = dropout(h, p, rng.derive(i, 1))
        x = layernorm(x + h, ps[f"{base}.ln2.scale"], ps[f"{base}.ln2.shift"])

    weights = mask[:, :, None].astype(np.float32)
    counts = mask.sum(axis=1, keepdims=True).astype(np.float32)
    return tsum(x * weights, axis=1) / counts


def augment_views(
    model: EncoderModel,
    batch: TokenizedBatch,
    n_views: int,
    rng: SeededRng,
    params: ParamSet = None,
) -> Tuple[Tensor, np.ndarray]:
    """Stack ``n_views`` independent dropout encodings of the same batch.

    View-major layout: row v*B + i is view v of document i, and the returned
    index map sends each row to its source document. Rows sharing a source
    are positives by construction.
    """
    if n_views < 2:
        raise ParameterError(f"n_views must be >= 2, got {n_views}")
    views: List[Tensor] = [
        encode(model, batch, rng=rng.derive(v), params=params) for v in range(n_views)
    ]
    stacked = concat(views, axis=0)
    index_map = np.tile(np.arange(len(batch), dtype=np.int64), n_views)
    return stacked, index_map


def classify(head: ParamSet, embeddings: Tensor) -> Tensor:
    """Affine map from pooled embeddings to class logits."""
    return matmul(embeddings, head["head.weight"]) + head["head.bias"]


def freeze_encoder(model: EncoderModel) -> EncoderModel:
    """Flag every encoder entry frozen; there is no unfreeze, rebuild instead."""
    model.params.freeze_prefix("encoder.")
    return model
