"""Encoder hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParameterError


@dataclass(frozen=True)
class EncoderConfig:
    """Sizes and regularization of the toy transformer encoder.

    Defaults are deliberately small: the point of the pipeline is training
    dynamics on desk-scale data, not representation capacity.
    """

    vocab_size: int
    max_len: int = 128
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 256
    dropout_p: float = 0.1
    pooling: str = "mean"

    def __post_init__(self):
        if self.vocab_size < 2:
            raise ParameterError(f"vocab_size must be >= 2 (PAD and UNK), got {self.vocab_size}")
        if self.max_len < 1:
            raise ParameterError(f"max_len must be >= 1, got {self.max_len}")
        if self.d_model < 1 or self.n_heads < 1 or self.n_layers < 1 or self.d_ff < 1:
            raise ParameterError("d_model, n_heads, n_layers, d_ff must all be >= 1")
        if self.d_model % self.n_heads != 0:
            raise ParameterError(
                f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})"
            )
        if not (0.0 <= self.dropout_p < 1.0):
            raise ParameterError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.pooling != "mean":
            raise ParameterError(f"unsupported pooling {self.pooling!r} (only 'mean')")

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads
