"""Whitespace tokenizer with a frequency-thresholded vocabulary.

Normalization is lowercase, punctuation replaced by spaces, then a plain
whitespace split. The vocabulary reserves index 0 for padding and index 1
for out-of-vocabulary tokens; indices 2.. follow token frequency (ties
broken alphabetically) so a vocabulary built from the same corpus is
identical across platforms.
"""

from __future__ import annotations

import string
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..errors import DataError
from .documents import Document, LabelSet

PAD_INDEX = 0
UNK_INDEX = 1

_PUNCT_TABLE = str.maketrans({ch: " " for ch in string.punctuation})


def normalize(text: str) -> List[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return text.lower().translate(_PUNCT_TABLE).split()


class Vocabulary:
    """Token-to-index map; build from training texts only, then freeze."""

    def __init__(self, token_to_index: Dict[str, int]):
        self._t2i = dict(token_to_index)
        self._size = 2 + len(self._t2i)

    @classmethod
    def build(cls, texts: Iterable[str], min_freq: int = 2) -> "Vocabulary":
        if min_freq < 1:
            raise DataError(f"min_freq must be >= 1, got {min_freq}")
        counts: Counter = Counter()
        for text in texts:
            counts.update(normalize(text))
        kept = [(tok, n) for tok, n in counts.items() if n >= min_freq]
        # frequency desc, then token asc: deterministic regardless of insertion order
        kept.sort(key=lambda item: (-item[1], item[0]))
        return cls({tok: i + 2 for i, (tok, _) in enumerate(kept)})

    def __len__(self) -> int:
        return self._size

    def __contains__(self, token: str) -> bool:
        return token in self._t2i

    def index(self, token: str) -> int:
        return self._t2i.get(token, UNK_INDEX)

    def encode(self, text: str) -> List[int]:
        return [self.index(tok) for tok in normalize(text)]

    def tokens(self) -> List[str]:
        """Known tokens in index order (indices 2..len-1)."""
        return [tok for tok, _ in sorted(self._t2i.items(), key=lambda kv: kv[1])]

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Vocabulary":
        return cls({tok: i + 2 for i, tok in enumerate(tokens)})


def save_vocabulary(vocab: Vocabulary, path) -> None:
    """One token per line, in index order; indices 0 and 1 are implicit."""
    Path(path).write_text("\n".join(vocab.tokens()) + "\n", encoding="utf-8")


def load_vocabulary(path) -> Vocabulary:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read vocabulary file {path}: {exc}") from exc
    tokens = [line for line in lines if line]
    if len(set(tokens)) != len(tokens):
        raise DataError(f"duplicate tokens in vocabulary file {path}")
    return Vocabulary.from_tokens(tokens)


class TokenizedBatch:
    """Fixed-width id matrix with a padding mask and optional labels.

    ``ids`` is [B, max_len] int64, ``mask`` is [B, max_len] float32 with 1.0
    at real tokens and 0.0 at padding, ``labels`` is [B] int64 with -1 where
    no label is known. Row order matches the documents passed in.
    """

    __slots__ = ("ids", "mask", "labels", "doc_ids")

    def __init__(self, ids: np.ndarray, mask: np.ndarray, labels: np.ndarray, doc_ids: List[str]):
        self.ids = ids
        self.mask = mask
        self.labels = labels
        self.doc_ids = doc_ids

    def __len__(self) -> int:
        return self.ids.shape[0]

    def take(self, indices: Sequence[int]) -> "TokenizedBatch":
        """Row-subset view used by batch samplers; copies are cheap slices."""
        idx = np.asarray(indices, dtype=np.int64)
        return TokenizedBatch(
            self.ids[idx],
            self.mask[idx],
            self.labels[idx],
            [self.doc_ids[i] for i in idx],
        )


def tokenize(
    docs: Sequence[Document],
    vocab: Vocabulary,
    max_len: int,
    label_set: Optional[LabelSet] = None,
) -> TokenizedBatch:
    """Encode documents to a fixed-width batch, truncating past ``max_len``.

    Documents that normalize to zero tokens cannot be encoded; they are
    reported together in one error so the caller can fix the data in one
    pass rather than one failure at a time.
    """
    if max_len < 1:
        raise DataError(f"max_len must be >= 1, got {max_len}")
    ids = np.zeros((len(docs), max_len), dtype=np.int64)
    mask = np.zeros((len(docs), max_len), dtype=np.float32)
    labels = np.full((len(docs),), -1, dtype=np.int64)
    empty: List[str] = []
    for row, doc in enumerate(docs):
        token_ids = vocab.encode(doc.text)
        if not token_ids:
            empty.append(doc.id)
            continue
        token_ids = token_ids[:max_len]
        ids[row, : len(token_ids)] = token_ids
        mask[row, : len(token_ids)] = 1.0
        if doc.label is not None and label_set is not None:
            labels[row] = label_set.index(doc.label)
    if empty:
        raise DataError(f"documents with no tokens after normalization: {empty}")
    return TokenizedBatch(ids, mask, labels, [doc.id for doc in docs])
