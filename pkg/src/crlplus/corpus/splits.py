"""Stratified train/val/test splitting.

Labeled documents are split per class so every split keeps the corpus skew;
unlabeled documents always land in the train pool (they exist only to be
pseudo-labeled). A class too small to stratify goes entirely to train with
a warning, mirroring real cause-of-death data where a class may hold just
three samples.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Dict, List, Sequence

from ..errors import ParameterError
from ..numerics import SeededRng
from .documents import Document
from .synth import apportion


class SmallClassWarning(UserWarning):
    """A labeled class had too few documents to spread across the splits."""


@dataclass(frozen=True)
class SplitRatios:
    train: float = 0.8
    val: float = 0.1
    test: float = 0.1

    def validate(self) -> None:
        parts = (self.train, self.val, self.test)
        if any(r < 0 for r in parts):
            raise ParameterError(f"split ratios must be non-negative, got {parts}")
        if abs(sum(parts) - 1.0) > 1e-6:
            raise ParameterError(f"split ratios must sum to 1 within 1e-6, got {sum(parts)!r}")


@dataclass
class SplitResult:
    train: List[Document]
    val: List[Document]
    test: List[Document]


def split(docs: Sequence[Document], ratios: SplitRatios, seed: int) -> SplitResult:
    """Partition documents into disjoint train/val/test lists.

    Stratification is per class over labeled documents only. When a class
    has no more labeled documents than there are nonzero-ratio buckets, all
    of them go to train and a SmallClassWarning is emitted, because any
    stratified assignment would leave some bucket without the class anyway.
    Output lists preserve the input document order.
    """
    ratios.validate()
    n_buckets = sum(1 for r in (ratios.train, ratios.val, ratios.test) if r > 0)

    by_class: Dict[str, List[int]] = {}
    position: Dict[str, int] = {}
    train_idx: List[int] = []
    val_idx: List[int] = []
    test_idx: List[int] = []
    for i, doc in enumerate(docs):
        if doc.id in position:
            raise ParameterError(f"duplicate document id {doc.id!r}")
        position[doc.id] = i
        if doc.label is None:
            train_idx.append(i)
        else:
            by_class.setdefault(doc.label, []).append(i)

    gen = SeededRng(seed).generator()
    for class_name in sorted(by_class):
        members = by_class[class_name]
        if len(members) <= n_buckets:
            warnings.warn(
                f"class {class_name!r} has only {len(members)} labeled documents; "
                "assigning all of them to train",
                SmallClassWarning,
                stacklevel=2,
            )
            train_idx.extend(members)
            continue
        order = gen.permutation(len(members))
        shuffled = [members[int(j)] for j in order]
        n_train, n_val, n_test = apportion(
            len(members), (ratios.train, ratios.val, ratios.test)
        )
        train_idx.extend(shuffled[:n_train])
        val_idx.extend(shuffled[n_train : n_train + n_val])
        test_idx.extend(shuffled[n_train + n_val :])
        assert n_train + n_val + n_test == len(members)

    return SplitResult(
        train=[docs[i] for i in sorted(train_idx)],
        val=[docs[i] for i in sorted(val_idx)],
        test=[docs[i] for i in sorted(test_idx)],
    )
