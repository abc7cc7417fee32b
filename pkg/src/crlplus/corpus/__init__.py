"""Data ingestion, tokenization, splitting, and the synthetic corpus."""

from .documents import (
    PROVENANCE_GOLD,
    PROVENANCE_PSEUDO,
    PROVENANCE_UNLABELED,
    Document,
    LabelSet,
    load_jsonl,
    load_labels,
    write_jsonl,
    write_labels,
)
from .splits import SmallClassWarning, SplitRatios, SplitResult, split
from .synth import (
    DEFAULT_CLASS_NAMES,
    DEFAULT_CLASS_WEIGHTS,
    SynthConfig,
    SynthResult,
    apportion,
    synth_corpus,
    truth_documents,
)
from .tokenizer import (
    PAD_INDEX,
    UNK_INDEX,
    TokenizedBatch,
    Vocabulary,
    load_vocabulary,
    normalize,
    save_vocabulary,
    tokenize,
)

__all__ = [
    "PROVENANCE_GOLD",
    "PROVENANCE_PSEUDO",
    "PROVENANCE_UNLABELED",
    "Document",
    "LabelSet",
    "load_jsonl",
    "load_labels",
    "write_jsonl",
    "write_labels",
    "SmallClassWarning",
    "SplitRatios",
    "SplitResult",
    "split",
    "DEFAULT_CLASS_NAMES",
    "DEFAULT_CLASS_WEIGHTS",
    "SynthConfig",
    "SynthResult",
    "apportion",
    "synth_corpus",
    "truth_documents",
    "PAD_INDEX",
    "UNK_INDEX",
    "TokenizedBatch",
    "Vocabulary",
    "load_vocabulary",
    "normalize",
    "save_vocabulary",
    "tokenize",
]
