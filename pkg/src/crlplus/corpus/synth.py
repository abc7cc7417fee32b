"""Synthetic obituary-style corpus with a skewed cause-of-death taxonomy.

Stands in for proprietary insurance text. Documents are short obituaries
built from per-class templates whose keyword slots are class-indicative;
``template_noise`` blends keywords across classes so task difficulty can be
swept from trivially separable (0.0) to heavily confusable (1.0). Only a
configurable fraction of documents carries gold labels; the true class of
every document is returned separately so evaluation code can score the
"unlabeled" pool without the training path ever seeing it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import ParameterError
from ..numerics import SeededRng
from .documents import (
    PROVENANCE_GOLD,
    PROVENANCE_UNLABELED,
    Document,
    LabelSet,
)

# Default skew mirrors a real-world cause-of-death mix: one dominant class,
# one near-empty class, and a long tail in between.
DEFAULT_CLASS_NAMES = (
    "neoplasms",
    "circulatory",
    "accidents",
    "respiratory",
    "nervous",
    "suicides",
    "digestive",
    "covid19",
)
_DEFAULT_COUNTS = (33104, 3477, 11942, 3427, 1991, 3, 543, 5007)
DEFAULT_CLASS_WEIGHTS = tuple(c / sum(_DEFAULT_COUNTS) for c in _DEFAULT_COUNTS)

# Six keywords per class: small pools keep per-word statistics sharp even
# for classes that contribute only a handful of labeled documents.
_KEYWORDS: Dict[str, Tuple[str, ...]] = {
    "neoplasms": (
        "cancer", "tumor", "lymphoma", "leukemia", "carcinoma", "chemotherapy",
    ),
    "circulatory": (
        "cardiac", "stroke", "aneurysm", "arrhythmia", "coronary", "congestive",
    ),
    "accidents": (
        "accident", "crash", "collision", "drowning", "injuries", "rollover",
    ),
    "respiratory": (
        "pneumonia", "emphysema", "asthma", "bronchitis", "pulmonary", "ventilator",
    ),
    "nervous": (
        "alzheimer", "parkinson", "dementia", "seizures", "epilepsy", "neuropathy",
    ),
    "suicides": (
        "suicide", "despair", "anguish", "torment", "helpline", "hopelessness",
    ),
    "digestive": (
        "cirrhosis", "pancreatitis", "ulcer", "gastric", "colitis", "hepatitis",
    ),
    "covid19": (
        "covid", "coronavirus", "pandemic", "icu", "oxygen", "quarantine",
    ),
}

# (template, number of keyword slots); shared slots are filled from the
# generic pools below so classes differ only through their keywords. Every
# document carries a cause sentence, a detail sentence, and a certificate
# line, seven class-indicative tokens in all. A thinner signal drowns in
# the boilerplate once pooling averages it with names, places, and dates;
# a tiny encoder trained from scratch on a few dozen gold documents needs
# the class evidence repeated to carry it into the pooled representation.
_CAUSE_TEMPLATES: Tuple[Tuple[str, int], ...] = (
    ("{name}, {age}, of {place}, died on {month} {day} after a long struggle with {kw0}, {kw1} and {kw2}.", 3),
    ("{name} passed away peacefully at home following complications of {kw0} and {kw1} after years of {kw2}.", 3),
    ("{name}, aged {age}, succumbed to {kw0} at {place} general hospital after battling {kw1} and {kw2}.", 3),
    ("The family announced that {name} died of {kw0} last {weekday}; {kw1} and {kw2} had defined the last year.", 3),
    ("{name} died {month} {day} at age {age}; {kw0}, {kw1} and later {kw2} had marked the final years.", 3),
    ("After months in treatment for {kw0}, {kw1} and {kw2}, {name} of {place} died surrounded by family.", 3),
    ("Doctors attributed the death of {name}, {age}, to {kw0} compounded by {kw1} and {kw2}.", 3),
)

_DETAIL_TEMPLATES: Tuple[Tuple[str, int], ...] = (
    ("The diagnosis of {kw0} had come two winters earlier, and {kw1} followed.", 2),
    ("Relatives said the {kw0} worsened through the spring as {kw1} set in.", 2),
    ("Hospital staff spoke of {kw0} and {kw1} with the family at the end.", 2),
    ("Years of {kw0} and then {kw1} had slowly taken their toll.", 2),
    ("Treatment for {kw0} continued until the final week, {kw1} notwithstanding.", 2),
    ("Neighbors recalled long talks about the {kw0} and the {kw1} that followed.", 2),
)

_CERTIFICATE_TEMPLATES: Tuple[Tuple[str, int], ...] = (
    ("The certificate lists {kw0} with {kw1}.", 2),
    ("Records cite {kw0} alongside {kw1}.", 2),
    ("The cause on file reads {kw0}, secondary {kw1}.", 2),
)

_BOILERPLATE: Tuple[str, ...] = (
    "Survivors include a {relative} and several grandchildren.",
    "A memorial service will be held at {place} chapel on {weekday}.",
    "Friends may call at the funeral home on {weekday} evening.",
    "In lieu of flowers, donations may be made to the {place} community fund.",
    "{name} worked for many years as a {job} and loved {hobby}.",
    "Burial will follow at the {place} cemetery.",
    "{name} was born in {place} and lived there most of a long life.",
)

_FIRST_NAMES = (
    "Ada", "Amos", "Bea", "Carl", "Clara", "Dora", "Earl", "Edna",
    "Felix", "Flora", "Gus", "Hazel", "Ira", "Iris", "Joel", "June",
    "Knox", "Lena", "Mack", "Mae", "Ned", "Nola", "Otis", "Opal",
    "Paul", "Pearl", "Quinn", "Rhea", "Saul", "Sada", "Ted", "Tess",
    "Uri", "Una", "Vern", "Veda", "Walt", "Wren", "York", "Zora",
)
_LAST_NAMES = (
    "Abbott", "Barnes", "Calder", "Doyle", "Eaton", "Foss", "Gage",
    "Hale", "Ingram", "Joiner", "Keats", "Lowe", "Mercer", "Nash",
    "Orr", "Pruett", "Quigley", "Rhodes", "Slater", "Tate", "Usher",
    "Vance", "Welles", "Xiong", "Yates", "Zahn",
)
_PLACES = (
    "Cedar Falls", "Maple Grove", "Oak Ridge", "Pine Bluff", "Elm Creek",
    "Birch Hollow", "Ash Valley", "Willow Bend", "Stone Harbor", "Clay Center",
    "Fox Point", "Deer Lodge", "Lake Crest", "Millbrook", "Northfield",
    "Silver Bay", "Union Mills", "Westbrook",
)
_MONTHS = (
    "January", "February", "March", "April", "May", "June", "July",
    "August", "September", "October", "November", "December",
)
_WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")
_RELATIVES = ("sister", "brother", "daughter", "son", "niece", "nephew", "cousin")
_JOBS = (
    "teacher", "machinist", "nurse", "farmer", "bookkeeper", "carpenter",
    "postal clerk", "librarian", "welder", "seamstress",
)
_HOBBIES = (
    "gardening", "fishing", "quilting", "woodworking", "birdwatching",
    "baking", "chess", "choir singing",
)


@dataclass
class SynthConfig:
    """Generator parameters; defaults give the skewed eight-class corpus."""

    n_total: int
    labeled_fraction: float = 0.03
    class_weights: Sequence[float] = field(default_factory=lambda: DEFAULT_CLASS_WEIGHTS)
    template_noise: float = 0.08
    seed: int = 0


@dataclass
class SynthResult:
    """Generated corpus plus the sealed ground truth of every document."""

    documents: List[Document]
    label_set: LabelSet
    truth: Dict[str, str]


def apportion(total: int, weights: Sequence[float]) -> List[int]:
    """Split ``total`` into integer parts proportional to ``weights``.

    Largest-remainder rule: floor every quota, then hand out the leftover
    units in order of descending fractional part (ties to the lower index).
    """
    if total < 0:
        raise ParameterError(f"cannot apportion a negative total ({total})")
    quotas = [total * w for w in weights]
    parts = [int(math.floor(q)) for q in quotas]
    leftover = total - sum(parts)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - parts[i]), i))
    for i in order[:leftover]:
        parts[i] += 1
    return parts


def _validate(cfg: SynthConfig) -> None:
    if cfg.n_total < 8 * 10:
        raise ParameterError(f"n_total must be at least 80, got {cfg.n_total}")
    if not (0.0 < cfg.labeled_fraction <= 1.0):
        raise ParameterError(f"labeled_fraction must be in (0, 1], got {cfg.labeled_fraction}")
    if len(cfg.class_weights) != len(DEFAULT_CLASS_NAMES):
        raise ParameterError(
            f"class_weights must have {len(DEFAULT_CLASS_NAMES)} entries, got {len(cfg.class_weights)}"
        )
    if any(w < 0 for w in cfg.class_weights):
        raise ParameterError("class_weights must be non-negative")
    total = float(sum(cfg.class_weights))
    if abs(total - 1.0) > 1e-6:
        raise ParameterError(f"class_weights must sum to 1 within 1e-6, got {total!r}")
    if not (0.0 <= cfg.template_noise <= 1.0):
        raise ParameterError(f"template_noise must be in [0, 1], got {cfg.template_noise}")


def _keyword(gen: np.random.Generator, class_idx: int, noise: float) -> str:
    """Draw one keyword, hopping to a random other class with prob ``noise``."""
    k = len(DEFAULT_CLASS_NAMES)
    if noise > 0.0 and gen.random() < noise:
        class_idx = int((class_idx + 1 + gen.integers(0, k - 1)) % k)
    pool = _KEYWORDS[DEFAULT_CLASS_NAMES[class_idx]]
    return pool[int(gen.integers(0, len(pool)))]


def _pick(gen: np.random.Generator, pool: Sequence[str]) -> str:
    return pool[int(gen.integers(0, len(pool)))]


def _compose(gen: np.random.Generator, class_idx: int, noise: float) -> str:
    name = f"{_pick(gen, _FIRST_NAMES)} {_pick(gen, _LAST_NAMES)}"
    fields = {
        "name": name,
        "age": str(int(gen.integers(19, 100))),
        "place": _pick(gen, _PLACES),
        "month": _pick(gen, _MONTHS),
        "day": str(int(gen.integers(1, 29))),
        "weekday": _pick(gen, _WEEKDAYS),
        "relative": _pick(gen, _RELATIVES),
        "job": _pick(gen, _JOBS),
        "hobby": _pick(gen, _HOBBIES),
    }
    sentences = []
    for pool in (_CAUSE_TEMPLATES, _DETAIL_TEMPLATES, _CERTIFICATE_TEMPLATES):
        template, n_slots = pool[int(gen.integers(0, len(pool)))]
        for slot in range(n_slots):
            fields[f"kw{slot}"] = _keyword(gen, class_idx, noise)
        sentences.append(template.format(**fields))
    if int(gen.integers(0, 2)):
        sentences.append(_pick(gen, _BOILERPLATE).format(**fields))
    return " ".join(sentences)


def synth_corpus(cfg: SynthConfig) -> SynthResult:
    """Generate the corpus; same config gives byte-identical documents."""
    _validate(cfg)
    label_set = LabelSet(DEFAULT_CLASS_NAMES)
    gen = SeededRng(cfg.seed).generator()

    per_class = apportion(cfg.n_total, cfg.class_weights)
    n_labeled = int(math.floor(cfg.labeled_fraction * cfg.n_total + 0.5))
    gold_per_class = apportion(n_labeled, cfg.class_weights)

    # The gold quota of a class cannot exceed its document count; push any
    # overflow to classes with spare room, largest classes first.
    overflow = 0
    for k in range(len(per_class)):
        if gold_per_class[k] > per_class[k]:
            overflow += gold_per_class[k] - per_class[k]
            gold_per_class[k] = per_class[k]
    if overflow:
        for k in sorted(range(len(per_class)), key=lambda i: (-per_class[i], i)):
            room = per_class[k] - gold_per_class[k]
            grant = min(room, overflow)
            gold_per_class[k] += grant
            overflow -= grant
            if overflow == 0:
                break

    entries: List[Tuple[str, str, bool]] = []  # (text, class name, is gold)
    for k, class_name in enumerate(DEFAULT_CLASS_NAMES):
        for j in range(per_class[k]):
            text = _compose(gen, k, cfg.template_noise)
            entries.append((text, class_name, j < gold_per_class[k]))

    order = gen.permutation(len(entries))
    documents: List[Document] = []
    truth: Dict[str, str] = {}
    for position, source in enumerate(order):
        text, class_name, is_gold = entries[int(source)]
        doc_id = f"doc-{position:06d}"
        truth[doc_id] = class_name
        if is_gold:
            documents.append(
                Document(id=doc_id, text=text, label=class_name, provenance=PROVENANCE_GOLD)
            )
        else:
            documents.append(
                Document(id=doc_id, text=text, label=None, provenance=PROVENANCE_UNLABELED)
            )
    return SynthResult(documents=documents, label_set=label_set, truth=truth)


def truth_documents(result: SynthResult) -> List[Document]:
    """Ground-truth view of the corpus for the sealed side file."""
    docs = []
    for doc in result.documents:
        docs.append(
            Document(
                id=doc.id,
                text=doc.text,
                label=result.truth[doc.id],
                provenance=PROVENANCE_GOLD,
            )
        )
    return docs
