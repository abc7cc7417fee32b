"""Documents, label sets, and the JSON-lines dataset format.

Dataset files are UTF-8 JSON lines with exactly the fields ``id`` (string),
``text`` (string), and ``label`` (string or null); unknown fields are
rejected. Label-set files are plain text, one class name per line, order
significant (class index = position). The sealed ground truth of a synthetic
"unlabeled" pool uses the same JSONL schema under a ``.truth.jsonl`` suffix
and is only ever opened by evaluation code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from ..errors import DataError

PROVENANCE_GOLD = "gold"
PROVENANCE_PSEUDO = "pseudo"
PROVENANCE_UNLABELED = "unlabeled"

_ALLOWED_FIELDS = {"id", "text", "label"}


@dataclass
class Document:
    """One text sample with a stable id and optional class label."""

    id: str
    text: str
    label: Optional[str] = None
    provenance: str = field(default="")
    source_iteration: Optional[int] = None

    def __post_init__(self):
        if not self.provenance:
            self.provenance = PROVENANCE_GOLD if self.label is not None else PROVENANCE_UNLABELED
        if self.provenance == PROVENANCE_PSEUDO:
            if self.label is None or self.source_iteration is None:
                raise DataError(
                    f"pseudo-labeled document {self.id!r} needs a label and a source iteration"
                )
        elif self.provenance == PROVENANCE_UNLABELED and self.label is not None:
            raise DataError(f"unlabeled document {self.id!r} must not carry a label")
        elif self.provenance not in (PROVENANCE_GOLD, PROVENANCE_PSEUDO, PROVENANCE_UNLABELED):
            raise DataError(f"unknown provenance {self.provenance!r}")


class LabelSet:
    """Ordered, unique class names; order is fixed for the lifetime of a run."""

    def __init__(self, names: Sequence[str]):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise DataError("label set contains duplicate class names")
        if not names:
            raise DataError("label set is empty")
        self._names = names
        self._index = {name: i for i, name in enumerate(names)}

    @property
    def names(self) -> tuple:
        return self._names

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DataError(f"unknown class label {name!r}") from None

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self):
        return iter(self._names)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelSet) and self._names == other._names

    def __repr__(self) -> str:
        return f"LabelSet({list(self._names)!r})"


def load_labels(path) -> LabelSet:
    """Read a label-set file (one class name per line, order significant)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"label file not found: {path}")
    names = [line.strip() for line in path.read_text(encoding="utf-8").splitlines()]
    return LabelSet([n for n in names if n])


def write_labels(label_set: LabelSet, path) -> None:
    Path(path).write_text("\n".join(label_set.names) + "\n", encoding="utf-8")


def load_jsonl(path, label_set: Optional[LabelSet] = None) -> List[Document]:
    """Parse a dataset file into Documents, preserving file order.

    Raises DataError for malformed lines (with line number), unknown fields,
    duplicate ids, or labels not present in ``label_set`` when one is given.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    docs: List[Document] = []
    seen = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON line: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            unknown = set(obj) - _ALLOWED_FIELDS
            if unknown:
                raise DataError(f"{path}:{lineno}: unknown fields {sorted(unknown)}")
            if "id" not in obj or "text" not in obj:
                raise DataError(f"{path}:{lineno}: missing required field 'id' or 'text'")
            doc_id, text, label = obj["id"], obj["text"], obj.get("label")
            if not isinstance(doc_id, str) or not isinstance(text, str):
                raise DataError(f"{path}:{lineno}: 'id' and 'text' must be strings")
            if label is not None and not isinstance(label, str):
                raise DataError(f"{path}:{lineno}: 'label' must be a string or null")
            if doc_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate document id {doc_id!r}")
            seen.add(doc_id)
            if label is not None and label_set is not None and label not in label_set:
                raise DataError(f"{path}:{lineno}: unknown label {label!r}")
            docs.append(Document(id=doc_id, text=text, label=label))
    return docs


def write_jsonl(docs: Iterable[Document], path) -> None:
    """Write documents in order; only id/text/label are serialized."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(
                json.dumps(
                    {"id": doc.id, "text": doc.text, "label": doc.label},
                    ensure_ascii=False,
                )
                + "\n"
            )
