"""Shared oracles and fixtures.

The gradient checker and the explicit-summation loss oracle live here so the
unit suites and the acceptance gate verify against the same reference code.
Both run in float64: the production graphs accept float64 tensors, and the
oracles must not inherit float32 rounding from the thing they check.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pytest
from hypothesis import settings

from crlplus.contrastive import MODE_PAPER_LITERAL
from crlplus.corpus import Document, LabelSet, Vocabulary
from crlplus.numerics import ParamSet, Tensor, value_and_grad

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


def make_params(arrays: Dict[str, np.ndarray], dtype=np.float64) -> ParamSet:
    params = ParamSet()
    for name, arr in arrays.items():
        params.add(name, Tensor(np.asarray(arr, dtype=dtype)))
    return params


def to_f64(params: ParamSet) -> ParamSet:
    out = ParamSet()
    for name, t in params.items():
        out.add(name, Tensor(t.data.astype(np.float64)), frozen=params.is_frozen(name))
    return out


def fd_grads(
    f: Callable[[ParamSet], Tensor],
    params: ParamSet,
    h: float = 1e-3,
    coords_per_entry: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> Dict[str, np.ndarray]:
    """Central finite differences of a scalar f, coordinate by coordinate.

    Entries are perturbed in place and restored, so f must read parameter
    values fresh on every call. With ``coords_per_entry`` set, only that many
    randomly chosen coordinates per tensor are evaluated; the rest are NaN
    and skipped by ``assert_grads_close``.
    """
    grads: Dict[str, np.ndarray] = {}
    for name, t in params.items():
        flat = t.data.reshape(-1)
        g = np.full(flat.shape, np.nan, dtype=np.float64)
        coords = np.arange(flat.size)
        if coords_per_entry is not None and flat.size > coords_per_entry:
            coords = (rng or np.random.default_rng(0)).choice(
                flat.size, size=coords_per_entry, replace=False
            )
        for c in coords:
            original = flat[c]
            flat[c] = original + h
            up = f(params).item()
            flat[c] = original - h
            down = f(params).item()
            flat[c] = original
            g[c] = (up - down) / (2.0 * h)
        grads[name] = g.reshape(t.data.shape)
    return grads


def assert_grads_close(
    analytic: Dict[str, np.ndarray],
    numeric: Dict[str, np.ndarray],
    rtol: float = 1e-3,
    atol: float = 1e-6,
) -> float:
    """Per-coordinate |a - n| <= rtol * max(|a|, |n|) + atol; returns worst ratio."""
    worst = 0.0
    for name, n_grad in numeric.items():
        a_grad = np.asarray(analytic[name], dtype=np.float64)
        mask = ~np.isnan(n_grad)
        diff = np.abs(a_grad - n_grad)[mask]
        bound = rtol * np.maximum(np.abs(a_grad), np.abs(n_grad))[mask] + atol
        if diff.size == 0:
            continue
        ratio = float((diff / bound).max())
        worst = max(worst, ratio)
        assert (diff <= bound).all(), (
            f"gradient mismatch in {name}: worst |a-n| = {diff.max():.3e}, "
            f"allowed {bound[diff.argmax()]:.3e}"
        )
    return worst


def check_gradients(
    f: Callable[[ParamSet], Tensor],
    params: ParamSet,
    h: float = 1e-3,
    coords_per_entry: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    rtol: float = 1e-3,
    atol: float = 1e-6,
) -> None:
    _, analytic = value_and_grad(f, params)
    numeric = fd_grads(f, params, h=h, coords_per_entry=coords_per_entry, rng=rng)
    assert_grads_close(analytic, numeric, rtol=rtol, atol=atol)


def supcon_oracle(
    embeddings: np.ndarray, labels: Sequence[int], tau: float, mode: str
) -> Optional[float]:
    """Explicit per-anchor, per-positive summation of the contrastive loss.

    Returns None when no anchor contributes under the given mode.
    """
    emb = np.asarray(embeddings, dtype=np.float64)
    y = list(labels)
    n = len(y)

    def cos(i: int, j: int) -> float:
        a, b = emb[i], emb[j]
        return float(a @ b) / (float(np.linalg.norm(a)) * float(np.linalg.norm(b)))

    terms: List[float] = []
    for i in range(n):
        positives = [j for j in range(n) if j != i and y[j] == y[i]]
        negatives = [j for j in range(n) if y[j] != y[i]]
        denom_set = negatives if mode == MODE_PAPER_LITERAL else [
            j for j in range(n) if j != i
        ]
        if not positives or not denom_set:
            continue
        total = 0.0
        for p in positives:
            numerator = math.exp(cos(i, p) / tau)
            denominator = sum(math.exp(cos(i, b) / tau) for b in denom_set)
            total += math.log(numerator / denominator)
        terms.append(-total / len(positives))
    if not terms:
        return None
    return float(np.mean(terms))


def toy_documents(
    n_per_class: int = 6, n_unlabeled: int = 8
) -> tuple:
    """Two-keyword corpus where class membership is unmistakable.

    Used by loop-mechanics tests that need promotions to happen on the first
    iteration without depending on training luck.
    """
    label_set = LabelSet(("alpha", "beta"))
    words = {"alpha": "aa", "beta": "bb"}
    gold = []
    for cls in label_set:
        for i in range(n_per_class):
            gold.append(
                Document(
                    id=f"gold-{cls}-{i}",
                    text=f"{words[cls]} {words[cls]} {words[cls]} filler",
                    label=cls,
                )
            )
    pool = []
    truth = {}
    for i in range(n_unlabeled):
        cls = label_set.names[i % 2]
        doc_id = f"pool-{i}"
        pool.append(
            Document(id=doc_id, text=f"{words[cls]} {words[cls]} filler filler")
        )
        truth[doc_id] = cls
    vocab = Vocabulary.from_tokens(["aa", "bb", "filler"])
    return gold, pool, vocab, label_set, truth


@pytest.fixture
def toy_corpus():
    return toy_documents()
