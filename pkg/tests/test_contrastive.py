"""Contrastive loss: hand values, oracle agreement, invariances, gradients."""

import math

import numpy as np
import pytest

from conftest import check_gradients, make_params, supcon_oracle
from crlplus.contrastive import (
    MODE_PAPER_LITERAL,
    MODE_SUPCON_STANDARD,
    MODES,
    ContrastiveBatch,
    LossConfig,
    build_batch,
    cosine,
    pairwise_cosine,
    supcon_loss,
)
from crlplus.errors import DegenerateBatchError, ParameterError, ShapeError
from crlplus.numerics import Tensor

RNG = np.random.default_rng(77)


def random_batch(n, d, n_classes, dtype=np.float64):
    emb = RNG.normal(size=(n, d)).astype(dtype)
    labels = RNG.integers(0, n_classes, size=n)
    return emb, labels


def loss_value(emb, labels, tau, mode):
    batch = build_batch(Tensor(np.asarray(emb)), np.asarray(labels))
    cfg = LossConfig(temperature=tau, denominator_mode=mode)
    return supcon_loss(batch, cfg).item()


# cosine ----------------------------------------------------------------------


def test_cosine_hand_values():
    assert cosine(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == pytest.approx(0.0)
    # 32 / (sqrt(14) * sqrt(77))
    got = cosine(np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0]))
    assert got == pytest.approx(0.9746, abs=1e-4)


def test_cosine_rejects_degenerate_input():
    with pytest.raises(ShapeError):
        cosine(np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(ParameterError):
        cosine(np.zeros(3), np.ones(3))


def test_pairwise_matches_pairwise_cosine():
    emb, _ = random_batch(6, 5, 3)
    sims = pairwise_cosine(emb)
    for i in range(6):
        for j in range(6):
            assert sims[i, j] == pytest.approx(cosine(emb[i], emb[j]), abs=1e-9)


# batch construction ----------------------------------------------------------


def test_build_batch_masks():
    emb = np.eye(3)
    batch = build_batch(Tensor(emb), np.array([0, 0, 1]))
    assert batch.pos_mask.tolist() == [[0, 1, 0], [1, 0, 0], [0, 0, 0]]
    assert batch.neg_mask.tolist() == [[0, 0, 1], [0, 0, 1], [1, 1, 0]]


def test_build_batch_mask_partition():
    emb, labels = random_batch(10, 4, 3)
    batch = build_batch(Tensor(emb), labels)
    off_diagonal = 1 - np.eye(10)
    assert np.array_equal(batch.pos_mask + batch.neg_mask, off_diagonal)


def test_build_batch_validation():
    with pytest.raises(ShapeError):
        build_batch(Tensor(np.zeros(4)), np.array([0]))
    with pytest.raises(ShapeError):
        build_batch(Tensor(np.zeros((3, 2))), np.array([0, 1]))
    with pytest.raises(ParameterError):
        build_batch(Tensor(np.zeros((1, 2))), np.array([0]))
    with pytest.raises(ParameterError):
        build_batch(Tensor(np.zeros((2, 2))), np.array([0, -1]))


def test_contributing_by_mode():
    batch = build_batch(Tensor(np.eye(3)), np.array([0, 0, 1]))
    # anchors need a positive; under the literal mode they need a negative too
    assert batch.contributing(MODE_SUPCON_STANDARD).tolist() == [True, True, False]
    same = build_batch(Tensor(np.eye(2)), np.array([0, 0]))
    assert same.contributing(MODE_SUPCON_STANDARD).tolist() == [True, True]
    assert same.contributing(MODE_PAPER_LITERAL).tolist() == [False, False]


# hand-value losses -----------------------------------------------------------


def test_loss_two_identical_positives_standard():
    emb = np.array([[1.0, 0.0], [1.0, 0.0]])
    # single positive at similarity 1, denominator holds only that term
    assert loss_value(emb, [0, 0], 1.0, MODE_SUPCON_STANDARD) == pytest.approx(0.0, abs=1e-7)


def test_loss_anchor_positive_negative_hand_case():
    # anchor/positive identical, negative orthogonal, tau = 1:
    # standard: -log(e / (e + 1)); literal: -log(e / 1) = -1
    emb = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    labels = [0, 0, 1]
    expected = -math.log(math.e / (math.e + 1.0))
    assert loss_value(emb, labels, 1.0, MODE_SUPCON_STANDARD) == pytest.approx(
        0.3133, abs=1e-4
    )
    assert loss_value(emb, labels, 1.0, MODE_SUPCON_STANDARD) == pytest.approx(expected)
    assert loss_value(emb, labels, 1.0, MODE_PAPER_LITERAL) == pytest.approx(-1.0, abs=1e-4)


def test_loss_requires_contributing_anchor():
    emb = np.array([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(DegenerateBatchError):
        loss_value(emb, [0, 1], 0.1, MODE_SUPCON_STANDARD)
    with pytest.raises(DegenerateBatchError):
        loss_value(np.eye(2), [0, 0], 0.1, MODE_PAPER_LITERAL)


def test_loss_config_validation():
    assert set(MODES) == {MODE_PAPER_LITERAL, MODE_SUPCON_STANDARD}
    with pytest.raises(ParameterError):
        LossConfig(temperature=0.0)
    with pytest.raises(ParameterError):
        LossConfig(denominator_mode="other")


# oracle agreement ------------------------------------------------------------


def test_loss_matches_oracle_over_random_batches():
    checked = 0
    for trial in range(200):
        n = int(RNG.integers(2, 9))
        d = int(RNG.integers(2, 7))
        k = int(RNG.integers(1, 4))
        tau = float(RNG.uniform(0.05, 2.0))
        emb, labels = random_batch(n, d, k)
        mode = MODES[trial % 2]
        expected = supcon_oracle(emb, labels, tau, mode)
        if expected is None:
            with pytest.raises(DegenerateBatchError):
                loss_value(emb, labels, tau, mode)
            continue
        got = loss_value(emb, labels, tau, mode)
        assert abs(got - expected) <= 1e-5, (trial, mode, tau)
        checked += 1
    assert checked >= 100  # most random batches contribute


def test_standard_mode_loss_is_non_negative():
    for _ in range(300):
        emb, labels = random_batch(int(RNG.integers(2, 8)), 4, 2)
        labels[1] = labels[0]  # guarantee one positive pair
        assert loss_value(emb, labels, 0.1, MODE_SUPCON_STANDARD) >= 0.0


# invariances -----------------------------------------------------------------


def test_loss_is_permutation_invariant():
    emb, labels = random_batch(8, 5, 3)
    labels[1] = labels[0]
    base = loss_value(emb, labels, 0.3, MODE_SUPCON_STANDARD)
    for _ in range(5):
        perm = RNG.permutation(8)
        permuted = loss_value(emb[perm], labels[perm], 0.3, MODE_SUPCON_STANDARD)
        assert permuted == pytest.approx(base, abs=1e-6)


def test_loss_is_scale_invariant():
    emb, labels = random_batch(6, 4, 2)
    labels[1] = labels[0]
    base = loss_value(emb, labels, 0.2, MODE_SUPCON_STANDARD)
    scaled = loss_value(emb * 37.5, labels, 0.2, MODE_SUPCON_STANDARD)
    assert scaled == pytest.approx(base, abs=1e-6)


# gradients -------------------------------------------------------------------


@pytest.mark.parametrize("mode", MODES)
def test_loss_gradients(mode):
    emb = RNG.normal(size=(6, 8))
    labels = np.array([0, 0, 1, 1, 2, 2])
    params = make_params({"emb": emb})
    cfg = LossConfig(temperature=0.5, denominator_mode=mode)

    def f(ps):
        return supcon_loss(build_batch(ps["emb"], labels), cfg)

    check_gradients(f, params, rtol=5e-3, atol=1e-7)
