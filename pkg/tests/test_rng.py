"""Seeded stream semantics: replay, independence, value identity."""

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from crlplus.numerics import SeededRng

U64 = st.integers(min_value=0, max_value=(1 << 64) - 1)


def test_same_pair_replays_identical_draws():
    a = SeededRng(7, 3).generator().random(100)
    b = SeededRng(7, 3).generator().random(100)
    assert (a == b).all()


def test_distinct_streams_differ():
    root = SeededRng(7)
    a = root.derive(1).generator().random(50)
    b = root.derive(2).generator().random(50)
    assert not (a == b).all()


def test_distinct_seeds_differ():
    a = SeededRng(1).generator().random(50)
    b = SeededRng(2).generator().random(50)
    assert not (a == b).all()


def test_derive_is_pure():
    root = SeededRng(42)
    assert root.derive(5, 9) == root.derive(5, 9)
    assert hash(root.derive(5, 9)) == hash(root.derive(5, 9))


def test_derive_depends_on_index_order():
    root = SeededRng(42)
    assert root.derive(1, 2) != root.derive(2, 1)


def test_derive_chain_equals_flat_indices():
    root = SeededRng(42)
    assert root.derive(3).derive(4) == root.derive(3, 4)


def test_derive_does_not_mutate_parent():
    root = SeededRng(42, 17)
    root.derive(1, 2, 3)
    assert root == SeededRng(42, 17)


def test_draws_pinned_for_regression():
    # Frozen from a reference run; any change in stream addressing or the
    # underlying bit generator shows up here before it corrupts training.
    gen = SeededRng(0).derive(1, 1).generator()
    observed = gen.integers(0, 1_000_000, size=4)
    assert observed.tolist() == [724219, 385473, 850600, 218883]


@given(seed=U64, stream=U64, index=U64)
def test_derive_deterministic_for_any_indices(seed, stream, index):
    first = SeededRng(seed, stream).derive(index)
    second = SeededRng(seed, stream).derive(index)
    assert first == second
    assert first.seed == seed


@given(seed=U64, index=st.integers(min_value=0, max_value=1 << 32))
def test_derived_stream_differs_from_parent(seed, index):
    root = SeededRng(seed)
    child = root.derive(index)
    a = root.generator().random(8)
    b = child.generator().random(8)
    assert not (a == b).all()
