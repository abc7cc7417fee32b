"""Transformer encoder: shapes, determinism, masking, checkpoints."""

import numpy as np
import pytest

from conftest import assert_grads_close, fd_grads
from crlplus.corpus import Document, LabelSet, Vocabulary, tokenize
from crlplus.encoder import (
    EncoderConfig,
    augment_views,
    classify,
    decode_checkpoint,
    encode,
    encode_checkpoint,
    freeze_encoder,
    init_encoder,
    init_head,
    load_checkpoint,
    load_model,
    params_hash,
    save_checkpoint,
    save_model,
)
from crlplus.errors import (
    CheckpointFormatError,
    ParameterError,
    ShapeError,
)
from crlplus.numerics import SeededRng, Tensor, sgd_step, tsum, value_and_grad

LABELS = LabelSet(("alpha", "beta"))
VOCAB = Vocabulary.from_tokens(["aa", "bb", "cc", "dd"])


def small_config(**overrides):
    base = dict(
        vocab_size=len(VOCAB),
        max_len=16,
        d_model=8,
        n_heads=2,
        n_layers=1,
        d_ff=16,
        dropout_p=0.1,
    )
    base.update(overrides)
    return EncoderConfig(**base)


def batch_of(texts, labels=None):
    docs = []
    for i, text in enumerate(texts):
        label = labels[i] if labels else None
        docs.append(Document(id=f"d{i}", text=text, label=label))
    return tokenize(docs, VOCAB, max_len=16, label_set=LABELS if labels else None)


def fresh_model(cfg=None, seed=0):
    return init_encoder(cfg or small_config(), SeededRng(seed, 0))


# config ----------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ParameterError):
        small_config(vocab_size=1)
    with pytest.raises(ParameterError):
        small_config(d_model=9)  # not divisible by n_heads
    with pytest.raises(ParameterError):
        small_config(dropout_p=1.0)
    with pytest.raises(ParameterError):
        small_config(pooling="cls")
    assert small_config().d_head == 4


def test_init_parameter_names():
    model = fresh_model()
    names = model.params.names()
    assert "encoder.tok_emb" in names
    assert "encoder.layers.0.attn.wq" in names
    assert "encoder.layers.0.ffn.w2" in names
    assert "encoder.layers.0.ln2.shift" in names
    assert model.params["encoder.tok_emb"].shape == (len(VOCAB), 8)


# encode ----------------------------------------------------------------------


def test_encode_output_shape():
    model = fresh_model()
    batch = batch_of(["aa bb", "cc", "aa aa dd"])
    emb = encode(model, batch)
    assert emb.shape == (3, 8)
    assert emb.data.dtype == np.float32


def test_encode_is_deterministic_without_rng():
    model = fresh_model()
    batch = batch_of(["aa bb cc", "dd"])
    a = encode(model, batch).data
    b = encode(model, batch).data
    assert (a == b).all()


def test_encode_dropout_streams():
    model = fresh_model()
    batch = batch_of(["aa bb cc dd aa bb"])
    same1 = encode(model, batch, rng=SeededRng(7, 3)).data
    same2 = encode(model, batch, rng=SeededRng(7, 3)).data
    assert (same1 == same2).all()
    diffs = 0
    for k in range(10):
        other = encode(model, batch, rng=SeededRng(7, 100 + k)).data
        diffs += not np.array_equal(other, same1)
    assert diffs >= 9  # distinct streams almost surely draw distinct masks


def test_encode_ignores_padding():
    model = fresh_model()
    short = tokenize([Document(id="a", text="aa bb", label=None)], VOCAB, max_len=4)
    long = tokenize([Document(id="a", text="aa bb", label=None)], VOCAB, max_len=16)
    e_short = encode(model, short).data
    e_long = encode(model, long).data
    assert np.abs(e_short - e_long).max() <= 1e-5


def test_encode_is_permutation_equivariant():
    model = fresh_model()
    batch = batch_of(["aa bb", "cc dd", "aa cc"])
    emb = encode(model, batch).data
    flipped = batch.take(np.array([2, 0, 1]))
    emb_flipped = encode(model, flipped).data
    assert np.abs(emb_flipped - emb[[2, 0, 1]]).max() <= 1e-6


def test_encode_rejects_bad_input():
    model = fresh_model()
    batch = batch_of(["aa bb"])
    batch.ids[0, 0] = len(VOCAB)  # out of vocabulary range
    with pytest.raises(ShapeError):
        encode(model, batch)
    empty = batch_of(["aa"]).take(np.array([], dtype=int))
    with pytest.raises(ShapeError):
        encode(model, empty)


def test_encode_rejects_overlong_rows():
    model = fresh_model(small_config(max_len=4))
    docs = [Document(id="d", text="aa bb cc dd aa", label=None)]
    batch = tokenize(docs, VOCAB, max_len=8)
    with pytest.raises(ShapeError):
        encode(model, batch)


# augmentation ----------------------------------------------------------------


def test_augment_views_layout():
    model = fresh_model()
    batch = batch_of(["aa", "bb", "cc", "dd"])
    emb, index_map = augment_views(model, batch, n_views=2, rng=SeededRng(0).derive(1, 0))
    assert emb.shape == (8, 8)
    assert index_map.tolist() == [0, 1, 2, 3, 0, 1, 2, 3]


def test_augment_views_differ_under_dropout():
    model = fresh_model()
    batch = batch_of(["aa bb cc dd aa bb"])
    emb, _ = augment_views(model, batch, n_views=2, rng=SeededRng(1).derive(1, 0))
    assert not np.array_equal(emb.data[0], emb.data[1])


def test_augment_views_identical_without_dropout():
    model = fresh_model(small_config(dropout_p=0.0))
    batch = batch_of(["aa bb", "cc"])
    emb, _ = augment_views(model, batch, n_views=3, rng=SeededRng(2).derive(1, 0))
    assert np.array_equal(emb.data[0], emb.data[2])
    assert np.array_equal(emb.data[1], emb.data[5])


def test_augment_views_requires_two():
    model = fresh_model()
    batch = batch_of(["aa"])
    with pytest.raises(ParameterError):
        augment_views(model, batch, n_views=1, rng=SeededRng(0))


# head and freezing -----------------------------------------------------------


def test_classify_affine():
    cfg = small_config()
    head = init_head(cfg, 3, SeededRng(0, 1))
    head["head.weight"].data[:] = 0.0
    head["head.bias"].data[:] = np.array([1.0, 2.0, 3.0], dtype=np.float32)
    emb = Tensor(np.ones((2, cfg.d_model), dtype=np.float32))
    logits = classify(head, emb)
    assert np.allclose(logits.data, [[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
    with pytest.raises(ParameterError):
        init_head(cfg, 1, SeededRng(0, 1))
    with pytest.raises(ShapeError):
        classify(head, Tensor(np.ones((2, cfg.d_model + 1), dtype=np.float32)))


def test_freeze_encoder_blocks_updates():
    model = fresh_model()
    head = init_head(model.config, 2, SeededRng(0, 1))
    from crlplus.numerics import ParamSet

    freeze_encoder(model)
    joint = ParamSet.merged(model.params, head)
    before = params_hash(joint.subset("encoder."))

    batch = batch_of(["aa bb", "cc dd"], labels=["alpha", "beta"])

    def loss_fn(ps):
        emb = encode(model, batch, params=ps.subset("encoder."))
        logits = classify(ps.subset("head."), emb)
        from crlplus.numerics import cross_entropy

        return cross_entropy(logits, batch.labels)

    head_before = head["head.weight"].data.copy()
    _, grads = value_and_grad(loss_fn, joint)
    stepped = sgd_step(joint, grads, lr=0.1)
    assert params_hash(stepped.subset("encoder.")) == before
    assert not np.array_equal(stepped["head.weight"].data, head_before)


# checkpoints -----------------------------------------------------------------


def test_checkpoint_round_trip(tmp_path):
    model = fresh_model()
    blob = encode_checkpoint(model.params)
    entries = decode_checkpoint(blob)
    assert tuple(name for name, _ in entries) == model.params.names()
    for name, array in entries:
        assert np.array_equal(array, model.params[name].data)
        assert array.dtype == np.float32

    path = tmp_path / "enc.crlp"
    save_checkpoint(model.params, path)
    again = load_checkpoint(path)
    assert {n: a.tobytes() for n, a in again} == {
        name: t.data.tobytes() for name, t in model.params.items()
    }


def test_model_round_trip_with_head(tmp_path):
    # dropout 0.25 survives the float32 meta entry exactly
    model = fresh_model(small_config(dropout_p=0.25))
    head = init_head(model.config, 2, SeededRng(0, 1))
    path = tmp_path / "model.crlp"
    save_model(model, path, head=head)
    loaded, loaded_head = load_model(path)
    assert loaded.config == model.config
    assert params_hash(loaded.params) == params_hash(model.params)
    assert loaded_head is not None
    assert params_hash(loaded_head) == params_hash(head)

    save_model(model, path)
    _, no_head = load_model(path)
    assert no_head is None


def test_checkpoint_corruption_cases(tmp_path):
    model = fresh_model()
    blob = encode_checkpoint(model.params)

    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(b"XXXX" + blob[4:])
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(blob[:4] + b"\x63\x00\x00\x00" + blob[8:])
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(blob[: len(blob) // 2])
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(blob + b"\x00")
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(tmp_path / "missing.crlp")


def test_params_hash_tracks_content():
    model = fresh_model()
    h1 = params_hash(model.params)
    model.params["encoder.tok_emb"].data[0, 0] += 1.0
    assert params_hash(model.params) != h1


# differentiability through the whole tower -----------------------------------


def test_encoder_end_to_end_gradients():
    cfg = small_config(dropout_p=0.0)
    model = init_encoder(cfg, SeededRng(3, 0))
    f64 = model.params.clone()
    for name in f64.names():
        f64[name].data = f64[name].data.astype(np.float64)
    batch = batch_of(["aa bb cc", "dd aa"])
    weight = np.random.default_rng(0).normal(size=(2, 8))

    def f(ps):
        emb = encode(model, batch, params=ps)
        return tsum(emb * weight)

    _, analytic = value_and_grad(f, f64)
    sample = np.random.default_rng(1)
    numeric = fd_grads(f, f64, coords_per_entry=4, rng=sample)
    assert_grads_close(analytic, numeric, rtol=5e-3, atol=1e-6)
