"""ParamSet bookkeeping and the functional SGD step."""

import numpy as np
import pytest

from conftest import make_params
from crlplus.errors import ParameterError, ShapeError
from crlplus.numerics import (
    ParamSet,
    Tensor,
    global_grad_norm,
    mul,
    sgd_step,
    tsum,
    value_and_grad,
)


def simple_params():
    return make_params({"w": np.array([1.0, 2.0]), "b": np.array([0.5])})


def test_add_rejects_duplicates_and_non_tensors():
    ps = ParamSet()
    ps.add("w", Tensor(np.ones(2)))
    with pytest.raises(ParameterError):
        ps.add("w", Tensor(np.zeros(2)))
    with pytest.raises(ParameterError):
        ps.add("x", np.ones(2))


def test_names_preserve_insertion_order():
    ps = ParamSet()
    for name in ("z", "a", "m"):
        ps.add(name, Tensor(np.zeros(1)))
    assert ps.names() == ("z", "a", "m")


def test_freeze_and_clone():
    ps = simple_params()
    ps.freeze("w")
    assert ps.is_frozen("w")
    assert not ps.is_frozen("b")
    assert ps.any_frozen()

    kept = ps.clone()
    assert kept.is_frozen("w")
    thawed = ps.clone(unfreeze=True)
    assert not thawed.any_frozen()
    # clones own their arrays
    thawed["w"].data[0] = 99.0
    assert ps["w"].data[0] == 1.0


def test_freeze_prefix_and_subset_share_tensors():
    ps = make_params({"enc.w": np.ones(2), "enc.b": np.zeros(1), "head.w": np.ones(2)})
    ps.freeze_prefix("enc.")
    assert ps.is_frozen("enc.w") and ps.is_frozen("enc.b")
    assert not ps.is_frozen("head.w")

    sub = ps.subset("enc.")
    assert sub.names() == ("enc.w", "enc.b")
    assert sub["enc.w"] is ps["enc.w"]


def test_merged_shares_and_rejects_collisions():
    a = make_params({"x": np.ones(1)})
    b = make_params({"y": np.zeros(1)})
    both = ParamSet.merged(a, b)
    assert both["x"] is a["x"]
    assert both.names() == ("x", "y")
    with pytest.raises(ParameterError):
        ParamSet.merged(a, make_params({"x": np.ones(1)}))


def test_sgd_hand_step():
    ps = make_params({"w": np.array([1.0])})

    def f(p: ParamSet) -> Tensor:
        return tsum(mul(p["w"], p["w"]))  # df/dw = 2w

    _, grads = value_and_grad(f, ps)
    out = sgd_step(ps, grads, lr=0.1)
    assert out["w"].data[0] == pytest.approx(0.8)
    # functional: the input set is untouched
    assert ps["w"].data[0] == 1.0
    assert out is not ps


def test_sgd_clips_by_global_norm():
    ps = make_params({"w": np.zeros(4)})
    grads = {"w": np.full(4, 5.0)}  # norm 10
    out = sgd_step(ps, grads, lr=1.0, clip=1.0)
    # scale factor clip/norm = 0.1, so each coordinate moves by -0.5
    assert np.allclose(out["w"].data, -0.5)


def test_sgd_leaves_small_gradients_unclipped():
    ps = make_params({"w": np.zeros(2)})
    out = sgd_step(ps, {"w": np.array([0.3, 0.4])}, lr=1.0, clip=1.0)
    assert np.allclose(out["w"].data, [-0.3, -0.4])


def test_sgd_skips_frozen_entries():
    ps = make_params({"enc.w": np.ones(2), "head.w": np.ones(2)})
    ps.freeze("enc.w")
    grads = {"enc.w": np.full(2, 3.0), "head.w": np.full(2, 3.0)}
    out = sgd_step(ps, grads, lr=0.5)
    assert np.allclose(out["enc.w"].data, 1.0)
    assert np.allclose(out["head.w"].data, -0.5)
    assert out.is_frozen("enc.w")


def test_value_and_grad_returns_zeros_for_untouched():
    ps = make_params({"used": np.ones(2), "unused": np.ones(3)})
    _, grads = value_and_grad(lambda p: tsum(p["used"]), ps)
    assert np.allclose(grads["used"], 1.0)
    assert np.allclose(grads["unused"], 0.0)
    assert set(grads) == {"used", "unused"}


def test_global_grad_norm_excludes_frozen():
    ps = make_params({"a": np.zeros(1), "b": np.zeros(1)})
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert global_grad_norm(ps, grads) == pytest.approx(5.0)
    ps.freeze("a")
    assert global_grad_norm(ps, grads) == pytest.approx(4.0)


def test_sgd_parameter_validation():
    ps = simple_params()
    grads = {name: np.zeros_like(ps[name].data) for name in ps.names()}
    with pytest.raises(ParameterError):
        sgd_step(ps, grads, lr=0.0)
    with pytest.raises(ParameterError):
        sgd_step(ps, grads, lr=0.1, clip=0.0)


def test_sgd_grad_shape_mismatch():
    ps = make_params({"w": np.zeros(3)})
    with pytest.raises(ShapeError):
        sgd_step(ps, {"w": np.zeros(4)}, lr=0.1)
