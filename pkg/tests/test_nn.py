import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lanechange.nn import (
    HEADS, Gradients, Mlp, TrainingHalted, clip_global_norm, gradient_check, mlp_backward, mlp_forward,
    relative_error, sgd_step,
)


def test_forward_examples():
    x = np.ones(8)
    assert Mlp([8, 100, 1], "linear")(x) == 0.0
    assert Mlp([8, 100, 1], "neg_softplus")(x) == pytest.approx(-math.log(2))
    net = Mlp([1, 1], "linear", [np.array([[2.0]])], [np.array([1.0])])
    assert net(np.array([0.5])) == 2.0
    with pytest.raises(ValueError):
        net(np.zeros(2))
    with pytest.raises(ValueError):
        Mlp([8, 10, 1], "relu")


def test_backward_examples():
    net = Mlp([1, 1], "linear", [np.array([[3.0]])], [np.array([0.0])])
    _, cache = mlp_forward(net, np.array([0.7]))
    grads, d_in = mlp_backward(net, cache, 1.0)
    assert grads.weights[0][0, 0] == pytest.approx(0.7) and d_in[0] == 3.0
    rnd = Mlp.initialize([8, 100, 1], "neg_softplus", np.random.default_rng(0))
    _, cache = mlp_forward(rnd, np.ones(8))
    zero, d_in = mlp_backward(rnd, cache, 0.0)
    assert all(not a.any() for a in zero.arrays()) and not d_in.any()


def test_batch_forward_matches_rows(rng):
    net = Mlp.initialize([8, 30, 1], "pos_softplus", rng)
    xs = rng.uniform(-1, 1, (5, 8))
    assert np.allclose(net(xs), [net(x) for x in xs], rtol=0, atol=1e-15)


@pytest.mark.parametrize("head", HEADS)
def test_gradient_check_all_heads(head, rng):
    net = Mlp.initialize([8, 100, 1], head, rng)
    err, ok = gradient_check(net, trials=3, h=1e-5, tol=1e-5, rng=rng)
    assert ok, err


def test_gradient_check_zero_net_and_canary(rng):
    err, ok = gradient_check(Mlp([3, 4, 1], "linear"), trials=2, randomize=False, rng=rng)
    assert ok and err < 1e-5
    net = Mlp.initialize([8, 20, 1], "neg_softplus", rng)
    _, ok = gradient_check(net, trials=2, rng=rng, corrupt=1.01)
    assert not ok
    with pytest.raises(ValueError):
        gradient_check(net, h=1e-3)


def test_relative_error_floor():
    assert relative_error([1e-13], [0.0])[0] == 0.0
    assert relative_error([1.0], [1.01])[0] == pytest.approx(0.01 / 1.01)


@given(st.floats(-50, 50))
def test_softplus_heads_sign(z):
    neg = Mlp([1, 1], "neg_softplus", [np.array([[1.0]])], [np.array([0.0])])
    pos = Mlp([1, 1], "pos_softplus", [np.array([[1.0]])], [np.array([0.0])])
    assert neg(np.array([z])) < 0 < pos(np.array([z]))


def test_initialization_range(rng):
    for head in HEADS:
        net = Mlp.initialize([8, 150, 1], head, rng)
        w = net.weights[0]
        assert np.all(np.abs(w) <= 1 / math.sqrt(8)) and not any(b.any() for b in net.biases)
        out = net(rng.uniform(-2, 2, (200, 8)))
        assert np.all(np.abs(out) <= 5)


def _single(w):
    return Mlp([1, 1], "linear", [np.array([[w]])], [np.array([0.0])])


def test_sgd_examples():
    net = _single(1.0)
    sgd_step(net, Gradients([np.array([[0.5]])], [np.array([0.0])]), 0.01)
    assert net.weights[0][0, 0] == pytest.approx(0.995)
    before = net.flat()
    sgd_step(net, Gradients([np.zeros((1, 1))], [np.zeros(1)]), 0.01)
    assert np.array_equal(net.flat(), before)
    with pytest.raises(TrainingHalted):
        sgd_step(net, Gradients([np.array([[np.nan]])], [np.zeros(1)]), 0.01)


def test_clip_global_norm():
    g = Gradients([np.array([[60.0]])], [np.array([80.0])])
    (clipped,), norm = clip_global_norm([g], 10.0)
    assert norm == pytest.approx(100.0)
    assert math.sqrt(clipped.sq_norm()) == pytest.approx(10.0)
    (same,), _ = clip_global_norm([g.scale(0.01)], 10.0)
    assert same.weights[0][0, 0] == pytest.approx(0.6)
    with pytest.raises(TrainingHalted):
        clip_global_norm([Gradients([np.array([[np.inf]])], [np.zeros(1)])], 10.0)


def test_update_determinism(rng):
    net = Mlp.initialize([8, 20, 1], "linear", rng)
    _, cache = mlp_forward(net, np.ones(8))
    grads, _ = mlp_backward(net, cache, 1.0)
    a, b = net.copy(), net.copy()
    sgd_step(a, grads, 0.01)
    sgd_step(b, grads, 0.01)
    assert np.array_equal(a.flat(), b.flat())
