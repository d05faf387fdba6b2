"""Autodiff core: op values, gradients, the optimizer, and the GRL."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from madglab.autodiff import (SGDMomentum, Tape, Tensor, check_gradients,
                              finite_difference_grad, grl_eta_ramp)


def test_relu_values():
    tape = Tape()
    out = tape.relu(Tensor([-1.0, 0.0, 2.0]))
    assert np.array_equal(out.data, [0.0, 0.0, 2.0])


def test_log_softmax_uniform_logits():
    tape = Tape()
    out = tape.log_softmax(Tensor([[0.0, 0.0]]))
    assert np.allclose(out.data, [[-np.log(2), -np.log(2)]], atol=1e-15)


def test_grl_forward_is_identity():
    tape = Tape()
    out = tape.grl(Tensor([3.5, -1.0]), eta=7.0)
    assert np.array_equal(out.data, [3.5, -1.0])


def test_mean_gradient():
    x = Tensor([1.0, 2.0, 3.0, 4.0], requires_grad=True)
    tape = Tape()
    tape.backward(tape.mean(x))
    assert np.array_equal(x.grad, [0.25, 0.25, 0.25, 0.25])


def test_grl_backward_flips_sign():
    # sum realized as mean scaled by n, so the upstream gradient is 1 each
    x = Tensor([1.0, -2.0, 0.5], requires_grad=True)
    tape = Tape()
    loss = tape.scale(tape.mean(tape.grl(x, eta=1.0)), 3.0)
    tape.backward(loss)
    assert np.allclose(x.grad, [-1.0, -1.0, -1.0], atol=1e-15)


def test_grl_backward_scales_by_eta():
    x = Tensor([0.3, 0.7], requires_grad=True)
    tape = Tape()
    tape.backward(tape.scale(tape.mean(tape.grl(x, eta=2.5)), 2.0))
    assert np.allclose(x.grad, [-2.5, -2.5], atol=1e-15)


def _mlp_loss(params, x, labels):
    w1, b1, w2, b2, w3, b3 = params
    tape = Tape()
    h = tape.relu(tape.add_bias(tape.matmul(Tensor(x), w1), b1))
    h = tape.relu(tape.add_bias(tape.matmul(h, w2), b2))
    logits = tape.add_bias(tape.matmul(h, w3), b3)
    logp = tape.gather_label(tape.log_softmax(logits), labels)
    return tape, tape.negate(tape.mean(logp))


def test_three_layer_mlp_gradcheck():
    rng = np.random.default_rng(42)
    dims = [(3, 5), (5, 4), (4, 3)]
    params = []
    for din, dout in dims:
        params.append(Tensor(rng.normal(size=(din, dout)), requires_grad=True))
        params.append(Tensor(rng.normal(size=dout), requires_grad=True))
    x = rng.normal(size=(6, 3))
    labels = rng.integers(0, 3, size=6)

    def loss_fn():
        _, loss = _mlp_loss(params, x, labels)
        return float(loss.data)

    tape, loss = _mlp_loss(params, x, labels)
    tape.backward(loss)
    assert check_gradients(loss_fn, params, h=1e-5) < 1e-5


def test_log1m_softmax_matches_numpy():
    rng = np.random.default_rng(1)
    z = rng.normal(size=(5, 3))
    tape = Tape()
    out = tape.log1m_softmax(Tensor(z))
    probs = np.exp(z - z.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    assert np.allclose(out.data, np.log(1.0 - probs), atol=1e-12)


def test_log1m_softmax_gradcheck():
    z = Tensor(np.random.default_rng(2).normal(size=(4, 3)),
               requires_grad=True)
    labels = np.array([0, 2, 1, 1])

    def build():
        tape = Tape()
        picked = tape.gather_label(tape.log1m_softmax(z), labels)
        return tape, tape.mean(picked)

    tape, loss = build()
    tape.backward(loss)
    assert check_gradients(lambda: float(build()[1].data), [z], h=1e-5) < 1e-5


def test_clamp_min_blocks_gradient_below_floor():
    x = Tensor([-2.0, 3.0], requires_grad=True)
    tape = Tape()
    tape.backward(tape.mean(tape.clamp_min(x, 0.0)))
    assert np.array_equal(x.grad, [0.0, 0.5])


@given(st.lists(st.floats(-30, 30), min_size=2, max_size=6))
@settings(max_examples=50, deadline=None)
def test_log_softmax_normalizes(logits):
    tape = Tape()
    out = tape.log_softmax(Tensor([logits]))
    assert abs(np.exp(out.data).sum() - 1.0) < 1e-12


def test_backward_is_deterministic():
    rng = np.random.default_rng(3)
    x = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
    grads = []
    for _ in range(2):
        x.grad = None
        tape = Tape()
        tape.backward(tape.mean(tape.relu(x)))
        grads.append(x.grad.copy())
    assert np.array_equal(grads[0], grads[1])


def test_backward_requires_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    tape = Tape()
    out = tape.relu(x)
    with pytest.raises(ValueError):
        tape.backward(out)


def test_finite_difference_matches_analytic_on_mean():
    x = Tensor([1.0, -1.0, 0.5], requires_grad=True)

    def loss_fn():
        tape = Tape()
        return float(tape.mean(tape.relu(x)).data)

    (fd,) = finite_difference_grad(loss_fn, [x])
    assert np.allclose(fd, [1 / 3, 0.0, 1 / 3], atol=1e-7)


# ---- optimizer ---------------------------------------------------------------


def test_sgd_momentum_one_step():
    p = Tensor([1.0], requires_grad=True)
    p.grad = np.array([0.5])
    opt = SGDMomentum([p], learning_rate=0.1, momentum=0.9, weight_decay=0.0)
    opt.step()
    assert np.allclose(opt.velocity[0], [0.5], atol=1e-15)
    assert np.allclose(p.data, [0.95], atol=1e-15)


def test_sgd_zero_momentum_is_plain_sgd():
    p = Tensor([2.0], requires_grad=True)
    p.grad = np.array([1.5])
    opt = SGDMomentum([p], learning_rate=0.2, momentum=0.0, weight_decay=0.0)
    opt.step()
    assert np.allclose(p.data, [2.0 - 0.2 * 1.5], atol=1e-15)


def test_sgd_zero_gradient_is_fixed_point():
    p = Tensor([3.0], requires_grad=True)
    p.grad = np.array([0.0])
    opt = SGDMomentum([p], learning_rate=0.5, momentum=0.9, weight_decay=0.0)
    opt.step()
    assert np.array_equal(p.data, [3.0])


def test_sgd_weight_decay_enters_velocity():
    p = Tensor([1.0], requires_grad=True)
    p.grad = np.array([0.0])
    opt = SGDMomentum([p], learning_rate=0.1, momentum=0.0, weight_decay=0.1)
    opt.step()
    # v = g + wd * theta = 0.1; theta = 1 - 0.1 * 0.1
    assert np.allclose(p.data, [0.99], atol=1e-15)


# ---- GRL schedule -------------------------------------------------------------


def test_grl_ramp_endpoints_and_monotonicity():
    assert grl_eta_ramp(0.0) == pytest.approx(0.0, abs=1e-15)
    assert grl_eta_ramp(1.0) == pytest.approx(2.0 / (1.0 + np.exp(-10.0)) - 1.0)
    ps = np.linspace(0, 1, 11)
    vals = [grl_eta_ramp(p) for p in ps]
    assert all(a < b for a, b in zip(vals, vals[1:]))
