"""Margin quantities, pair indexing, and the surrogate losses."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import tiny_model
from madglab.autodiff import Tape, Tensor
from madglab.margins import (MarginParams, cross_entropy_loss, margin,
                             margin_disparity, margin_error, margins_rowwise,
                             mdd_surrogate_pair, pair_index_map, pair_weights,
                             phi_rho, surrogate_L, surrogate_Lprime,
                             transfer_loss)
from madglab.oracle import DiscreteDomain, exact_disparity


def test_margin_basic_cases():
    # labels are 0-based throughout
    assert margin([2.0, 0.5, -1.0], 0) == pytest.approx(0.75)
    assert margin([2.0, 0.5, -1.0], 2) == pytest.approx(-1.5)
    assert margin([1.3, 1.3], 0) == 0.0
    assert margin([1.3, 1.3], 1) == 0.0


def test_margins_rowwise_matches_scalar():
    rng = np.random.default_rng(0)
    scores = rng.normal(size=(10, 4))
    labels = rng.integers(0, 4, size=10)
    vec = margins_rowwise(scores, labels)
    for i in range(10):
        assert vec[i] == pytest.approx(margin(scores[i], labels[i]))


def test_phi_rho_branches():
    assert phi_rho(1.0, 2.0) == pytest.approx(0.5)
    assert phi_rho(3.0, 2.0) == 0.0
    assert phi_rho(-0.5, 2.0) == 1.0


@given(st.floats(-10, 10), st.floats(0.1, 5))
@settings(max_examples=100, deadline=None)
def test_phi_rho_range_and_dominance(t, rho):
    v = float(phi_rho(t, rho))
    assert 0.0 <= v <= 1.0
    assert v >= (1.0 if t <= 0 else 0.0)  # dominates the mistake indicator


def test_phi_rho_rejects_nonpositive_rho():
    with pytest.raises(ValueError):
        phi_rho(1.0, 0.0)


def test_margin_error_cases():
    # one sample with margin 0.75 at rho=2
    assert margin_error([[2.0, 0.5]], [0], 2.0) == pytest.approx(0.625)
    # saturated margins
    assert margin_error([[10.0, 0.0], [0.0, 10.0]], [0, 1], 2.0) == 0.0
    # every sample misclassified
    assert margin_error([[0.0, 1.0], [1.0, 0.0]], [0, 1], 2.0) == 1.0


def test_margin_disparity_cases():
    saturated = np.array([[10.0, 0.0], [0.0, 10.0]])
    assert margin_disparity(saturated, saturated, 2.0) == 0.0
    flipped = saturated[:, ::-1]
    assert margin_disparity(flipped, saturated, 2.0) == 1.0


def test_margin_disparity_matches_oracle_on_four_points():
    rng = np.random.default_rng(5)
    f = rng.normal(size=(4, 3))
    fprime = rng.normal(size=(4, 3))
    rho = 1.2
    empirical = margin_disparity(fprime, f, rho)
    dom = DiscreteDomain.uniform(np.arange(4), f.argmax(axis=1))
    assert empirical == pytest.approx(exact_disparity(dom, fprime, f, rho),
                                      abs=1e-12)


# ---- pair indexing -------------------------------------------------------------


def test_pair_index_full_three_sources():
    idx = pair_index_map(3, "full")
    assert idx.pairs == ((0, 1), (0, 2), (1, 2))
    assert idx.j == 3
    # third head (l = 3, 1-based) covers the pair (2, 3) in 1-based naming
    assert idx.pairs[2] == (1, 2)


def test_pair_index_counts():
    assert pair_index_map(4, "full").j == 6
    assert pair_index_map(4, "reduced").pairs == ((0, 1), (0, 2), (0, 3))


@given(st.integers(2, 7))
@settings(max_examples=20, deadline=None)
def test_pair_index_full_is_a_bijection(n):
    idx = pair_index_map(n, "full")
    assert len(set(idx.pairs)) == idx.j == n * (n - 1) // 2
    assert all(i < k < n for i, k in idx.pairs)


def test_pair_index_rejects_bad_input():
    with pytest.raises(ValueError):
        pair_index_map(1, "full")
    with pytest.raises(ValueError):
        pair_index_map(3, "zigzag")


# ---- margin params -------------------------------------------------------------


def test_margin_params_round_trip():
    p = MarginParams.from_rho_hat(1.5)
    assert p.rho == pytest.approx(np.log(1.5))
    q = MarginParams.from_rho(p.rho)
    assert q.rho_hat == pytest.approx(1.5)


def test_margin_params_reject_degenerate():
    with pytest.raises(ValueError):
        MarginParams.from_rho_hat(1.0)
    with pytest.raises(ValueError):
        MarginParams.from_rho(0.0)


# ---- surrogate losses ----------------------------------------------------------


def test_surrogate_L_values():
    assert surrogate_L([0.0, 0.0, 0.0, 0.0], 2) == pytest.approx(np.log(4))
    assert surrogate_L([10.0, -10.0], 0) == pytest.approx(2.06e-9, rel=1e-2)
    assert surrogate_L([0.0, 0.0], 1) == pytest.approx(np.log(2))


def test_surrogate_Lprime_values():
    assert surrogate_Lprime([0.0, 0.0], [1.0, 0.0]) == pytest.approx(np.log(0.5))
    # f' puts almost no mass on h_f's label
    assert surrogate_Lprime([-40.0, 0.0], [1.0, 0.0]) == pytest.approx(0.0,
                                                                       abs=1e-12)
    sig5 = 1.0 / (1.0 + np.exp(-5.0))
    assert surrogate_Lprime([5.0, 0.0], [1.0, 0.0]) == pytest.approx(
        np.log(1.0 - sig5))


def test_surrogate_Lprime_clamps_at_prob_floor():
    # f' fully confident in h_f's label: log(1 - p) floors at log(1e-12)
    assert surrogate_Lprime([800.0, 0.0], [1.0, 0.0]) == pytest.approx(
        np.log(1e-12))


def test_cross_entropy_loss_on_tape_matches_numpy():
    rng = np.random.default_rng(7)
    z = rng.normal(size=(6, 3))
    y = rng.integers(0, 3, size=6)
    tape = Tape()
    loss = cross_entropy_loss(tape, Tensor(z), y)
    expected = np.mean([surrogate_L(z[i], y[i]) for i in range(6)])
    assert float(loss.data) == pytest.approx(expected, abs=1e-12)


def _zeroed_model(**kwargs):
    model = tiny_model(**kwargs)
    for p in model.all_params:
        p.data[...] = 0.0
    return model


def test_mdd_surrogate_pair_uniform_heads():
    # all-zero parameters give uniform logits everywhere (k = 2)
    model = _zeroed_model()
    rng = np.random.default_rng(1)
    tape = Tape()
    term = mdd_surrogate_pair(model, tape, rng.normal(size=(5, 3)),
                              rng.normal(size=(4, 3)), 0, 1.5)
    expected = np.log(0.5) - 1.5 * np.log(2.0)
    assert float(term.data) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(-1.7329, abs=1e-4)


def test_mdd_surrogate_pair_shared_batch_matches_direct_expectations():
    model = tiny_model(seed=3)
    rng = np.random.default_rng(2)
    batch = rng.normal(size=(6, 3))
    rho_hat = 1.5
    tape = Tape()
    term = mdd_surrogate_pair(model, tape, batch, batch, 0, rho_hat)

    # recompute E[L'] and E[L] independently from raw forward passes
    t2 = Tape()
    feats = model.features(t2, batch)
    f_scores = model.main_scores(t2, feats).data
    aux = model.aux_scores(t2, feats, 0).data
    lp = np.mean([surrogate_Lprime(aux[i], f_scores[i]) for i in range(6)])
    h = f_scores.argmax(axis=1)
    ce = np.mean([surrogate_L(aux[i], h[i]) for i in range(6)])
    assert float(term.data) == pytest.approx(lp - rho_hat * ce, abs=1e-12)


def test_mdd_surrogate_pair_rejects_empty_batch():
    model = tiny_model()
    with pytest.raises(ValueError):
        mdd_surrogate_pair(model, Tape(), np.zeros((0, 3)), np.zeros((2, 3)),
                           0, 1.5)


def test_pair_weights_schemes():
    idx = pair_index_map(3, "full")
    assert np.array_equal(pair_weights("one", idx), [1.0, 1.0, 1.0])
    assert np.allclose(pair_weights("average", idx), [1 / 3] * 3)
    dyn = pair_weights("dynamic", idx, pair_values=[-1.0, -1.0, -1.0])
    assert np.allclose(dyn, [1 / 3] * 3)
    dyn2 = pair_weights("dynamic", idx, pair_values=[-2.0, -1.0, -1.0])
    assert np.allclose(dyn2, [0.5, 0.25, 0.25])
    with pytest.raises(ValueError):
        pair_weights("dynamic", idx)
    with pytest.raises(ValueError):
        pair_weights("nonsense", idx)


def test_transfer_loss_scheme_one_sums_pairs():
    model = tiny_model(num_sources=3, seed=4)
    rng = np.random.default_rng(3)
    batches = [rng.normal(size=(4, 3)) for _ in range(3)]
    tape = Tape()
    total, values, weights = transfer_loss(model, tape, batches,
                                           model.pair_index, 1.5,
                                           weight_scheme="one")
    assert np.array_equal(weights, [1.0, 1.0, 1.0])
    assert float(total.data) == pytest.approx(values.sum(), abs=1e-9)


def test_transfer_loss_three_uniform_pairs():
    # spec arithmetic: j=3 pairs each at -1.7329-ish, scheme sums/averages
    model = _zeroed_model(num_sources=3)
    rng = np.random.default_rng(4)
    batches = [rng.normal(size=(4, 3)) for _ in range(3)]
    per_pair = np.log(0.5) - 1.5 * np.log(2.0)
    tape = Tape()
    total, _, _ = transfer_loss(model, tape, batches, model.pair_index, 1.5,
                                weight_scheme="one")
    assert float(total.data) == pytest.approx(3 * per_pair, abs=1e-12)
    tape = Tape()
    total, _, _ = transfer_loss(model, tape, batches, model.pair_index, 1.5,
                                weight_scheme="average")
    assert float(total.data) == pytest.approx(per_pair, abs=1e-12)
    tape = Tape()
    total, _, _ = transfer_loss(model, tape, batches, model.pair_index, 1.5,
                                weight_scheme="dynamic")
    assert float(total.data) == pytest.approx(per_pair, abs=1e-12)
