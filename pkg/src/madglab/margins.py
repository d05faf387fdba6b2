"""Margin quantities, disparity, and the trainable surrogate losses.

Definitional functions operate on plain numpy score matrices with 0-based
labels. The surrogate path builds differentiable losses on an autodiff Tape
through a model's feature extractor, main head and auxiliary heads.
"""

from dataclasses import dataclass
from math import comb, exp, log

import numpy as np

PROB_EPS = 1e-12
LOG_PROB_FLOOR = log(PROB_EPS)


@dataclass(frozen=True)
class MarginParams:
    """Margin rho and its trainable surrogate rho_hat = exp(rho)."""

    rho: float
    rho_hat: float

    @classmethod
    def from_rho(cls, rho):
        if rho <= 0:
            raise ValueError("rho must be positive")
        return cls(rho=float(rho), rho_hat=exp(rho))

    @classmethod
    def from_rho_hat(cls, rho_hat):
        if rho_hat <= 1:
            raise ValueError("rho_hat must exceed 1 so that rho = ln(rho_hat) > 0")
        return cls(rho=log(rho_hat), rho_hat=float(rho_hat))


@dataclass(frozen=True)
class PairIndex:
    """Ordered (i, k) source-domain pairs addressed by the head index l."""

    num_sources: int
    pairs: tuple  # 0-based (i, k) tuples

    @property
    def j(self):
        return len(self.pairs)


def pair_index_map(num_sources, scheme="full"):
    """Enumerate domain pairs: 'full' = all i<k, 'reduced' = (0, i) fan-out."""
    if num_sources < 2:
        raise ValueError("need at least 2 source domains")
    if scheme == "full":
        pairs = tuple((i, k) for i in range(num_sources - 1)
                      for k in range(i + 1, num_sources))
        assert len(pairs) == comb(num_sources, 2)
    elif scheme == "reduced":
        pairs = tuple((0, i) for i in range(1, num_sources))
    else:
        raise ValueError(f"unknown pair scheme: {scheme}")
    return PairIndex(num_sources=num_sources, pairs=pairs)


# ---- definitional margin path -------------------------------------------


def margin(scores, y):
    """Half the gap between the score at y and the best other score."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[-1] < 2:
        raise ValueError("margin needs at least 2 classes")
    others = np.delete(scores, y)
    return 0.5 * (scores[y] - others.max())


def margins_rowwise(scores, labels):
    """Vectorized margin for an (n, k) score matrix and (n,) labels."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, k = scores.shape
    if k < 2:
        raise ValueError("margin needs at least 2 classes")
    rows = np.arange(n)
    own = scores[rows, labels]
    masked = scores.copy()
    masked[rows, labels] = -np.inf
    return 0.5 * (own - masked.max(axis=1))


def phi_rho(t, rho):
    """Ramp loss: 1 below 0, linear on [0, rho], 0 above rho."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    t = np.asarray(t, dtype=np.float64)
    return np.clip(1.0 - t / rho, 0.0, 1.0)


def margin_error(scores, labels, rho):
    """Mean ramp loss of the margins: upper-bounds the 0-1 error."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[0] == 0:
        raise ValueError("empty sample set")
    return float(phi_rho(margins_rowwise(scores, labels), rho).mean())


def margin_disparity(scores_fprime, scores_f, rho):
    """Mean ramp loss of f' margins measured at f's predicted labels."""
    scores_f = np.asarray(scores_f, dtype=np.float64)
    if scores_f.shape[0] == 0:
        raise ValueError("empty sample set")
    h_f = scores_f.argmax(axis=1)
    return float(phi_rho(margins_rowwise(scores_fprime, h_f), rho).mean())


# ---- surrogate losses -----------------------------------------------------


def _log_softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def surrogate_L(logits, y):
    """Cross-entropy -log softmax_y(logits), probability floored at 1e-12."""
    logp = _log_softmax(logits)[..., y]
    return float(-np.maximum(logp, LOG_PROB_FLOOR))


def surrogate_Lprime(logits_fprime, scores_f):
    """log(1 - softmax probability that f' assigns to f's argmax label)."""
    logits_fprime = np.asarray(logits_fprime, dtype=np.float64)
    scores_f = np.asarray(scores_f, dtype=np.float64)
    if logits_fprime.shape != scores_f.shape or logits_fprime.shape[-1] < 2:
        raise ValueError("score vectors must share a length-k >= 2 shape")
    h = int(scores_f.argmax())
    p = np.exp(_log_softmax(logits_fprime))[h]
    return float(np.log(np.clip(1.0 - p, PROB_EPS, 1.0)))


# ---- differentiable losses on a tape --------------------------------------


def cross_entropy_loss(tape, logits, labels):
    """Mean -log softmax at the true labels, recorded on the tape."""
    logp = tape.log_softmax(logits)
    picked = tape.gather_label(logp, labels)
    picked = tape.clamp_min(picked, LOG_PROB_FLOOR)
    return tape.negate(tape.mean(picked))


def mdd_surrogate_pair(model, tape, batch_i, batch_k, l, rho_hat):
    """Surrogate pair discrepancy E_{S_k}[L'] - rho_hat * E_{S_i}[L].

    Both L and L' target the main head's argmax labels, held constant;
    features pass through the gradient-reversal junction before head l.
    """
    if batch_i.shape[0] == 0 or batch_k.shape[0] == 0:
        raise ValueError("empty batch")
    feats_i = model.features(tape, batch_i)
    feats_k = model.features(tape, batch_k)
    h_i = model.main_scores(tape, feats_i).data.argmax(axis=1)
    h_k = model.main_scores(tape, feats_k).data.argmax(axis=1)
    aux_i = model.aux_scores(tape, feats_i, l)
    aux_k = model.aux_scores(tape, feats_k, l)

    term_k = tape.mean(tape.gather_label(tape.log1m_softmax(aux_k), h_k))
    ce_i = cross_entropy_loss(tape, aux_i, h_i)
    return tape.add(term_k, tape.scale(ce_i, -rho_hat))


def pair_weights(scheme, pair_index, pair_values=None):
    """Per-pair weights for the transfer loss, treated as constants."""
    j = pair_index.j
    if scheme == "one":
        return np.ones(j)
    if scheme == "average":
        return np.full(j, 1.0 / pair_index.num_sources)
    if scheme == "dynamic":
        if pair_values is None:
            raise ValueError("dynamic weights need current pair values")
        mags = np.abs(np.asarray(pair_values, dtype=np.float64))
        total = mags.sum()
        return mags / total if total > 0 else np.full(j, 1.0 / j)
    raise ValueError(f"unknown weight scheme: {scheme}")


def transfer_loss(model, tape, batches, pair_index, rho_hat,
                  weight_scheme="one", pairs=None):
    """Weighted sum of pair surrogates over the source-domain pairs.

    Returns (loss tensor, per-pair forward values, weights used).
    """
    pairs = pair_index.pairs if pairs is None else pairs
    pair_terms = []
    for l, (i, k) in enumerate(pairs):
        pair_terms.append(
            mdd_surrogate_pair(model, tape, batches[i], batches[k], l, rho_hat))
    values = np.array([t.data for t in pair_terms])
    weights = pair_weights(weight_scheme, pair_index, values)
    if weights.shape[0] != len(pair_terms):
        raise ValueError("weight length mismatch")

    total = None
    for w, term in zip(weights, pair_terms):
        scaled = term if w == 1.0 else tape.scale(term, w)
        total = scaled if total is None else tape.add(total, scaled)
    return total, values, weights
