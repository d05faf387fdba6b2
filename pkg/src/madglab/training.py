"""Two-step adversarial training loop, ERM baseline, and the DA mode.

Step A updates the main head f and extractor G on the weighted
cross-entropy. Step B re-forwards, holds f's predictions constant, and
updates the auxiliary heads (ascent on the transfer loss) and G (descent,
realized through the gradient-reversal junction). Separate optimizers keep
the two roles' momentum independent, so disabling Step B reduces the loop
to ERM bitwise.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import SGDMomentum, Tape, grl_eta_ramp
from .data import batch_sampler
from .margins import (MarginParams, cross_entropy_loss, pair_index_map,
                      transfer_loss)
from .models import MadgModel, MLPConfig


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    aux_learning_rate: float = None  # defaults to learning_rate
    momentum: float = 0.9
    weight_decay: float = 0.0
    rho_hat: float = 1.5
    epochs: int = 20
    batch_per_domain: int = 32
    pi_weights: tuple = None  # defaults to uniform over sources
    weight_scheme: str = "one"  # one | average | dynamic
    pair_scheme: str = "full"  # full | reduced
    grl_eta: float = 1.0
    grl_schedule: str = "constant"  # constant | ramp
    lr_schedule: str = "constant"  # constant | inverse_decay
    hidden_dims: tuple = (64, 64)
    feature_dim: int = 32
    seed: int = 0

    def __post_init__(self):
        # rho_hat = 1 is a legal sweep point (margin rho = 0 is then
        # degenerate, so the margin property refuses it, but the surrogate
        # losses remain well defined).
        if self.rho_hat < 1.0:
            raise ValueError("rho_hat must be at least 1")
        if self.aux_learning_rate is None:
            object.__setattr__(self, "aux_learning_rate", self.learning_rate)

    @property
    def margin(self):
        return MarginParams.from_rho_hat(self.rho_hat)


@dataclass
class MetricsRecord:
    epoch: int
    step: int
    classification_loss: float
    transfer_loss: float
    per_pair: np.ndarray
    per_domain_accuracy: np.ndarray
    seed: int


def lr_at(config, progress):
    """Learning-rate at training progress p in [0, 1]."""
    if config.lr_schedule == "constant":
        return config.learning_rate
    if config.lr_schedule == "inverse_decay":
        return config.learning_rate * (1.0 + 10.0 * progress) ** -0.75
    raise ValueError(f"unknown lr schedule: {config.lr_schedule}")


def _eta_at(config, progress):
    if config.grl_schedule == "ramp":
        return config.grl_eta * grl_eta_ramp(progress)
    return config.grl_eta


def _pi(config, num_sources):
    if config.pi_weights is None:
        return np.full(num_sources, 1.0 / num_sources)
    pi = np.asarray(config.pi_weights, dtype=np.float64)
    if len(pi) != num_sources or pi.min() < 0 or abs(pi.sum() - 1.0) > 1e-12:
        raise ValueError("pi_weights must be a simplex vector over the sources")
    return pi


def classification_loss(model, tape, batches, pi):
    """Weighted sum over domains of the mean cross-entropy."""
    total = None
    for w, (X, y) in zip(pi, batches):
        term = tape.scale(
            cross_entropy_loss(tape, model.main_scores(
                tape, model.features(tape, X)), y), w)
        total = term if total is None else tape.add(total, term)
    return total


def madg_step(model, batches, config, opt_main, opt_adv, pi, progress=0.0,
              pairs=None, step_b=True, cls_batches=None):
    """One two-sub-step update; returns (cls_loss, transfer, per-pair values).

    cls_batches defaults to batches; DA mode passes the labeled subset there
    while Step B sees all batches (sources plus unlabeled target).
    """
    cls_batches = batches if cls_batches is None else cls_batches
    if len(cls_batches) != len(pi):
        raise ValueError("one batch per source domain required")
    lr = lr_at(config, progress)
    model.grl_eta = _eta_at(config, progress)

    # Step A: classification loss -> update f and G
    model.zero_grad()
    tape = Tape()
    loss_a = classification_loss(model, tape, cls_batches, pi)
    tape.backward(loss_a)
    opt_main.step(learning_rate=lr)

    if not step_b:
        return float(loss_a.data), 0.0, np.zeros(model.pair_index.j)

    # Step B: fresh forward, f's predictions are constants; aux heads ascend
    # the transfer loss, G descends it through the reversal junction.
    model.zero_grad()
    tape = Tape()
    loss_t, pair_values, _ = transfer_loss(
        model, tape, [X for X, _ in batches], model.pair_index,
        config.rho_hat, weight_scheme=config.weight_scheme, pairs=pairs)
    tape.backward(tape.negate(loss_t))
    opt_adv.step(learning_rate=lr * config.aux_learning_rate
                 / config.learning_rate)
    return float(loss_a.data), float(loss_t.data), pair_values


def _build_model(datasets, config, num_heads_sources=None, scheme=None):
    input_dim = datasets[0].dim
    num_classes = int(max(ds.y.max() for ds in datasets)) + 1
    cfg = MLPConfig(input_dim=input_dim, num_classes=max(num_classes, 2),
                    hidden_dims=tuple(config.hidden_dims),
                    feature_dim=config.feature_dim, init_seed=config.seed)
    n_src = num_heads_sources or len(datasets)
    pair_index = pair_index_map(n_src, scheme or config.pair_scheme)
    return MadgModel(cfg, pair_index, grl_eta=config.grl_eta)


def _make_optimizers(model, config):
    opt_main = SGDMomentum(model.g_params + model.f_params,
                           config.learning_rate, config.momentum,
                           config.weight_decay)
    opt_adv = SGDMomentum(model.g_params + model.aux_params,
                          config.aux_learning_rate, config.momentum,
                          config.weight_decay)
    return opt_main, opt_adv


def evaluate(model, dataset):
    """Fraction of samples the argmax labeler gets right."""
    return float((model.predict(dataset.X) == dataset.y).mean())


def _train_loop(datasets, config, model, eval_sets, step_b=True, pairs=None,
                batch_sets=None, pi=None):
    opt_main, opt_adv = _make_optimizers(model, config)
    batch_sets = datasets if batch_sets is None else batch_sets
    pi = _pi(config, len(datasets)) if pi is None else pi
    history = []
    max_n = max(ds.n for ds in batch_sets)
    steps_per_epoch = -(-max_n // config.batch_per_domain)
    total_steps = max(1, config.epochs * steps_per_epoch)
    accs = np.array([evaluate(model, ds) for ds in eval_sets])
    step = 0
    for epoch in range(config.epochs):
        for batches in batch_sampler(batch_sets, config.batch_per_domain,
                                     config.seed, epoch):
            progress = step / total_steps
            # DA mode: the last batch set is the unlabeled target
            cls_batches = batches[:-1] if pairs is not None else batches
            loss_a, loss_t, pair_values = madg_step(
                model, batches, config, opt_main, opt_adv, pi,
                progress=progress, pairs=pairs, step_b=step_b,
                cls_batches=cls_batches)
            step += 1
            history.append(MetricsRecord(
                epoch=epoch, step=step, classification_loss=loss_a,
                transfer_loss=loss_t, per_pair=pair_values,
                per_domain_accuracy=accs, seed=config.seed))
        accs = np.array([evaluate(model, ds) for ds in eval_sets])
        if history:
            history[-1].per_domain_accuracy = accs
    return model, history


def madg_train(datasets, config, eval_sets=None):
    """Adversarial training over >= 2 labeled source domains."""
    if len(datasets) < 2:
        raise ValueError("madg_train needs at least 2 source domains")
    model = _build_model(datasets, config)
    return _train_loop(datasets, config, model,
                       eval_sets if eval_sets is not None else datasets)


def erm_train(datasets, config, eval_sets=None):
    """Weighted pooled cross-entropy baseline: the loop with Step B disabled."""
    model = _build_model(datasets, config,
                         num_heads_sources=max(len(datasets), 2))
    return _train_loop(datasets, config, model,
                       eval_sets if eval_sets is not None else datasets,
                       step_b=False)


def da_train(labeled_sources, unlabeled_target, config, alpha=None,
             eval_sets=None, target_has_labels=False):
    """Multi-source domain adaptation: transfer pairs are (source, target)."""
    import warnings

    if target_has_labels:
        warnings.warn("target labels are ignored in DA mode")
    n_src = len(labeled_sources)
    all_sets = list(labeled_sources) + [unlabeled_target]
    pairs = tuple((i, n_src) for i in range(n_src))

    input_dim = labeled_sources[0].dim
    num_classes = int(max(ds.y.max() for ds in labeled_sources)) + 1
    cfg = MLPConfig(input_dim=input_dim, num_classes=max(num_classes, 2),
                    hidden_dims=tuple(config.hidden_dims),
                    feature_dim=config.feature_dim, init_seed=config.seed)
    from .margins import PairIndex
    pair_index = PairIndex(num_sources=n_src + 1, pairs=pairs)
    model = MadgModel(cfg, pair_index, grl_eta=config.grl_eta)

    pi = np.asarray(alpha, dtype=np.float64) if alpha is not None \
        else _pi(config, n_src)
    return _train_loop(labeled_sources, config, model,
                       eval_sets if eval_sets is not None else all_sets,
                       pairs=pairs, batch_sets=all_sets, pi=pi)


# ---- metrics CSV ------------------------------------------------------------


def write_metrics_csv(history, path, num_pairs, num_eval):
    header = (["epoch", "step", "loss_cls", "loss_transfer"]
              + [f"pair_{l + 1}" for l in range(num_pairs)]
              + [f"acc_dom_{m + 1}" for m in range(num_eval)]
              + ["seed"])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for rec in history:
            pair_vals = list(rec.per_pair) + [0.0] * (num_pairs - len(rec.per_pair))
            row = ([str(rec.epoch), str(rec.step), repr(rec.classification_loss),
                    repr(rec.transfer_loss)]
                   + [repr(float(v)) for v in pair_vals]
                   + [repr(float(a)) for a in rec.per_domain_accuracy]
                   + [str(rec.seed)])
            fh.write(",".join(row) + "\n")
