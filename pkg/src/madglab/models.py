"""The adversarial network: shared extractor G, main head f, auxiliary heads.

Desk-scale MLP backbone. Auxiliary heads sit behind a gradient-reversal
junction and start as copies of the main head. Checkpoints are a text
format with hex floats for bit-exact round trips.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .margins import pair_index_map


@dataclass(frozen=True)
class MLPConfig:
    input_dim: int
    num_classes: int
    hidden_dims: tuple = (64, 64)
    feature_dim: int = 32
    init_seed: int = 0

    def __post_init__(self):
        dims = (self.input_dim, self.num_classes, self.feature_dim,
                *self.hidden_dims)
        if min(dims) < 1 or self.num_classes < 2:
            raise ValueError("all dims must be positive and num_classes >= 2")


def _init_linear(rng, fan_in, fan_out):
    bound = 1.0 / np.sqrt(fan_in)
    w = Tensor(rng.uniform(-bound, bound, size=(fan_in, fan_out)),
               requires_grad=True)
    b = Tensor(np.zeros(fan_out), requires_grad=True)
    return w, b


class MadgModel:
    """Feature extractor + main classifier + j auxiliary classifiers."""

    def __init__(self, config, pair_index, grl_eta=1.0):
        self.config = config
        self.pair_index = pair_index
        self.grl_eta = float(grl_eta)

        widths = [config.input_dim, *config.hidden_dims, config.feature_dim]
        self.g_layers = []
        for idx, (din, dout) in enumerate(zip(widths[:-1], widths[1:])):
            rng = np.random.default_rng([config.init_seed, 1, idx])
            self.g_layers.append(_init_linear(rng, din, dout))

        rng = np.random.default_rng([config.init_seed, 2])
        self.f_head = _init_linear(rng, config.feature_dim, config.num_classes)
        # aux heads start as copies of the main head
        self.aux_heads = [
            (Tensor(self.f_head[0].data.copy(), requires_grad=True),
             Tensor(self.f_head[1].data.copy(), requires_grad=True))
            for _ in range(pair_index.j)
        ]

    # ---- parameter access -------------------------------------------------

    @property
    def g_params(self):
        return [t for layer in self.g_layers for t in layer]

    @property
    def f_params(self):
        return list(self.f_head)

    @property
    def aux_params(self):
        return [t for head in self.aux_heads for t in head]

    @property
    def all_params(self):
        return self.g_params + self.f_params + self.aux_params

    def zero_grad(self):
        for p in self.all_params:
            p.grad = None

    # ---- forward ------------------------------------------------------------

    def features(self, tape, x):
        h = x if isinstance(x, Tensor) else Tensor(x)
        last = len(self.g_layers) - 1
        for idx, (w, b) in enumerate(self.g_layers):
            h = tape.add_bias(tape.matmul(h, w), b)
            if idx != last:
                h = tape.relu(h)
        return h

    def main_scores(self, tape, feats):
        w, b = self.f_head
        return tape.add_bias(tape.matmul(feats, w), b)

    def aux_scores(self, tape, feats, l, eta=None):
        if not 0 <= l < self.pair_index.j:
            raise IndexError(f"auxiliary head {l} out of range")
        eta = self.grl_eta if eta is None else eta
        w, b = self.aux_heads[l]
        return tape.add_bias(tape.matmul(tape.grl(feats, eta), w), b)

    def predict(self, x):
        """Argmax labels without recording gradients."""
        from .autodiff import Tape
        tape = Tape()
        scores = self.main_scores(tape, self.features(tape, np.asarray(x)))
        return scores.data.argmax(axis=1)


def init_model(config, num_sources, scheme="full", grl_eta=1.0):
    return MadgModel(config, pair_index_map(num_sources, scheme),
                     grl_eta=grl_eta)


def forward_main(model, tape, batch):
    feats = model.features(tape, batch)
    return feats, model.main_scores(tape, feats)


def forward_aux(model, tape, feats, l, eta=None):
    return model.aux_scores(tape, feats, l, eta=eta)


# ---- checkpoint io ---------------------------------------------------------

_FORMAT = "madglab-checkpoint-v1"


def save_checkpoint(model, path):
    cfg = model.config
    lines = [
        _FORMAT,
        f"input_dim={cfg.input_dim}",
        f"num_classes={cfg.num_classes}",
        f"hidden_dims={','.join(str(d) for d in cfg.hidden_dims)}",
        f"feature_dim={cfg.feature_dim}",
        f"init_seed={cfg.init_seed}",
        f"num_sources={model.pair_index.num_sources}",
        f"pairs={';'.join(f'{i},{k}' for i, k in model.pair_index.pairs)}",
        f"grl_eta={model.grl_eta.hex()}",
    ]
    for name, params in (("g", model.g_params), ("f", model.f_params),
                         ("aux", model.aux_params)):
        for idx, p in enumerate(params):
            shape = ",".join(str(s) for s in p.shape)
            values = " ".join(v.hex() for v in p.data.reshape(-1))
            lines.append(f"param {name}.{idx} {shape} {values}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path):
    from .margins import PairIndex

    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _FORMAT:
        raise ValueError(f"not a {_FORMAT} file: {path}")
    meta = {}
    params = []
    for line in lines[1:]:
        if line.startswith("param "):
            _, name, shape, values = line.split(" ", 3)
            shape = tuple(int(s) for s in shape.split(","))
            data = np.array([float.fromhex(v) for v in values.split(" ")])
            params.append((name, data.reshape(shape)))
        elif "=" in line:
            key, value = line.split("=", 1)
            meta[key] = value

    config = MLPConfig(
        input_dim=int(meta["input_dim"]),
        num_classes=int(meta["num_classes"]),
        hidden_dims=tuple(int(d) for d in meta["hidden_dims"].split(",")),
        feature_dim=int(meta["feature_dim"]),
        init_seed=int(meta["init_seed"]),
    )
    pairs = tuple(tuple(int(v) for v in p.split(","))
                  for p in meta["pairs"].split(";")) if meta["pairs"] else ()
    pair_index = PairIndex(num_sources=int(meta["num_sources"]), pairs=pairs)
    model = MadgModel(config, pair_index, grl_eta=float.fromhex(meta["grl_eta"]))
    flat = model.g_params + model.f_params + model.aux_params
    if len(flat) != len(params):
        raise ValueError("checkpoint parameter count mismatch")
    for tensor, (_, data) in zip(flat, params):
        if tensor.shape != data.shape:
            raise ValueError("checkpoint parameter shape mismatch")
        tensor.data = data
    return model
