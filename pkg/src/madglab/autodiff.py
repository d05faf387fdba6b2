"""Minimal reverse-mode autodiff on dense float64 tensors.

The operator set is exactly what the adversarial training loop needs:
matmul, add_bias, relu, log_softmax, log1m_softmax, gather_label, mean,
scale, negate, clamp_min and the gradient-reversal op. Tapes are
single-writer: build one Tape per training step, call backward once.
"""

import numpy as np


class Tensor:
    """Dense float64 array participating in a recorded computation graph."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _accumulate(tensor, grad):
    if tensor.grad is None:
        tensor.grad = np.zeros_like(tensor.data)
    tensor.grad += grad


class Tape:
    """Ordered record of forward ops; backward replays it in reverse once."""

    def __init__(self):
        self.nodes = []  # (output, inputs, backward_fn)

    def _record(self, out, inputs, backward_fn):
        self.nodes.append((out, inputs, backward_fn))
        return out

    # ---- ops ------------------------------------------------------------

    def matmul(self, a, b):
        if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
        out = Tensor(a.data @ b.data)

        def backward(g):
            return [g @ b.data.T, a.data.T @ g]

        return self._record(out, [a, b], backward)

    def add_bias(self, x, b):
        if b.data.ndim != 1 or x.shape[-1] != b.shape[0]:
            raise ValueError(f"add_bias shape mismatch: {x.shape} + {b.shape}")
        out = Tensor(x.data + b.data)

        def backward(g):
            axes = tuple(range(g.ndim - 1))
            return [g, g.sum(axis=axes) if axes else g]

        return self._record(out, [x, b], backward)

    def relu(self, x):
        out = Tensor(np.maximum(x.data, 0.0))
        mask = x.data > 0.0

        def backward(g):
            return [g * mask]

        return self._record(out, [x], backward)

    def log_softmax(self, x):
        z = x.data
        m = z.max(axis=-1, keepdims=True)
        shifted = z - m
        lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
        out = Tensor(shifted - lse)
        probs = np.exp(out.data)

        def backward(g):
            return [g - probs * g.sum(axis=-1, keepdims=True)]

        return self._record(out, [x], backward)

    def log1m_softmax(self, x):
        """Row-wise log(1 - softmax(x)), the stable core of the L' loss.

        Computed as logsumexp over the other coordinates minus the full
        logsumexp; output floored at log(1e-12) per the clamping policy.
        """
        z = x.data
        m = z.max(axis=-1, keepdims=True)
        e = np.exp(z - m)
        total = e.sum(axis=-1, keepdims=True)
        other = total - e
        raw = np.log(np.maximum(other, 1e-300)) - np.log(total)
        floor = np.log(1e-12)
        clamped = raw < floor
        out = Tensor(np.maximum(raw, floor))
        probs = e / total

        def backward(g):
            g = np.where(clamped, 0.0, g)
            # d log(1-s_w)/d z_v = 1[v != w] * s_v / (1 - s_w) - s_v
            one_minus = np.maximum(1.0 - probs, 1e-300)
            ratio = g / one_minus
            grad = probs * (ratio.sum(axis=-1, keepdims=True) - ratio)
            grad -= probs * g.sum(axis=-1, keepdims=True)
            return [grad]

        return self._record(out, [x], backward)

    def gather_label(self, x, labels):
        labels = np.asarray(labels, dtype=np.int64)
        if x.data.ndim != 2 or labels.shape != (x.shape[0],):
            raise ValueError(f"gather_label shape mismatch: {x.shape}, {labels.shape}")
        if labels.min() < 0 or labels.max() >= x.shape[1]:
            raise IndexError("gather_label: label index out of range")
        rows = np.arange(x.shape[0])
        out = Tensor(x.data[rows, labels])

        def backward(g):
            grad = np.zeros_like(x.data)
            grad[rows, labels] = g
            return [grad]

        return self._record(out, [x], backward)

    def mean(self, x):
        out = Tensor(x.data.mean())
        n = x.data.size

        def backward(g):
            return [np.full_like(x.data, g / n)]

        return self._record(out, [x], backward)

    def scale(self, x, c):
        c = float(c)
        out = Tensor(x.data * c)

        def backward(g):
            return [g * c]

        return self._record(out, [x], backward)

    def negate(self, x):
        out = Tensor(-x.data)

        def backward(g):
            return [-g]

        return self._record(out, [x], backward)

    def clamp_min(self, x, c):
        c = float(c)
        mask = x.data > c
        out = Tensor(np.maximum(x.data, c))

        def backward(g):
            return [g * mask]

        return self._record(out, [x], backward)

    def add(self, a, b):
        if a.shape != b.shape:
            raise ValueError(f"add shape mismatch: {a.shape} + {b.shape}")
        out = Tensor(a.data + b.data)

        def backward(g):
            return [g, g]

        return self._record(out, [a, b], backward)

    def grl(self, x, eta=1.0):
        """Gradient reversal: identity forward, -eta on the backward pass."""
        eta = float(eta)
        out = Tensor(x.data.copy())

        def backward(g):
            return [-eta * g]

        return self._record(out, [x], backward)

    # ---- backward -------------------------------------------------------

    def backward(self, loss):
        if not self.nodes:
            raise ValueError("backward on an empty tape")
        if loss.data.shape != ():
            raise ValueError("backward requires a scalar loss")
        loss.grad = np.ones((), dtype=np.float64)
        for out, inputs, backward_fn in reversed(self.nodes):
            if out.grad is None:
                continue
            for tensor, grad in zip(inputs, backward_fn(out.grad)):
                _accumulate(tensor, grad)


_UNARY = {"relu", "log_softmax", "log1m_softmax", "mean", "negate"}


def forward_op(tape, kind, inputs, **kwargs):
    """Dispatch a recorded forward op by kind name."""
    if kind == "matmul":
        return tape.matmul(*inputs)
    if kind == "add_bias":
        return tape.add_bias(*inputs)
    if kind == "gather_label":
        return tape.gather_label(inputs[0], kwargs["labels"])
    if kind == "scale":
        return tape.scale(inputs[0], kwargs["c"])
    if kind == "clamp_min":
        return tape.clamp_min(inputs[0], kwargs["c"])
    if kind == "grl":
        return tape.grl(inputs[0], kwargs.get("eta", 1.0))
    if kind in _UNARY:
        return getattr(tape, kind)(inputs[0])
    raise ValueError(f"unknown op kind: {kind}")


def grl_eta_ramp(progress):
    """Standard adversarial-coefficient ramp over training progress in [0,1]."""
    return 2.0 / (1.0 + np.exp(-10.0 * progress)) - 1.0


class SGDMomentum:
    """Classical momentum: v <- mu*v + (g + wd*theta); theta <- theta - lr*v."""

    def __init__(self, params, learning_rate, momentum=0.0, weight_decay=0.0):
        if learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if not 0.0 <= momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        self.params = list(params)
        self.learning_rate = float(learning_rate)
        self.momentum = float(momentum)
        self.weight_decay = float(weight_decay)
        self.velocity = [np.zeros_like(p.data) for p in self.params]

    def step(self, learning_rate=None):
        lr = self.learning_rate if learning_rate is None else float(learning_rate)
        for p, v in zip(self.params, self.velocity):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if self.weight_decay:
                g = g + self.weight_decay * p.data
            v *= self.momentum
            v += g
            p.data -= lr * v

    def zero_grad(self):
        for p in self.params:
            p.grad = None


def finite_difference_grad(loss_fn, tensors, h=1e-5):
    """Central-difference gradients of loss_fn() w.r.t. each tensor's data."""
    grads = []
    for t in tensors:
        g = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(loss_fn())
            flat[i] = orig - h
            down = float(loss_fn())
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def check_gradients(loss_fn, tensors, h=1e-5, rtol=1e-5):
    """Compare analytic grads (already populated) against central differences.

    Returns the max scaled error; caller asserts against rtol.
    """
    numeric = finite_difference_grad(loss_fn, tensors, h=h)
    worst = 0.0
    for t, num in zip(tensors, numeric):
        ana = t.grad if t.grad is not None else np.zeros_like(t.data)
        scale = np.maximum(1.0, np.maximum(np.abs(ana), np.abs(num)))
        worst = max(worst, float(np.max(np.abs(ana - num) / scale)))
    return worst
