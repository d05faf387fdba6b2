"""Synthetic multi-domain datasets, a CSV sample format, balanced batching.

All generators are deterministic functions of their spec (seed included).
The colored generator mirrors the standard spurious-correlation protocol:
labels come from a latent shape bit with 25% flips and a color block that
tracks the observed label at a per-domain correlation.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class DomainDataset:
    domain_id: int
    X: np.ndarray  # (n, d) float64
    y: np.ndarray  # (n,) int labels in {0..k-1}

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or len(self.X) != len(self.y) or len(self.y) < 1:
            raise ValueError("X must be (n, d) with one label per row, n >= 1")

    @property
    def n(self):
        return len(self.y)

    @property
    def dim(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str  # two_moons | colored | gaussian_shift
    domain_params: tuple  # per-domain rotation deg / correlation / shift vector
    n_per_domain: int = 500
    label_noise: float = 0.25
    noise_scale: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("two_moons", "colored", "gaussian_shift"):
            raise ValueError(f"unknown dataset kind: {self.kind}")
        if not 0.0 <= self.label_noise < 0.5:
            raise ValueError("label_noise must be in [0, 0.5)")
        if self.kind == "colored":
            for c in self.domain_params:
                if not 0.0 <= c <= 1.0:
                    raise ValueError("correlation must be in [0, 1]")


def _domain_rng(spec, domain_id, stream):
    return np.random.default_rng([spec.seed, domain_id, stream])


def gen_two_moons(spec):
    """Interleaved half-circles, rotated per domain, labels balanced."""
    out = []
    for dom, angle in enumerate(spec.domain_params):
        rng = _domain_rng(spec, dom, 0)
        n = spec.n_per_domain
        n0 = n // 2
        t0 = rng.uniform(0.0, np.pi, size=n0)
        t1 = rng.uniform(0.0, np.pi, size=n - n0)
        pts = np.concatenate([
            np.stack([np.cos(t0), np.sin(t0)], axis=1),
            np.stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)], axis=1),
        ])
        y = np.concatenate([np.zeros(n0, dtype=np.int64),
                            np.ones(n - n0, dtype=np.int64)])
        pts += rng.normal(scale=spec.noise_scale, size=pts.shape)
        theta = np.deg2rad(angle)
        rot = np.array([[np.cos(theta), -np.sin(theta)],
                        [np.sin(theta), np.cos(theta)]])
        flip = rng.random(n) < spec.label_noise
        y = np.where(flip, 1 - y, y)
        out.append(DomainDataset(dom, pts @ rot.T, y))
    return out


# Feature layout for the colored generator: a weak shape block and a
# strong color block, each a noisy copy of its bit.
COLOR_SHAPE_DIMS = 2
COLOR_COLOR_DIMS = 2
COLOR_SHAPE_NOISE = 0.75
COLOR_COLOR_NOISE = 0.1


def gen_colored(spec):
    """Spurious-correlation domains: color tracks label at a set correlation."""
    out = []
    for dom, corr in enumerate(spec.domain_params):
        rng = _domain_rng(spec, dom, 0)
        n = spec.n_per_domain
        shape_bit = rng.integers(0, 2, size=n)
        label = np.where(rng.random(n) < spec.label_noise,
                         1 - shape_bit, shape_bit)
        color_bit = np.where(rng.random(n) < corr, label, 1 - label)
        shape_block = (shape_bit[:, None]
                       + rng.normal(scale=COLOR_SHAPE_NOISE,
                                    size=(n, COLOR_SHAPE_DIMS)))
        color_block = (color_bit[:, None]
                       + rng.normal(scale=COLOR_COLOR_NOISE,
                                    size=(n, COLOR_COLOR_DIMS)))
        X = np.concatenate([shape_block, color_block], axis=1)
        out.append(DomainDataset(dom, X, label.astype(np.int64)))
    return out


def gen_gaussian_shift(spec, num_classes=2, dim=2, separation=3.0):
    """Gaussian class clusters translated per domain by a shift vector."""
    out = []
    for dom, shift in enumerate(spec.domain_params):
        shift = np.asarray(shift, dtype=np.float64)
        rng = _domain_rng(spec, dom, 0)
        n = spec.n_per_domain
        y = rng.integers(0, num_classes, size=n)
        means = np.zeros((num_classes, dim))
        for c in range(num_classes):
            means[c, 0] = c * separation
        X = means[y] + rng.normal(size=(n, dim))
        X += shift
        flip = rng.random(n) < spec.label_noise
        y = np.where(flip, (y + 1) % num_classes, y)
        out.append(DomainDataset(dom, X, y.astype(np.int64)))
    return out


def generate(spec, **kwargs):
    if spec.kind == "two_moons":
        return gen_two_moons(spec)
    if spec.kind == "colored":
        return gen_colored(spec)
    return gen_gaussian_shift(spec, **kwargs)


# ---- CSV schema: domain_id,label,f0,...,f{d-1} -----------------------------


def save_csv(datasets, path):
    datasets = [datasets] if isinstance(datasets, DomainDataset) else datasets
    d = datasets[0].dim
    header = "domain_id,label," + ",".join(f"f{i}" for i in range(d))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for ds in datasets:
            if ds.dim != d:
                raise ValueError("all datasets in one file must share a width")
            for row, label in zip(ds.X, ds.y):
                values = ",".join(repr(float(v)) for v in row)
                fh.write(f"{ds.domain_id},{label},{values}\n")


def load_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file, expected a header row")
    header = lines[0].split(",")
    if header[:2] != ["domain_id", "label"] or len(header) < 3:
        raise ValueError(f"{path}: bad header {lines[0]!r}")
    width = len(header) - 2
    by_domain = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != width + 2:
            raise ValueError(f"{path}:{lineno}: expected {width + 2} fields, "
                             f"got {len(parts)}")
        try:
            dom = int(parts[0])
            label = int(parts[1])
            feats = [float(v) for v in parts[2:]]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed row ({exc})") from exc
        by_domain.setdefault(dom, ([], []))
        by_domain[dom][0].append(feats)
        by_domain[dom][1].append(label)
    if not by_domain:
        raise ValueError(f"{path}: no sample rows")
    return [DomainDataset(dom, np.array(rows), np.array(labels))
            for dom, (rows, labels) in sorted(by_domain.items())]


def batch_sampler(datasets, batch_per_domain, seed, epoch):
    """Yield per-domain aligned batches, reshuffled per epoch.

    Every sample of the longest domain appears exactly once per epoch when
    the batch size divides its length; shorter domains cycle through fresh
    permutations.
    """
    if batch_per_domain < 1:
        raise ValueError("batch_per_domain must be >= 1")
    max_n = max(ds.n for ds in datasets)
    steps = -(-max_n // batch_per_domain)
    needed = steps * batch_per_domain
    streams = []
    for ds in datasets:
        reps = -(-needed // ds.n)
        idx = np.concatenate([
            np.random.default_rng([seed, epoch, ds.domain_id, rep]).permutation(ds.n)
            for rep in range(reps)])
        streams.append(idx[:needed])
    for step in range(steps):
        lo, hi = step * batch_per_domain, (step + 1) * batch_per_domain
        yield [(ds.X[idx[lo:hi]], ds.y[idx[lo:hi]])
               for ds, idx in zip(datasets, streams)]
