"""Exact theory computations on finite discrete domains.

Domains are finite distributions over an input-id universe {0..U-1};
hypothesis classes are explicit score tables. Every supremum and minimum
is an exact enumeration, so these values serve as ground truth for the
empirical and network-based estimators.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from .margins import phi_rho

TOL = 1e-10


@dataclass(frozen=True)
class DiscreteDomain:
    """Finite labeled distribution: (input id, label) atoms with probabilities."""

    ids: np.ndarray      # (n,) int input ids
    labels: np.ndarray   # (n,) int labels in {0..k-1}
    probs: np.ndarray    # (n,) nonnegative, sums to 1

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        labels = np.asarray(self.labels, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if not (len(ids) == len(labels) == len(probs)):
            raise ValueError("ids, labels and probs must share a length")
        if probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be a distribution summing to 1")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, ids, labels):
        n = len(ids)
        return cls(np.asarray(ids), np.asarray(labels), np.full(n, 1.0 / n))


class FiniteClass:
    """Explicit enumeration of scoring functions as an (F, U, k) table."""

    def __init__(self, tables):
        tables = np.asarray(tables, dtype=np.float64)
        if tables.ndim != 3 or tables.shape[0] == 0:
            raise ValueError("tables must be a nonempty (F, U, k) array")
        self.tables = tables

    def __len__(self):
        return self.tables.shape[0]

    @property
    def num_inputs(self):
        return self.tables.shape[1]

    @property
    def num_classes(self):
        return self.tables.shape[2]


def validate_simplex(weights):
    w = np.asarray(weights, dtype=np.float64)
    if w.min() < 0 or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    return w


def mixture(domains, weights):
    """Pointwise probability mixture of domains sharing a (id, label) universe."""
    weights = validate_simplex(weights)
    if len(domains) != len(weights):
        raise ValueError("one weight per domain")
    atoms = {}
    for dom, w in zip(domains, weights):
        for i, y, p in zip(dom.ids, dom.labels, dom.probs):
            atoms[(int(i), int(y))] = atoms.get((int(i), int(y)), 0.0) + w * p
    keys = sorted(atoms)
    ids = np.array([i for i, _ in keys], dtype=np.int64)
    labels = np.array([y for _, y in keys], dtype=np.int64)
    probs = np.array([atoms[key] for key in keys])
    return DiscreteDomain(ids, labels, probs / probs.sum())


def _margins_at(table, ids, labels):
    """Margins of a score table at given (id, label) pairs; vectorized over F."""
    scores = table[..., ids, :]                      # (..., n, k)
    rows = np.arange(len(ids))
    own = scores[..., rows, labels]
    masked = scores.copy()
    masked[..., rows, labels] = -np.inf
    return 0.5 * (own - masked.max(axis=-1))


def h_of(table, ids):
    """Argmax labels of a score table at the given input ids."""
    return table[ids, :].argmax(axis=-1)


def zero_one_error(domain, f_table):
    """Exact misclassification probability of the argmax labeler."""
    pred = h_of(f_table, domain.ids)
    return float(domain.probs[pred != domain.labels].sum())


def exact_margin_error(domain, f_table, rho):
    m = _margins_at(f_table, domain.ids, domain.labels)
    return float((domain.probs * phi_rho(m, rho)).sum())


def exact_disparity(domain, fprime_table, f_table, rho):
    """Exact expected ramp loss of f' at f's predicted labels."""
    h = h_of(f_table, domain.ids)
    m = _margins_at(fprime_table, domain.ids, h)
    return float((domain.probs * phi_rho(m, rho)).sum())


def _disparities_all(cls, f_table, domain, rho):
    """exact_disparity of every class member on one domain; (F,) vector."""
    h = h_of(f_table, domain.ids)
    m = _margins_at(cls.tables, domain.ids, h)
    return (domain.probs * phi_rho(m, rho)).sum(axis=-1)


def exact_mdd(cls, f_table, domain_i, domain_k, rho):
    """Exact margin disparity discrepancy: sup over the enumerated class."""
    disp_k = _disparities_all(cls, f_table, domain_k, rho)
    disp_i = _disparities_all(cls, f_table, domain_i, rho)
    return float((disp_k - disp_i).max())


def ideal_loss_hat_lambda(cls, alpha, sources, target, rho):
    """Exact min over the class of alpha-weighted source + target margin errors."""
    alpha = validate_simplex(alpha)
    total = np.zeros(len(cls))
    for a, dom in zip(alpha, sources):
        m = _margins_at(cls.tables, dom.ids, dom.labels)
        total += a * (dom.probs * phi_rho(m, rho)).sum(axis=-1)
    m = _margins_at(cls.tables, target.ids, target.labels)
    total += (target.probs * phi_rho(m, rho)).sum(axis=-1)
    return float(total.min())


def ideal_loss_bar_lambda(cls, pi, sources, unseen, rho):
    """Same minimum with pi over all sources and the unseen domain as target."""
    return ideal_loss_hat_lambda(cls, pi, sources, unseen, rho)


def simplex_grid(num_sources, resolution):
    """All weight vectors with entries m/resolution summing to 1."""
    if resolution < 1:
        raise ValueError("resolution must be >= 1")

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for head in range(total + 1):
            for rest in compositions(total - head, parts - 1):
                yield (head,) + rest

    grid = [np.array(c, dtype=np.float64) / resolution
            for c in compositions(resolution, num_sources)]
    assert len(grid) == comb(resolution + num_sources - 1, num_sources - 1)
    return grid


def epsilon_max_pairwise(cls, f_table, sources, rho):
    """Largest exact MDD over ordered source pairs."""
    if len(sources) < 2:
        raise ValueError("need at least 2 sources")
    best = -np.inf
    for i, di in enumerate(sources):
        for k, dk in enumerate(sources):
            if i == k:
                continue
            best = max(best, exact_mdd(cls, f_table, di, dk, rho))
    return float(best)


def hull_projection(cls, f_table, unseen, sources, rho, resolution):
    """Grid-argmin of the MDD from source mixtures to the unseen domain.

    The minimized direction is d(mixture, unseen), the one the hull-based
    error bound consumes; gamma is the attained minimum.
    """
    best_w, best_val = None, np.inf
    for w in simplex_grid(len(sources), resolution):
        val = exact_mdd(cls, f_table, mixture(sources, w), unseen, rho)
        if val < best_val:
            best_w, best_val = w, val
    return best_w, float(best_val)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one theory check on one instance."""

    name: str
    seed: int
    lhs: float
    rhs: float

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def violated(self):
        return self.slack < -TOL

    def report_line(self):
        return (f"{self.name},{self.seed},{self.lhs!r},{self.rhs!r},"
                f"{self.slack!r},{self.violated}")


def check_lemma1(cls, f_table, alpha, sources, target, rho, seed=0):
    """Mixture MDD vs the alpha-weighted sum of pairwise MDDs."""
    mixed = mixture(sources, alpha)
    lhs = exact_mdd(cls, f_table, mixed, target, rho)
    rhs = sum(a * exact_mdd(cls, f_table, d, target, rho)
              for a, d in zip(alpha, sources))
    return CheckResult("lemma1", seed, lhs, rhs)


def check_lemma2(cls, f_table, sources, rho, resolution, seed=0):
    """Every pair of hull grid points stays within the pairwise-max MDD."""
    eps = epsilon_max_pairwise(cls, f_table, sources, rho)
    grid = [mixture(sources, w) for w in simplex_grid(len(sources), resolution)]
    worst = -np.inf
    for da in grid:
        for db in grid:
            worst = max(worst, exact_mdd(cls, f_table, da, db, rho))
    return CheckResult("lemma2", seed, worst, eps)


def check_theorem1(cls, f_table, alpha, sources, target, rho, seed=0):
    """Unlabeled-target 0-1 error vs the weighted source error + MDD bound."""
    alpha = validate_simplex(alpha)
    lhs = zero_one_error(target, f_table)
    rhs = sum(a * (exact_margin_error(d, f_table, rho)
                   + exact_mdd(cls, f_table, d, target, rho))
              for a, d in zip(alpha, sources))
    rhs += ideal_loss_hat_lambda(cls, alpha, sources, target, rho)
    return CheckResult("theorem1", seed, lhs, rhs)


def check_theorem2_per_pi(cls, f_table, pi, sources, unseen, rho, seed=0):
    """Unseen-domain 0-1 error vs the hull bound at one mixture weight pi."""
    pi = validate_simplex(pi)
    lhs = zero_one_error(unseen, f_table)
    eps = epsilon_max_pairwise(cls, f_table, sources, rho)
    mixed = mixture(sources, pi)
    rhs = sum(p * exact_margin_error(d, f_table, rho)
              for p, d in zip(pi, sources))
    rhs += eps + exact_mdd(cls, f_table, mixed, unseen, rho)
    rhs += ideal_loss_bar_lambda(cls, pi, sources, unseen, rho)
    return CheckResult("theorem2", seed, lhs, rhs)


# ---- randomized instances -------------------------------------------------


@dataclass
class RandomInstance:
    cls: FiniteClass
    f_table: np.ndarray
    sources: list
    target: DiscreteDomain
    alpha: np.ndarray
    rho: float
    seed: int


def random_instance(seed, max_points=6, max_functions=30,
                    num_classes_choices=(2, 3), num_sources_choices=(2, 3)):
    """A small random (class, f, domains) instance for the oracle suites."""
    rng = np.random.default_rng(seed)
    k = int(rng.choice(num_classes_choices))
    n_points = int(rng.integers(2, max_points + 1))
    n_funcs = int(rng.integers(2, max_functions + 1))
    n_sources = int(rng.choice(num_sources_choices))

    tables = rng.normal(size=(n_funcs, n_points, k))
    f_table = tables[int(rng.integers(n_funcs))]

    def random_domain():
        ids = np.arange(n_points)
        labels = rng.integers(0, k, size=n_points)
        probs = rng.dirichlet(np.ones(n_points))
        return DiscreteDomain(ids, labels, probs)

    sources = [random_domain() for _ in range(n_sources)]
    target = random_domain()
    alpha = rng.dirichlet(np.ones(n_sources))
    rho = float(rng.uniform(0.2, 2.0))
    return RandomInstance(FiniteClass(tables), f_table, sources, target,
                          alpha, rho, seed)


def run_check_suite(num_instances=200, seed=0, grid_resolution=4):
    """Run all four checkers over randomized instances; returns CheckResults."""
    results = []
    for idx in range(num_instances):
        inst = random_instance(seed + idx)
        results.append(check_lemma1(inst.cls, inst.f_table, inst.alpha,
                                    inst.sources, inst.target, inst.rho,
                                    seed=inst.seed))
        results.append(check_lemma2(inst.cls, inst.f_table, inst.sources,
                                    inst.rho, grid_resolution, seed=inst.seed))
        results.append(check_theorem1(inst.cls, inst.f_table, inst.alpha,
                                      inst.sources, inst.target, inst.rho,
                                      seed=inst.seed))
        pi_grid = simplex_grid(len(inst.sources), grid_resolution)
        worst = None
        for pi in pi_grid:
            res = check_theorem2_per_pi(inst.cls, inst.f_table, pi,
                                        inst.sources, inst.target, inst.rho,
                                        seed=inst.seed)
            if worst is None or res.slack < worst.slack:
                worst = res
        results.append(worst)
    return results


def write_violation_report(results, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("check_name,instance_seed,lhs,rhs,slack,violated\n")
        for res in results:
            fh.write(res.report_line() + "\n")
