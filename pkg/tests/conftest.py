"""Shared fixtures and small builders used across the test modules."""

import numpy as np
import pytest

from madglab.margins import pair_index_map
from madglab.models import MadgModel, MLPConfig
from madglab.oracle import DiscreteDomain, FiniteClass


def tiny_model(input_dim=3, num_classes=2, num_sources=2, seed=0,
               hidden_dims=(8,), feature_dim=4, scheme="full", grl_eta=1.0):
    cfg = MLPConfig(input_dim=input_dim, num_classes=num_classes,
                    hidden_dims=hidden_dims, feature_dim=feature_dim,
                    init_seed=seed)
    return MadgModel(cfg, pair_index_map(num_sources, scheme),
                     grl_eta=grl_eta)


def random_domain(rng, n_points, num_classes):
    ids = np.arange(n_points)
    labels = rng.integers(0, num_classes, size=n_points)
    probs = rng.dirichlet(np.ones(n_points))
    return DiscreteDomain(ids, labels, probs)


def random_class(rng, n_funcs, n_points, num_classes):
    return FiniteClass(rng.normal(size=(n_funcs, n_points, num_classes)))


@pytest.fixture
def rng():
    return np.random.default_rng(0)
