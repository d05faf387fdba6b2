"""madglab: margin-based adversarial domain generalization at desk scale.

A small numpy laboratory pairing a trainable minimax loop (feature
extractor, main classifier, auxiliary discrepancy heads behind a
gradient-reversal junction) with exact brute-force oracles that verify the
underlying margin-discrepancy generalization theory on finite instances.
"""

from .autodiff import SGDMomentum, Tape, Tensor
from .data import DomainDataset, SyntheticSpec, batch_sampler, generate
from .margins import (MarginParams, PairIndex, margin, margin_disparity,
                      margin_error, pair_index_map, phi_rho, surrogate_L,
                      surrogate_Lprime)
from .models import MadgModel, MLPConfig, init_model
from .oracle import (DiscreteDomain, FiniteClass, exact_disparity, exact_mdd,
                     mixture, simplex_grid, zero_one_error)
from .training import TrainConfig, da_train, erm_train, evaluate, madg_train

__version__ = "0.1.0"

__all__ = [
    "SGDMomentum", "Tape", "Tensor",
    "DomainDataset", "SyntheticSpec", "batch_sampler", "generate",
    "MarginParams", "PairIndex", "margin", "margin_disparity", "margin_error",
    "pair_index_map", "phi_rho", "surrogate_L", "surrogate_Lprime",
    "MadgModel", "MLPConfig", "init_model",
    "DiscreteDomain", "FiniteClass", "exact_disparity", "exact_mdd",
    "mixture", "simplex_grid", "zero_one_error",
    "TrainConfig", "da_train", "erm_train", "evaluate", "madg_train",
]
