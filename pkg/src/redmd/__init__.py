"""Streaming Koopman operator identification.

Learns a finite-dimensional Koopman operator from snapshot pairs, either in
one batch solve or recursively in O(K^2) per new sample, and provides spectral
analysis, a linear trajectory predictor, and synthetic data generators.
"""

from .dictionary import (
    Dictionary,
    centers_from_data,
    make_linear,
    make_rbf,
    median_gamma,
)
from .koopman import (
    KoopmanModel,
    KoopmanStream,
    SnapshotPair,
    fit_batch_pinv,
    fit_batch_ridge,
    stream_fit,
    stream_init,
)
from .predictor import HorizonResult, Predictor, evaluate_horizon, fit_projection, mse
from .spectral import (
    NumericalFailure,
    Spectrum,
    dominant,
    eig,
    greedy_match_distance,
    to_continuous,
    unstable_modes,
)
from .datagen import (
    LinearSystem,
    SwingNetwork,
    random_stable_linear,
    simulate_linear,
    simulate_rk4,
    swing_3machine,
    swing_energy,
    swing_perturbation,
    swing_rhs,
    to_pairs,
)

__version__ = "0.1.0"

__all__ = [
    "Dictionary",
    "HorizonResult",
    "KoopmanModel",
    "KoopmanStream",
    "LinearSystem",
    "NumericalFailure",
    "Predictor",
    "SnapshotPair",
    "Spectrum",
    "SwingNetwork",
    "centers_from_data",
    "dominant",
    "eig",
    "evaluate_horizon",
    "fit_batch_pinv",
    "fit_batch_ridge",
    "fit_projection",
    "greedy_match_distance",
    "make_linear",
    "make_rbf",
    "median_gamma",
    "mse",
    "random_stable_linear",
    "simulate_linear",
    "simulate_rk4",
    "stream_fit",
    "stream_init",
    "swing_3machine",
    "swing_energy",
    "swing_perturbation",
    "swing_rhs",
    "to_continuous",
    "to_pairs",
    "unstable_modes",
]
