"""Linear prediction with a learned operator: lift once, propagate, project back.

The predictor follows the lifted recursion z_n = K^n z_0 exactly: the initial
condition is lifted once and every later step is a matrix-vector product in
feature space, followed by the projection x_n = C z_n. The projected state is
never re-lifted; the two schemes differ and this module implements the former.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary
from .koopman import KoopmanModel, stream_fit


def fit_projection(dictionary: Dictionary, states) -> tuple[np.ndarray, float]:
    """Least-squares map C from feature space back to state space.

    Minimizes sum_i ||x_i - C Psi(x_i)||^2 over the given snapshot columns,
    solved as X pinv(Psi(X)) with the same rank cutoff as the batch EDMD
    solver. Returns (C, residual) where residual is the objective value.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] < 1:
        raise ValueError("need at least one snapshot column to fit the projection")
    lifted = dictionary.lift_batch(states)
    rcond = max(lifted.shape) * np.finfo(float).eps
    projection = states @ np.linalg.pinv(lifted, rcond=rcond)
    residual = float(np.sum((states - projection @ lifted) ** 2))
    return projection, residual


@dataclass(frozen=True)
class Predictor:
    """A frozen model with its projection, ready to roll out trajectories."""

    model: KoopmanModel

    def __post_init__(self):
        if self.model.projection is None:
            raise ValueError("predictor requires a model with a fitted projection")

    def predict(self, x0, n_steps: int) -> np.ndarray:
        """Predicted states, one column per step; column 0 is C Psi(x0).

        Powers of the operator are never formed; the lifted state is advanced
        by repeated matrix-vector products. If propagation overflows, the
        output is truncated at the offending step with a warning.
        """
        if n_steps < 0:
            raise ValueError("n_steps must be nonnegative")
        k_matrix = self.model.k_matrix
        projection = self.model.projection
        z = self.model.dictionary.lift(np.asarray(x0, dtype=float))
        out = np.empty((projection.shape[0], n_steps + 1))
        out[:, 0] = projection @ z
        for n in range(1, n_steps + 1):
            z = k_matrix @ z
            if not np.isfinite(z).all():
                warnings.warn(
                    f"prediction overflowed at step {n}; returning {n} column(s)",
                    stacklevel=2,
                )
                return out[:, :n].copy()
            out[:, n] = projection @ z
        return out


def mse(predicted, truth) -> tuple[np.ndarray, float]:
    """Per-state mean squared error over the horizon, plus its mean."""
    predicted = np.asarray(predicted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predicted.shape != truth.shape or predicted.ndim != 2:
        raise ValueError("predicted and truth must be matrices of identical shape")
    per_state = np.mean((predicted - truth) ** 2, axis=1)
    return per_state, float(per_state.mean())


@dataclass(frozen=True)
class HorizonResult:
    train_size: int
    per_state_mse: np.ndarray
    mean_mse: float


def evaluate_horizon(
    dictionary: Dictionary,
    delta: float,
    train_sizes,
    trajectory,
    test_window: tuple[int, int],
) -> list[HorizonResult]:
    """Prediction error across the test window for each training size.

    For each size M the streamed model is fit on the first M snapshot pairs
    (trajectory columns 0..M) and the projection on the same window; the
    rollout starts from the first true state of the test window. Every
    training window must end strictly before the test window starts, so the
    model never sees test data.
    """
    trajectory = np.asarray(trajectory, dtype=float)
    if trajectory.ndim != 2:
        raise ValueError("trajectory must be an (N, L+1) matrix")
    start, end = test_window
    if not 0 <= start <= end < trajectory.shape[1]:
        raise ValueError("test window out of trajectory range")
    sizes = [int(m) for m in train_sizes]
    if not sizes:
        raise ValueError("need at least one training size")
    for m in sizes:
        if m < 1:
            raise ValueError("training sizes must be positive")
        if m + 1 > start:
            raise ValueError(
                f"training window of size {m} overlaps the test window at {start}"
            )
    results = []
    truth = trajectory[:, start : end + 1]
    for m in sizes:
        stream = stream_fit(
            dictionary, trajectory[:, :m], trajectory[:, 1 : m + 1], delta
        )
        projection, _ = fit_projection(dictionary, trajectory[:, : m + 1])
        predictor = Predictor(stream.snapshot().with_projection(projection))
        predicted = predictor.predict(trajectory[:, start], end - start)
        if predicted.shape[1] != truth.shape[1]:
            raise ValueError(f"prediction overflowed for training size {m}")
        per_state, mean = mse(predicted, truth)
        results.append(HorizonResult(m, per_state, mean))
    return results
