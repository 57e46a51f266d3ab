"""Koopman operator estimation: batch least-squares solvers and the streaming
rank-one recursion.

All estimators share one convention: the operator K acts on lifted column
vectors, K Psi(x) ~ Psi(y), and minimizes ||K Yp - Yf||_F over the data. The
streaming path maintains

    phi   = delta I + sum_i Psi(x_i) Psi(x_i)^T      (held as phi^-1)
    z     =           sum_i Psi(y_i) Psi(x_i)^T

and reads the operator off as K = z phi^-1. Each new sample costs O(K^2): the
inverse is carried forward with the Sherman-Morrison identity, never refactored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._kernels import rank_one_stream_update
from .dictionary import Dictionary


class SnapshotPair(NamedTuple):
    """One (x, y) sample with the semantic contract y = T(x)."""

    x: np.ndarray
    y: np.ndarray


@dataclass
class KoopmanModel:
    """A frozen operator with its dictionary and optional state projection."""

    k_matrix: np.ndarray
    dictionary: Dictionary
    delta: float
    sample_count: int
    projection: np.ndarray | None = None

    def __post_init__(self):
        k = self.dictionary.feature_dim
        self.k_matrix = np.asarray(self.k_matrix, dtype=float)
        if self.k_matrix.shape != (k, k):
            raise ValueError(f"k_matrix must be ({k}, {k})")
        if not np.isfinite(self.k_matrix).all():
            raise ValueError("k_matrix must be finite")
        if self.projection is not None:
            self.projection = np.asarray(self.projection, dtype=float)
            if self.projection.shape != (self.dictionary.state_dim, k):
                raise ValueError(
                    f"projection must be ({self.dictionary.state_dim}, {k})"
                )

    def with_projection(self, projection) -> "KoopmanModel":
        return KoopmanModel(
            self.k_matrix.copy(),
            self.dictionary,
            self.delta,
            self.sample_count,
            projection,
        )

    def to_json_dict(self) -> dict:
        return {
            "dict": self.dictionary.to_json_dict(),
            "delta": self.delta,
            "sample_count": self.sample_count,
            "k_matrix": self.k_matrix.ravel().tolist(),
            "projection": None
            if self.projection is None
            else self.projection.ravel().tolist(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "KoopmanModel":
        dictionary = Dictionary.from_json_dict(doc["dict"])
        k = dictionary.feature_dim
        proj = doc.get("projection")
        return cls(
            np.asarray(doc["k_matrix"], dtype=float).reshape(k, k),
            dictionary,
            float(doc["delta"]),
            int(doc["sample_count"]),
            None
            if proj is None
            else np.asarray(proj, dtype=float).reshape(dictionary.state_dim, k),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def load(cls, path) -> "KoopmanModel":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


class KoopmanStream:
    """Mutable streaming state of the recursive estimator.

    Single-writer: updates must be applied in arrival order and never
    concurrently. Snapshots and operator reads return independent arrays that
    are safe to hand to other threads.

    The inverse Gram matrix starts at (1/delta) I and stays symmetric positive
    definite; only its lower triangle is stored and updated, so the exposed
    ``phi_inv`` is symmetric by construction.
    """

    def __init__(self, dictionary: Dictionary, delta: float):
        if not np.isfinite(delta) or delta <= 0:
            raise ValueError("delta must be a positive real (phi_0 = delta I must be SPD)")
        self.dictionary = dictionary
        self.delta = float(delta)
        k = dictionary.feature_dim
        self._phi_inv_lower = np.eye(k) / self.delta
        self._z = np.zeros((k, k))
        self._work = np.empty(k)
        self.count = 0
        self.rejected = 0
        self.last_denominator = None

    @property
    def feature_dim(self) -> int:
        return self.dictionary.feature_dim

    @property
    def phi_inv(self) -> np.ndarray:
        """Current inverse Gram matrix (full symmetric copy)."""
        lower = np.tril(self._phi_inv_lower)
        return lower + np.tril(self._phi_inv_lower, -1).T

    @property
    def z(self) -> np.ndarray:
        """Current cross-covariance sum_i Psi(y_i) Psi(x_i)^T (copy)."""
        return self._z.copy()

    def update(self, x, y) -> bool:
        """Absorb one snapshot pair; returns False if the pair was rejected.

        Non-finite samples are counted in ``rejected`` and leave the state
        untouched. Dimension mismatches raise.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n = self.dictionary.state_dim
        if x.shape != (n,) or y.shape != (n,):
            raise ValueError(f"snapshot pair must be two vectors of dimension {n}")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            self.rejected += 1
            return False
        u = self.dictionary.lift(x)
        v = self.dictionary.lift(y)
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            self.rejected += 1
            return False
        self.last_denominator = rank_one_stream_update(
            self._phi_inv_lower,
            self._z,
            np.ascontiguousarray(u),
            np.ascontiguousarray(v),
            self._work,
        )
        self.count += 1
        return True

    def current_operator(self) -> np.ndarray:
        """K = z phi^-1 at the current count. Pure read; state unchanged."""
        return self._z @ self.phi_inv

    def snapshot(self) -> KoopmanModel:
        """Freeze the current operator into an immutable model."""
        return KoopmanModel(
            self.current_operator(),
            self.dictionary,
            self.delta,
            self.count,
        )


def stream_init(dictionary: Dictionary, delta: float) -> KoopmanStream:
    """Fresh stream with phi^-1 = (1/delta) I and z = 0."""
    return KoopmanStream(dictionary, delta)


def stream_fit(dictionary: Dictionary, xp, xf, delta: float) -> KoopmanStream:
    """Feed column-aligned snapshot matrices through a fresh stream in order.

    Equivalent, column for column, to calling ``update`` in a loop.
    """
    xp = np.asarray(xp, dtype=float)
    xf = np.asarray(xf, dtype=float)
    if xp.shape != xf.shape or xp.ndim != 2:
        raise ValueError("xp and xf must be matrices of identical shape")
    stream = KoopmanStream(dictionary, delta)
    for i in range(xp.shape[1]):
        stream.update(xp[:, i], xf[:, i])
    return stream


def fit_batch_pinv(yp, yf) -> np.ndarray:
    """EDMD solution K = Yf pinv(Yp), minimizing ||K Yp - Yf||_F.

    Singular values below max(K, M) * eps relative to the largest are treated
    as zero, the conventional rank cutoff.
    """
    yp = np.asarray(yp, dtype=float)
    yf = np.asarray(yf, dtype=float)
    if yp.shape != yf.shape or yp.ndim != 2:
        raise ValueError("Yp and Yf must be matrices of identical shape")
    if yp.shape[1] == 0:
        return np.zeros((yp.shape[0], yp.shape[0]))
    if not (np.isfinite(yp).all() and np.isfinite(yf).all()):
        raise ValueError("lifted data must be finite")
    rcond = max(yp.shape) * np.finfo(float).eps
    return yf @ np.linalg.pinv(yp, rcond=rcond)


def fit_batch_ridge(yp, yf, delta: float) -> np.ndarray:
    """Tikhonov-regularized EDMD: K = Yf Yp^T (Yp Yp^T + delta I)^-1.

    Solved by Cholesky factorization of the SPD Gram matrix. This is the
    closed form of the streaming recursion initialized at phi_0 = delta I and
    therefore serves as its independent oracle.
    """
    yp = np.asarray(yp, dtype=float)
    yf = np.asarray(yf, dtype=float)
    if yp.shape != yf.shape or yp.ndim != 2:
        raise ValueError("Yp and Yf must be matrices of identical shape")
    if not np.isfinite(delta) or delta <= 0:
        raise ValueError("delta must be a positive real")
    if yp.size and not (np.isfinite(yp).all() and np.isfinite(yf).all()):
        raise ValueError("lifted data must be finite")
    k = yp.shape[0]
    gram = yp @ yp.T
    gram[np.diag_indices_from(gram)] += delta
    factor = cho_factor(gram, lower=True)
    return cho_solve(factor, (yf @ yp.T).T).T
