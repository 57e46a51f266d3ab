"""Observable dictionaries: the lifting map from state space to feature space.

A dictionary fixes a finite set of scalar observables psi_1..psi_K and lifts a
state x in R^N to the feature vector (psi_1(x), ..., psi_K(x)). Three kinds are
supported:

* ``linear``      -- the identity observables, K = N (plain DMD);
* ``gaussian_rbf``-- K Gaussian bumps exp(-gamma ||x - c_k||^2);
* ``composite``   -- the raw state followed by the RBF block, K = N + K_rbf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from ._kernels import lift_columns

LINEAR = "linear"
GAUSSIAN_RBF = "gaussian_rbf"
COMPOSITE = "composite"

_KINDS = (LINEAR, GAUSSIAN_RBF, COMPOSITE)


@dataclass(frozen=True)
class Dictionary:
    """Immutable observable set; safe to share across threads.

    For RBF kinds, ``centers`` is (K_rbf, N) with one center per row and
    ``gamma`` is the inverse squared width. Linear dictionaries carry neither.
    """

    kind: str
    state_dim: int
    centers: np.ndarray | None = None
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown dictionary kind {self.kind!r}")
        if self.state_dim < 1:
            raise ValueError("state_dim must be a positive integer")
        if self.kind == LINEAR:
            if self.centers is not None or self.gamma is not None:
                raise ValueError("linear dictionaries take no centers or gamma")
            return
        centers = np.asarray(self.centers, dtype=float)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise ValueError("centers must be a (K_rbf, N) matrix")
        if centers.shape[1] != self.state_dim:
            raise ValueError(
                f"center dimension {centers.shape[1]} does not match state_dim {self.state_dim}"
            )
        if not np.isfinite(centers).all():
            raise ValueError("centers must be finite")
        if self.gamma is None or not math.isfinite(self.gamma) or self.gamma <= 0:
            raise ValueError("gamma must be a positive finite real")
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def include_state(self) -> bool:
        return self.kind != GAUSSIAN_RBF

    @property
    def n_rbf(self) -> int:
        return 0 if self.centers is None else self.centers.shape[0]

    @property
    def feature_dim(self) -> int:
        if self.kind == LINEAR:
            return self.state_dim
        if self.kind == GAUSSIAN_RBF:
            return self.n_rbf
        return self.state_dim + self.n_rbf

    def lift(self, x) -> np.ndarray:
        """Lift a single state to its K-vector of observable values."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.state_dim:
            raise ValueError(f"state must be a vector of dimension {self.state_dim}")
        return self.lift_batch(x.reshape(-1, 1))[:, 0]

    def lift_batch(self, states) -> np.ndarray:
        """Lift column-stacked states (N, M) to column-stacked features (K, M)."""
        states = np.asarray(states, dtype=float)
        if states.ndim != 2 or states.shape[0] != self.state_dim:
            raise ValueError(f"states must be an ({self.state_dim}, M) matrix")
        if not np.isfinite(states).all():
            raise ValueError("states must be finite")
        if self.kind == LINEAR:
            return states.copy()
        rows = np.ascontiguousarray(states.T)
        out = np.empty((states.shape[1], self.feature_dim))
        lift_columns(self.centers, self.gamma, self.include_state, rows, out)
        return out.T

    def to_json_dict(self) -> dict:
        centers = [] if self.centers is None else self.centers.ravel().tolist()
        return {
            "kind": self.kind,
            "state_dim": self.state_dim,
            "gamma": self.gamma,
            "include_state": self.include_state,
            "centers": centers,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Dictionary":
        kind = doc["kind"]
        state_dim = int(doc["state_dim"])
        if kind == LINEAR:
            return cls(LINEAR, state_dim)
        centers = np.asarray(doc["centers"], dtype=float).reshape(-1, state_dim)
        built = cls(kind, state_dim, centers, doc["gamma"])
        if bool(doc.get("include_state", built.include_state)) != built.include_state:
            raise ValueError("include_state flag inconsistent with dictionary kind")
        return built


def make_linear(state_dim: int) -> Dictionary:
    """Identity dictionary: lift(x) = x, K = N."""
    if state_dim < 1:
        raise ValueError("state_dim must be a positive integer")
    return Dictionary(LINEAR, int(state_dim))


def make_rbf(centers, gamma: float, include_state: bool = True) -> Dictionary:
    """Gaussian RBF dictionary psi_k(x) = exp(-gamma ||x - c_k||^2).

    With include_state the raw state coordinates are prepended, which
    guarantees the state-space projection problem has an exact solution.
    """
    centers = np.asarray(centers, dtype=float)
    if centers.ndim != 2:
        raise ValueError("centers must be a (K_rbf, N) matrix")
    kind = COMPOSITE if include_state else GAUSSIAN_RBF
    return Dictionary(kind, centers.shape[1], centers, gamma)


def centers_from_data(states, k: int, seed: int) -> np.ndarray:
    """Pick k RBF centers by seeded uniform sampling of data columns.

    Sampling is without replacement, so the centers are k distinct snapshots;
    deterministic for a fixed seed.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2:
        raise ValueError("states must be an (N, M) matrix")
    if not np.isfinite(states).all():
        raise ValueError("states must be finite")
    m = states.shape[1]
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= {m} data columns, got k={k}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(m, size=k, replace=False)
    return states[:, idx].T.copy()


def median_gamma(centers) -> float:
    """Median-heuristic width: 1 / median(pairwise center distance)^2."""
    centers = np.asarray(centers, dtype=float)
    if centers.shape[0] < 2:
        return 1.0
    med = float(np.median(pdist(centers)))
    if med <= 0.0:
        return 1.0
    return 1.0 / med**2
