"""Synthetic dynamical systems for exercising the identification pipeline.

Two stand-ins are provided: seeded random stable linear systems of arbitrary
dimension, and a classical multi-machine swing-equation network

    d(delta_i)/dt = omega_i
    M_i d(omega_i)/dt = P_i - D_i omega_i - sum_j k_ij sin(delta_i - delta_j)

integrated with fixed-step RK4. Every generator is deterministic under a seed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass
class LinearSystem:
    """Discrete-time map x_{t+1} = A x_t with its cached spectrum."""

    a_matrix: np.ndarray
    dt: float = 0.01
    true_eigenvalues: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.a_matrix = np.asarray(self.a_matrix, dtype=float)
        n = self.a_matrix.shape[0]
        if self.a_matrix.shape != (n, n):
            raise ValueError("a_matrix must be square")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.true_eigenvalues is None:
            self.true_eigenvalues = np.linalg.eigvals(self.a_matrix)

    @property
    def state_dim(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.true_eigenvalues).max())


def random_stable_linear(
    n: int, spectral_radius: float, seed: int, dt: float = 0.01
) -> LinearSystem:
    """Random dense A rescaled to the requested spectral radius (< 1)."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not 0 < spectral_radius < 1:
        raise ValueError("spectral_radius must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    radius = np.abs(np.linalg.eigvals(a)).max()
    a *= spectral_radius / radius
    return LinearSystem(a, dt)


def simulate_linear(
    system: LinearSystem, x0, steps: int, noise_std: float = 0.0, seed: int = 0
) -> np.ndarray:
    """Trajectory x_0, A x_0, ... with optional seeded Gaussian process noise."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if noise_std < 0:
        raise ValueError("noise_std must be nonnegative")
    x0 = np.asarray(x0, dtype=float)
    n = system.state_dim
    if x0.shape != (n,):
        raise ValueError(f"x0 must have dimension {n}")
    out = np.empty((n, steps + 1))
    out[:, 0] = x0
    if noise_std > 0:
        noise = np.random.default_rng(seed).normal(0.0, noise_std, size=(n, steps))
    for t in range(steps):
        out[:, t + 1] = system.a_matrix @ out[:, t]
        if noise_std > 0:
            out[:, t + 1] += noise[:, t]
    return out


@dataclass
class SwingNetwork:
    """Multi-machine swing network; state is (angles, frequencies) in R^{2n}."""

    inertia: np.ndarray
    damping: np.ndarray
    coupling: np.ndarray
    power_injection: np.ndarray

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float)
        self.damping = np.asarray(self.damping, dtype=float)
        self.coupling = np.asarray(self.coupling, dtype=float)
        self.power_injection = np.asarray(self.power_injection, dtype=float)
        n = self.inertia.shape[0]
        if self.damping.shape != (n,) or self.power_injection.shape != (n,):
            raise ValueError("inertia, damping, and power_injection must share length")
        if self.coupling.shape != (n, n):
            raise ValueError("coupling must be (n, n)")
        if (self.inertia <= 0).any() or (self.damping < 0).any():
            raise ValueError("inertia must be positive and damping nonnegative")
        if (self.coupling < 0).any():
            raise ValueError("coupling strengths must be nonnegative")
        if not np.array_equal(self.coupling, self.coupling.T):
            raise ValueError("coupling must be symmetric")
        if np.diag(self.coupling).any():
            raise ValueError("coupling must have a zero diagonal")

    @property
    def n_machines(self) -> int:
        return self.inertia.shape[0]

    @property
    def state_dim(self) -> int:
        return 2 * self.n_machines


def swing_3machine() -> SwingNetwork:
    """Default 3-machine network with a synchronous equilibrium at the origin."""
    return SwingNetwork(
        inertia=[0.2, 0.15, 0.12],
        damping=[0.05, 0.04, 0.03],
        coupling=[[0.0, 1.5, 1.2], [1.5, 0.0, 1.0], [1.2, 1.0, 0.0]],
        power_injection=[0.0, 0.0, 0.0],
    )


def swing_rhs(net: SwingNetwork, state) -> np.ndarray:
    """Vector field of the swing dynamics at the given (angles, frequencies)."""
    state = np.asarray(state, dtype=float)
    if state.shape != (net.state_dim,):
        raise ValueError(f"state must have dimension {net.state_dim}")
    n = net.n_machines
    angles, freqs = state[:n], state[n:]
    # sin(delta_i - delta_j) is antisymmetric, so coupling torques cancel
    # pairwise and total momentum obeys sum_i M_i domega_i = sum_i (P_i - D_i w_i).
    torque = (net.coupling * np.sin(angles[:, None] - angles[None, :])).sum(axis=1)
    d_freqs = (net.power_injection - net.damping * freqs - torque) / net.inertia
    return np.concatenate([freqs, d_freqs])


def swing_energy(net: SwingNetwork, state) -> float:
    """Energy function conserved by the undamped (D = 0) network."""
    state = np.asarray(state, dtype=float)
    n = net.n_machines
    angles, freqs = state[:n], state[n:]
    kinetic = 0.5 * float(np.sum(net.inertia * freqs**2))
    injected = float(np.sum(net.power_injection * angles))
    gaps = angles[:, None] - angles[None, :]
    potential = -0.5 * float(np.sum(net.coupling * np.cos(gaps)))
    return kinetic - injected + potential


def swing_perturbation(
    net: SwingNetwork, angle_std: float, freq_std: float, seed: int
) -> np.ndarray:
    """Seeded random offset from the synchronous state, PMU-experiment style."""
    rng = np.random.default_rng(seed)
    n = net.n_machines
    return np.concatenate(
        [angle_std * rng.standard_normal(n), freq_std * rng.standard_normal(n)]
    )


def simulate_rk4(rhs, x0, dt: float, steps: int) -> np.ndarray:
    """Classical fixed-step fourth-order Runge-Kutta integration.

    If the state leaves the finite range the trajectory is truncated at the
    last finite column, with a warning.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    x = np.asarray(x0, dtype=float).copy()
    out = np.empty((x.shape[0], steps + 1))
    out[:, 0] = x
    for t in range(steps):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * dt * k1)
        k3 = rhs(x + 0.5 * dt * k2)
        k4 = rhs(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(x).all():
            warnings.warn(
                f"integration diverged at step {t + 1}; returning {t + 1} column(s)",
                stacklevel=2,
            )
            return out[:, : t + 1].copy()
        out[:, t + 1] = x
    return out


def to_pairs(trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Split a trajectory into column-aligned (Xp, Xf) snapshot matrices."""
    trajectory = np.asarray(trajectory, dtype=float)
    if trajectory.ndim != 2 or trajectory.shape[1] < 2:
        raise ValueError("trajectory must have at least two columns")
    return trajectory[:, :-1].copy(), trajectory[:, 1:].copy()
