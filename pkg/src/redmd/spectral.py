"""Eigendecomposition of learned operators and dominant-mode utilities."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .koopman import KoopmanModel


class NumericalFailure(RuntimeError):
    """Raised when an eigensolver fails to converge or returns non-finite output."""


def _sort_order(eigenvalues: np.ndarray) -> np.ndarray:
    # Descending magnitude; ties broken by descending real, then imaginary part.
    return np.lexsort((-eigenvalues.imag, -eigenvalues.real, -np.abs(eigenvalues)))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (descending magnitude) and paired right eigenvectors.

    ``source_count`` records the sample count at which the operator was frozen,
    so eigenvalue trajectories can be indexed by training size.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_count: int

    def __len__(self) -> int:
        return self.eigenvalues.shape[0]


def eig(model: KoopmanModel) -> Spectrum:
    """Full eigendecomposition of the real nonsymmetric operator matrix.

    Uses the LAPACK Hessenberg/QR path; non-convergence raises
    NumericalFailure rather than propagating NaNs.
    """
    matrix = np.asarray(model.k_matrix, dtype=float)
    if not np.isfinite(matrix).all():
        raise ValueError("operator matrix must be finite")
    try:
        values, vectors = scipy.linalg.eig(matrix)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition did not converge: {exc}") from exc
    if not (np.isfinite(values).all() and np.isfinite(vectors).all()):
        raise NumericalFailure("eigensolver returned non-finite output")
    order = _sort_order(values)
    return Spectrum(values[order], vectors[:, order], model.sample_count)


def dominant(spectrum: Spectrum, m: int) -> np.ndarray:
    """First m eigenvalues by magnitude (deterministic tie-breaks)."""
    if not 1 <= m <= len(spectrum):
        raise ValueError(f"need 1 <= m <= {len(spectrum)}, got {m}")
    return spectrum.eigenvalues[:m].copy()


def unstable_modes(spectrum: Spectrum, tol: float = 1e-9) -> np.ndarray:
    """Eigenvalues outside the unit disk inflated by tol, in sort order.

    The default tolerance distinguishes genuine escape from round-off sitting
    on the unit circle.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    values = spectrum.eigenvalues
    return values[np.abs(values) > 1.0 + tol].copy()


def to_continuous(spectrum: Spectrum, dt: float) -> np.ndarray:
    """Map discrete-time eigenvalues to continuous time via log(lambda)/dt.

    Zero eigenvalues have no finite logarithm; they are dropped with a warning
    rather than poisoning the output.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    values = spectrum.eigenvalues
    nonzero = values != 0
    dropped = int((~nonzero).sum())
    if dropped:
        warnings.warn(
            f"dropped {dropped} zero eigenvalue(s) in discrete-to-continuous conversion",
            stacklevel=2,
        )
    return np.log(values[nonzero]) / dt


def greedy_match_distance(estimated, reference) -> float:
    """Largest pairing gap under greedy nearest-neighbor matching in C.

    Each estimated eigenvalue, taken in order, claims its nearest unclaimed
    reference eigenvalue; the returned distance is the maximum |pair gap|.
    Deterministic, and the metric used by the convergence checks.
    """
    estimated = np.asarray(estimated, dtype=complex)
    reference = list(np.asarray(reference, dtype=complex))
    if len(estimated) > len(reference):
        raise ValueError("reference set must be at least as large as the estimate set")
    worst = 0.0
    for value in estimated:
        gaps = [abs(value - r) for r in reference]
        j = int(np.argmin(gaps))
        worst = max(worst, gaps[j])
        reference.pop(j)
    return worst
