"""Compiled hot-path kernels for lifting and the streaming rank-one update.

Both kernels are deliberately scalar-looped: every caller (single state or
column batch) goes through the same arithmetic, so per-sample and batched
lifting agree bit for bit, and the streaming recursion has no per-call
temporary allocations.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def lift_columns(centers, gamma, include_state, states_rows, out_rows):
    """Evaluate Gaussian RBF observables for row-stacked states.

    states_rows is (M, N) with one state per row; out_rows is (M, K) and is
    filled in place. When include_state is true the raw state occupies the
    first N feature slots. Squared distances are formed by explicit
    differencing, never the expanded Gram identity, so they are exactly
    nonnegative and every RBF value lands in (0, 1].
    """
    m, n = states_rows.shape
    n_rbf = centers.shape[0]
    offset = n if include_state else 0
    for c in range(m):
        if include_state:
            for j in range(n):
                out_rows[c, j] = states_rows[c, j]
        for k in range(n_rbf):
            s = 0.0
            for j in range(n):
                d = centers[k, j] - states_rows[c, j]
                s += d * d
            out_rows[c, offset + k] = np.exp(-gamma * s)


@njit(cache=True, fastmath={"contract", "reassoc", "nsz"})
def rank_one_stream_update(phi_inv_lower, z, u, v, work):
    """One streaming step: rank-one downdate of phi^-1 and accumulation of z.

    phi_inv_lower holds the inverse Gram matrix with only its lower triangle
    meaningful. The downdate subtracts w w^T with w = (phi^-1 u) / sqrt(denom),
    so symmetry is preserved exactly (a float product commutes) and only the
    triangle is ever written. z accumulates v u^T in full. Returns the
    Sherman-Morrison denominator 1 + u^T phi^-1 u, which is >= 1 whenever
    phi^-1 is positive definite.

    Cost is O(K^2) independent of how many samples were absorbed before.
    """
    kdim = u.shape[0]
    # work = phi^-1 @ u, reading each stored triangle entry once and
    # scattering its mirrored contribution.
    for i in range(kdim):
        work[i] = 0.0
    for i in range(kdim):
        ui = u[i]
        s = 0.0
        for j in range(i):
            pij = phi_inv_lower[i, j]
            s += pij * u[j]
            work[j] += pij * ui
        work[i] += s + phi_inv_lower[i, i] * ui
    denom = 1.0
    for i in range(kdim):
        denom += u[i] * work[i]
    scale = np.sqrt(1.0 / denom)
    for i in range(kdim):
        work[i] *= scale
    for i in range(kdim):
        wi = work[i]
        vi = v[i]
        for j in range(i + 1):
            phi_inv_lower[i, j] -= wi * work[j]
        for j in range(kdim):
            z[i, j] += vi * u[j]
    return denom
