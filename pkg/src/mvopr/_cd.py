"""Coordinate-descent kernel on a Gram matrix (numba-compiled)."""

import numpy as np
from numba import njit


@njit(cache=True)
def _sweep(gram, grad, beta, thresh, idx):
    max_delta = 0.0
    for t in range(idx.size):
        j = idx[t]
        gjj = gram[j, j]
        if gjj <= 0.0:
            continue
        old = beta[j]
        z = grad[j] + gjj * old
        if z > thresh[j]:
            new = (z - thresh[j]) / gjj
        elif z < -thresh[j]:
            new = (z + thresh[j]) / gjj
        else:
            new = 0.0
        delta = new - old
        if delta != 0.0:
            beta[j] = new
            for i in range(grad.size):
                grad[i] -= gram[i, j] * delta
            if abs(delta) > max_delta:
                max_delta = abs(delta)
    return max_delta


@njit(cache=True)
def cd_solve(gram, grad, beta, thresh, tol, max_sweeps):
    """Minimise 0.5 b'Gb - c'b + sum thresh_j |b_j| in place.

    ``grad`` must hold ``c - G @ beta`` on entry and is kept in sync.
    Alternates full sweeps with sweeps restricted to the active set.
    Returns the number of sweeps used, or -1 when ``max_sweeps`` is hit.
    """
    p = beta.size
    full = np.arange(p)
    sweeps = 0
    while sweeps < max_sweeps:
        delta = _sweep(gram, grad, beta, thresh, full)
        sweeps += 1
        if delta <= tol:
            return sweeps
        active = np.nonzero(beta)[0]
        while sweeps < max_sweeps:
            delta = _sweep(gram, grad, beta, thresh, active)
            sweeps += 1
            if delta <= tol:
                break
    return -1
