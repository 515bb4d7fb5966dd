"""Gelfand-style spectral radius estimation for general square matrices."""

from __future__ import annotations

import math
import warnings

import numpy as np

__all__ = ["gelfand_radius"]


def gelfand_radius(matrix: np.ndarray, iters: int, starts: int = 5,
                   seed: int = 0, spread_tol: float = 0.10) -> float:
    """Estimate rho(M) as max over random starts of ||M^m x||^(1/m).

    Valid for nonsymmetric matrices (power iteration on the norm growth
    rate).  Each start renormalizes per step and accumulates log gains, so
    the estimate never overflows.  Starts disagreeing by more than
    ``spread_tol`` trigger a warning but the max is still returned.
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    rng = np.random.default_rng(seed)
    estimates = []
    for _ in range(starts):
        x = rng.standard_normal(n)
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        x /= nx
        log_acc = 0.0
        dead = False
        for _ in range(iters):
            x = matrix @ x
            nx = np.linalg.norm(x)
            if nx == 0.0 or not math.isfinite(nx):
                dead = True
                break
            log_acc += math.log(nx)
            x /= nx
        estimates.append(0.0 if dead else math.exp(log_acc / iters))
    if not estimates:
        return 0.0
    hi, lo = max(estimates), min(estimates)
    if hi > 0 and (hi - lo) / hi > spread_tol:
        warnings.warn(
            f"spectral radius starts disagree by {(hi - lo) / hi:.1%}; "
            f"returning the max ({hi:.6g})",
            RuntimeWarning,
            stacklevel=2,
        )
    return hi
