"""Node-node tangent kernel of the scalar map at its equilibrium.

The scalar model has a single parameter w, so the kernel is the outer
product of the equilibrium's w-sensitivity with itself.  Above onset that
sensitivity diverges like 1/sqrt(mu) along the bifurcating mode, making the
kernel asymptotically rank one with trace ~ 1/mu; below onset the
sensitivities stay bounded and the kernel is the squared resolvent
(I - alpha w A_hat)^(-2) up to normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .activations import Activation
from .dynamics import MapConfig, Status, iterate
from .errors import (
    BranchHop,
    InvalidParams,
    NoConvergence,
    SubcriticalInput,
    SupercriticalInput,
)
from .graphs import Graph

__all__ = ["KernelReport", "ntk_supercritical", "ntk_subcritical"]

REGIME_SUBCRITICAL = "subcritical_analytic"
REGIME_SUPERCRITICAL = "supercritical_fd"


@dataclass(frozen=True)
class KernelReport:
    """Symmetric PSD node-node kernel with its summary statistics."""

    kernel: np.ndarray
    trace: float
    top_eigenvalue: float
    alignment: float
    regime: str
    mu: float


def ntk_supercritical(g: Graph, act: Activation, k: int, w: float,
                      h: float | None = None, tol: float = 1e-10,
                      max_iter: int = 200_000, init_scale: float = 1e-3,
                      seed: int = 0) -> KernelReport:
    """Finite-difference kernel at the bifurcated equilibrium.

    Solves the fixed point at w, then warm-starts w - h and w + h from that
    state so both evaluations stay on one pitchfork branch; the kernel is
    the outer product of the central-difference gradient.  Default step
    h = min(1e-4, mu/20) keeps both points supercritical.
    """
    lam_k = float(g.eigenvalues[k])
    mu = act.alpha * w * lam_k - 1.0
    if mu <= 0:
        raise SubcriticalInput(f"mu = {mu:.4g} <= 0; use ntk_subcritical")
    if mu > 0.2:
        raise InvalidParams("kernel expansion holds only for mu <= 0.2")
    if h is None:
        h = min(1e-4, mu / 20.0)
    if h <= 0 or act.alpha * (w - h) * lam_k <= 1.0:
        raise InvalidParams(f"step h = {h:.3g} leaves the supercritical branch")

    u_k = g.eigenvectors[:, k]
    base_cfg = MapConfig(activation=act, w=w, tol=tol, max_iter=max_iter,
                         init_scale=init_scale, seed=seed)
    base = iterate(g, base_cfg)
    if base.status != Status.CONVERGED:
        raise NoConvergence(f"base solve at w = {w} ended {base.status.value}")
    x_base = base.state if (u_k @ base.state) >= 0 else -base.state

    states = {}
    for w_side in (w - h, w + h):
        cfg = MapConfig(activation=act, w=w_side, tol=tol, max_iter=max_iter,
                        init_scale=init_scale, seed=seed)
        res = iterate(g, cfg, x0=x_base)
        if res.status != Status.CONVERGED:
            raise NoConvergence(f"solve at w = {w_side} ended {res.status.value}")
        states[w_side] = res.state

    s_minus = float(u_k @ states[w - h])
    s_plus = float(u_k @ states[w + h])
    if s_minus * s_plus <= 0:
        raise BranchHop("fixed-point branch sign flipped across w +- h")

    grad = (states[w + h] - states[w - h]) / (2.0 * h)
    kernel = np.outer(grad, grad)
    trace = float(grad @ grad)
    gnorm = math.sqrt(trace)
    alignment = abs(float(u_k @ grad)) / gnorm if gnorm > 0 else 0.0
    return KernelReport(kernel=kernel, trace=trace, top_eigenvalue=trace,
                        alignment=alignment, regime=REGIME_SUPERCRITICAL, mu=mu)


def ntk_subcritical(g: Graph, act: Activation, w: float,
                    k: int = 0) -> KernelReport:
    """Analytic linear-response kernel below onset.

    At the subcritical equilibrium the literal w-derivative of the state
    vanishes, so the kernel is built directly from the stated resolvent sum
    sum_r u_r u_r^T / (1 - alpha w lambda_r)^2 with unit proportionality
    constant; equals (I - alpha w A_hat)^(-2).
    """
    factors = 1.0 - act.alpha * w * g.eigenvalues
    if np.any(factors <= 0):
        raise SupercriticalInput(
            f"alpha w lambda_1 = {act.alpha * w * g.eigenvalues[0]:.4g} >= 1")
    weights = 1.0 / factors**2
    kernel = (g.eigenvectors * weights[None, :]) @ g.eigenvectors.T
    top = int(np.argmax(weights))
    alignment = abs(float(g.eigenvectors[:, top] @ g.eigenvectors[:, k]))
    return KernelReport(
        kernel=kernel, trace=float(weights.sum()),
        top_eigenvalue=float(weights.max()), alignment=alignment,
        regime=REGIME_SUBCRITICAL, mu=float(act.alpha * w * g.eigenvalues[k] - 1.0),
    )
