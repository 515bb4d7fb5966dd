"""Pointwise nonlinearities and their local bifurcation data.

Each activation carries the derivative values at the origin that control the
layer map's stability landscape: ``alpha = phi'(0)``, ``beta = phi''(0)`` and
``gamma = -phi'''(0)``.  A positive ``gamma`` is the stabilizing cubic term
that turns loss of contractivity into a pitchfork instead of a blow-up.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from .errors import InvalidParams, NonFinite

__all__ = [
    "Activation",
    "BifurcationClass",
    "sine",
    "tanh",
    "relu",
    "fisher_tanh",
    "cubic",
    "custom",
    "from_name",
    "classify",
    "effective_potential",
    "quartic_potential",
]

# Zero threshold for the Taylor coefficients when classifying.
_COEFF_TOL = 1e-9


class BifurcationClass(enum.Enum):
    SUPERCRITICAL_PITCHFORK = "supercritical_pitchfork"
    TRANSCRITICAL = "transcritical"
    NONE_CONTRACTIVE = "none_contractive"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Activation:
    """Immutable pointwise nonlinearity with Taylor data at the origin.

    ``smooth`` marks activations that are C^3 at 0; only those are eligible
    for the finite-difference Taylor verification and the mode-amplitude
    formulas.  ReLU is kept with conventional data (alpha=1, beta=0, gamma=0).
    """

    name: str
    alpha: float
    beta: float
    gamma: float
    odd: bool
    smooth: bool = True
    _fn: Callable = field(repr=False, default=None)
    _dfn: Callable = field(repr=False, default=None)

    def eval(self, z):
        """Apply the activation elementwise; rejects non-finite input."""
        z = np.asarray(z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise NonFinite(f"non-finite input to {self.name}")
        return self._fn(z)

    def deriv(self, z):
        """Elementwise derivative (ReLU uses subgradient 1 at 0)."""
        z = np.asarray(z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise NonFinite(f"non-finite input to {self.name}'")
        return self._dfn(z)

    def __call__(self, z):
        return self.eval(z)

    def taylor_residuals(self, h: float = 0.01) -> tuple[float, float, float]:
        """Relative mismatch of (alpha, beta, -gamma) vs central differences.

        Only meaningful for smooth activations; h=0.01 keeps the O(h^2)
        truncation below the 1e-4 verification tolerance.
        """
        f = lambda t: float(self._fn(np.asarray(t, dtype=float)))
        d1 = (f(h) - f(-h)) / (2 * h)
        d2 = (f(h) - 2 * f(0.0) + f(-h)) / h**2
        d3 = (f(2 * h) - 2 * f(h) + 2 * f(-h) - f(-2 * h)) / (2 * h**3)
        scale = max(abs(self.alpha), 1.0)
        return (
            abs(d1 - self.alpha) / scale,
            abs(d2 - self.beta) / scale,
            abs(d3 + self.gamma) / scale,
        )


# Elementwise kernels live at module level (not lambdas) so Activation
# instances pickle cleanly into worker processes.

def _tanh_deriv(z):
    return 1.0 - np.tanh(z) ** 2


def _relu_fn(z):
    return np.maximum(z, 0.0)


def _relu_deriv(z):
    return np.where(z >= 0.0, 1.0, 0.0)


def _fisher_fn(z, a):
    return np.tanh(a * z) / a


def _fisher_deriv(z, a):
    return 1.0 - np.tanh(a * z) ** 2


def _cubic_fn(z, a, b, g):
    return a * z + (b / 2.0) * z * z - (g / 6.0) * z**3


def _cubic_deriv(z, a, b, g):
    return a + b * z - (g / 2.0) * z * z


def sine() -> Activation:
    return Activation("sine", alpha=1.0, beta=0.0, gamma=1.0, odd=True,
                      _fn=np.sin, _dfn=np.cos)


def tanh() -> Activation:
    return Activation("tanh", alpha=1.0, beta=0.0, gamma=2.0, odd=True,
                      _fn=np.tanh, _dfn=_tanh_deriv)


def relu() -> Activation:
    # Not C^3 at 0; Taylor data is the convention used by the classifier
    # (no quadratic term, no cubic restoring force).
    return Activation("relu", alpha=1.0, beta=0.0, gamma=0.0, odd=False,
                      smooth=False, _fn=_relu_fn, _dfn=_relu_deriv)


def fisher_tanh(a: float) -> Activation:
    """tanh(a z) / a: slope one at the origin, gamma = 2 a^2."""
    if a <= 0:
        raise InvalidParams("fisher_tanh scale must be positive")
    a = float(a)
    return Activation(f"fisher_tanh:{a:g}", alpha=1.0, beta=0.0,
                      gamma=2.0 * a * a, odd=True,
                      _fn=partial(_fisher_fn, a=a),
                      _dfn=partial(_fisher_deriv, a=a))


def cubic(alpha: float, gamma_coeff: float, beta_coeff: float = 0.0) -> Activation:
    """Polynomial activation alpha*z + beta/2 z^2 - gamma/6 z^3.

    The optional quadratic term exists to realize transcritical dynamics;
    the default is the odd cubic family.
    """
    a, b, g = float(alpha), float(beta_coeff), float(gamma_coeff)
    name = f"cubic:{a:g},{g:g}" if b == 0.0 else f"cubic:{a:g},{g:g},{b:g}"
    return Activation(name, alpha=a, beta=b, gamma=g, odd=(b == 0.0),
                      _fn=partial(_cubic_fn, a=a, b=b, g=g),
                      _dfn=partial(_cubic_deriv, a=a, b=b, g=g))


def custom(fn: Callable, odd: bool, name: str = "custom",
           dfn: Callable | None = None) -> Activation:
    """Wrap a user callback; Taylor data is estimated by finite differences.

    The caller must declare oddness (it cannot be inferred reliably from
    samples) and fn(0) must be 0.  Custom activations keep a reference to
    the raw callback, so they are only picklable if the callback is.
    """
    probe = lambda t: float(np.asarray(fn(np.asarray(t, dtype=float))))
    if abs(probe(0.0)) > 1e-12:
        raise InvalidParams("custom activation must satisfy fn(0) = 0")
    h = 1e-3
    d1 = (probe(h) - probe(-h)) / (2 * h)
    d2 = (probe(h) - 2 * probe(0.0) + probe(-h)) / h**2
    d3 = (probe(2 * h) - 2 * probe(h) + 2 * probe(-h) - probe(-2 * h)) / (2 * h**3)
    if dfn is None:
        dfn = partial(_fd_deriv, fn=fn)
    return Activation(name, alpha=d1, beta=0.0 if odd else d2, gamma=-d3,
                      odd=odd, _fn=fn, _dfn=dfn)


def _fd_deriv(z, fn, h=1e-6):
    return (np.asarray(fn(z + h)) - np.asarray(fn(z - h))) / (2 * h)


def from_name(spec: str) -> Activation:
    """Resolve "sine" | "tanh" | "relu" | "fisher_tanh:a" | "cubic:alpha,gamma"."""
    head, _, arg = spec.partition(":")
    head = head.strip().lower()
    if head == "sine":
        return sine()
    if head == "tanh":
        return tanh()
    if head == "relu":
        return relu()
    if head == "fisher_tanh":
        try:
            return fisher_tanh(float(arg))
        except ValueError as exc:
            raise InvalidParams(f"bad fisher_tanh parameter {arg!r}") from exc
    if head == "cubic":
        try:
            parts = [float(p) for p in arg.split(",")]
        except ValueError as exc:
            raise InvalidParams(f"bad cubic parameters {arg!r}") from exc
        if len(parts) not in (2, 3):
            raise InvalidParams("cubic needs alpha,gamma[,beta]")
        return cubic(parts[0], parts[1], parts[2] if len(parts) == 3 else 0.0)
    raise InvalidParams(f"unknown activation {spec!r}")


def classify(act: Activation) -> BifurcationClass:
    """Bifurcation type induced by the Taylor data (pure function)."""
    if act.alpha > 0 and abs(act.beta) <= _COEFF_TOL and act.gamma > _COEFF_TOL:
        return BifurcationClass.SUPERCRITICAL_PITCHFORK
    if act.alpha > 0 and abs(act.beta) > _COEFF_TOL and abs(act.gamma) <= _COEFF_TOL:
        return BifurcationClass.TRANSCRITICAL
    if act.alpha > 0 and abs(act.beta) <= _COEFF_TOL and abs(act.gamma) <= _COEFF_TOL:
        return BifurcationClass.UNBOUNDED
    return BifurcationClass.NONE_CONTRACTIVE


def effective_potential(act: Activation, w: float, x, panels: int = 1024):
    """Scalar stability landscape V(x) = integral_0^x [t - phi(w t)] dt.

    Composite Simpson quadrature; V(0) = 0 by construction.  Stable fixed
    points of z -> phi(w z) sit at local minima of V.
    """
    if not math.isfinite(w):
        raise NonFinite("coupling must be finite")
    if panels % 2:
        panels += 1
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    s = np.linspace(0.0, 1.0, panels + 1)
    weights = np.ones(panels + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    # t grid per evaluation point: t = x * s, shape (m, panels+1)
    t = x_arr[:, None] * s[None, :]
    integrand = t - act.eval(w * t)
    h = x_arr / panels
    vals = (h / 3.0) * (integrand * weights[None, :]).sum(axis=1)
    return vals if np.ndim(x) else float(vals[0])


def quartic_potential(act: Activation, w: float, x):
    """Fourth-order expansion of the effective potential around the origin."""
    x_arr = np.asarray(x, dtype=float)
    return ((1.0 - act.alpha * w) / 2.0 * x_arr**2
            + act.beta * w**2 / 6.0 * x_arr**3
            + act.gamma * w**3 / 24.0 * x_arr**4)
