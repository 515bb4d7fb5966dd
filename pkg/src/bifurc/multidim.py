"""Matrix-valued layer dynamics X -> phi(s A X W) with random feature mixing.

Covers random weight ensembles (Ginibre / Wigner), spectral radius
estimation, the Kronecker-product spectrum identity, rank-one equilibrium
extraction, the critical-variance initialization rule, variance sweeps and
the untrained depth probe.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._power import gelfand_radius
from .activations import Activation
from .dynamics import FixedPointResult, Status, _iterate_core, operator_spectrum
from .errors import InvalidParams, NotSymmetric, TooLarge, ZeroMatrix
from .graphs import Graph

__all__ = [
    "WeightEnsemble",
    "RankOnePattern",
    "VarianceRecord",
    "DepthRecord",
    "sample",
    "spectral_radius",
    "kron_spectrum_check",
    "iterate_matrix",
    "rank_one_decompose",
    "rank_one_theory_amplitude",
    "critical_variance",
    "variance_sweep",
    "depth_probe",
]

ENSEMBLE_KINDS = ("ginibre", "wigner")


@dataclass(frozen=True)
class WeightEnsemble:
    """Specification of a random d x d feature-mixing matrix."""

    kind: str
    d: int
    v: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise InvalidParams(f"unknown ensemble kind {self.kind!r}")
        if self.d < 1:
            raise InvalidParams("dimension d must be at least 1")
        if self.v <= 0:
            raise InvalidParams("entry variance must be positive")


@dataclass(frozen=True)
class RankOnePattern:
    """Leading separable component a * u v^T of a matrix state."""

    amplitude: float
    graph_mode: np.ndarray
    feature_mode: np.ndarray
    residual_ratio: float


@dataclass(frozen=True)
class VarianceRecord:
    v: float
    v_over_vc: float
    mean_ed: float
    std_ed: float
    n_converged: int


@dataclass(frozen=True)
class DepthRecord:
    layer: int
    ed_normalized: float
    frobenius_norm: float
    collapsed: bool


def sample(ens: WeightEnsemble) -> np.ndarray:
    """Draw the ensemble's matrix deterministically from its seed.

    Ginibre: i.i.d. N(0, v) entries, spectral radius ~ sqrt(d v).
    Wigner: symmetric, off-diagonal variance v and diagonal variance 2v,
    spectral radius ~ 2 sqrt(d v).
    """
    rng = np.random.default_rng(ens.seed)
    gauss = rng.standard_normal((ens.d, ens.d))
    if ens.kind == "ginibre":
        return math.sqrt(ens.v) * gauss
    return math.sqrt(ens.v / 2.0) * (gauss + gauss.T)


def spectral_radius(matrix: np.ndarray, iters: int = 300, starts: int = 5,
                    seed: int = 0) -> float:
    """Gelfand estimate of rho(matrix); valid for nonsymmetric matrices."""
    matrix = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise InvalidParams("matrix must be finite")
    return gelfand_radius(matrix, iters=iters, starts=starts, seed=seed)


def kron_spectrum_check(g: Graph, weights: np.ndarray, tol: float = 1e-6) -> bool:
    """Verify eig(W^T kron A_hat) equals the products {lambda_r sigma_m}.

    Brute-force oracle: forms the (n d) x (n d) Kronecker matrix explicitly
    and compares sorted spectra, so it is capped at n*d <= 400.  Requires a
    symmetric W so the products are real.
    """
    weights = np.asarray(weights, dtype=float)
    d = weights.shape[0]
    if np.max(np.abs(weights - weights.T)) > 1e-10:
        raise NotSymmetric("kron_spectrum_check needs a symmetric W")
    if g.n * d > 400:
        raise TooLarge(f"n*d = {g.n * d} exceeds the brute-force cap of 400")
    sigma = np.linalg.eigvalsh(weights)
    products = np.sort(np.outer(g.eigenvalues, sigma).ravel())
    big = np.kron(weights.T, g.norm_adjacency)
    direct = np.sort(np.linalg.eigvalsh(big))
    return bool(np.max(np.abs(products - direct)) <= tol)


def iterate_matrix(g: Graph, act: Activation, s: float, weights: np.ndarray,
                   operator_mode: str = "norm_adjacency",
                   tol: float = 1e-10, max_iter: int = 200_000,
                   init_scale: float = 1e-3, seed: int = 0,
                   x0: np.ndarray | None = None,
                   track_steps: bool = False) -> FixedPointResult:
    """Run X -> phi(s M X W) to a terminal status (Frobenius-norm contract)."""
    weights = np.asarray(weights, dtype=float)
    d = weights.shape[0]
    ops = operator_spectrum(g, operator_mode)
    if x0 is None:
        rng = np.random.default_rng(seed)
        x0 = init_scale * rng.standard_normal((g.n, d))
    elif x0.shape != (g.n, d):
        raise InvalidParams(f"x0 must have shape ({g.n}, {d})")
    matrix = ops.matrix

    def step(x):
        return act.eval(s * (matrix @ x @ weights))

    return _iterate_core(step, x0, tol, max_iter, track=track_steps)


def rank_one_decompose(x: np.ndarray, tol: float = 1e-10,
                       max_iter: int = 20_000) -> RankOnePattern:
    """Leading singular triple by alternating power iteration, plus the
    deflated second value as a rank-one quality measure sigma_2/sigma_1."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise InvalidParams("rank_one_decompose needs a matrix")
    if not np.all(np.isfinite(x)) or np.linalg.norm(x) == 0.0:
        raise ZeroMatrix("state is zero or non-finite")
    s1, u, v = _top_singular_triple(x, tol, max_iter)
    deflated = x - s1 * np.outer(u, v)
    if np.linalg.norm(deflated) < tol * s1:
        s2 = 0.0
    else:
        s2, _, _ = _top_singular_triple(deflated, tol, max_iter)
    anchor = int(np.argmax(np.abs(u)))
    if u[anchor] < 0:
        u, v = -u, -v
    return RankOnePattern(amplitude=s1, graph_mode=u, feature_mode=v,
                          residual_ratio=min(1.0, s2 / s1))


def _top_singular_triple(x, tol, max_iter):
    n, d = x.shape
    rng = np.random.default_rng(1234)
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    sigma_prev = 0.0
    for _ in range(max_iter):
        u = x @ v
        nu = np.linalg.norm(u)
        if nu == 0.0:
            v = rng.standard_normal(d)
            v /= np.linalg.norm(v)
            continue
        u /= nu
        v = x.T @ u
        sigma = np.linalg.norm(v)
        if sigma == 0.0:
            return 0.0, u, np.zeros(d)
        v /= sigma
        if abs(sigma - sigma_prev) <= tol * max(sigma, 1e-300):
            break
        sigma_prev = sigma
    u = x @ v
    sigma = np.linalg.norm(u)
    return float(sigma), u / sigma, v


def rank_one_theory_amplitude(act: Activation, lam_k: float, kappa_k: float,
                              sigma: float, xi: float, s: float = 1.0) -> float:
    """Closed-form pattern amplitude sqrt(6 mu / (gamma c^3 kappa_k xi))
    with c = s lambda_k sigma and mu = alpha c - 1 (0 below onset)."""
    if act.gamma <= 0:
        raise InvalidParams("amplitude law needs gamma > 0")
    c = s * lam_k * sigma
    mu = act.alpha * c - 1.0
    if mu <= 0 or c <= 0:
        return 0.0
    return math.sqrt(6.0 * mu / (act.gamma * c**3 * kappa_k * xi))


def critical_variance(d: int, lambda_k: float, alpha: float,
                      kind: str = "ginibre", delta: float = 0.0) -> float:
    """Entry variance that puts alpha rho(W) lambda_k at 1 + delta (in law).

    Ginibre: (1 + delta) / (d lambda_k^2 alpha^2); Wigner divides by 4 more
    because its spectral radius is 2 sqrt(d v) instead of sqrt(d v).
    """
    if kind not in ENSEMBLE_KINDS:
        raise InvalidParams(f"unknown ensemble kind {kind!r}")
    if d < 1:
        raise InvalidParams("dimension d must be at least 1")
    if lambda_k <= 0:
        raise InvalidParams("lambda_k must be positive")
    if alpha <= 0:
        raise InvalidParams("alpha must be positive")
    if delta <= -1:
        raise InvalidParams("delta must exceed -1")
    if 1.0 + delta < 1e-8:
        warnings.warn("delta is at the degenerate edge; variance ~ 0",
                      RuntimeWarning, stacklevel=2)
    base = (1.0 + delta) / (d * lambda_k**2 * alpha**2)
    return base / 4.0 if kind == "wigner" else base


def _variance_trial(task):
    """Worker for one (v, trial) cell; module level so it pickles."""
    (g, act, d, v, kind, s, operator_mode, tol, max_iter, init_scale,
     seed, v_index, trial) = task
    ens = WeightEnsemble(kind=kind, d=d, v=v, seed=_substream(seed, trial))
    weights = sample(ens)
    res = iterate_matrix(g, act, s, weights, operator_mode=operator_mode,
                         tol=tol, max_iter=max_iter, init_scale=init_scale,
                         seed=_substream(seed, trial, 1))
    if np.all(np.isfinite(res.state)):
        e_d = float(np.sum(res.state * (g.norm_laplacian @ res.state)))
    else:
        e_d = math.nan
    return v_index, trial, e_d, res.status


def _substream(*parts) -> int:
    """Derive a reproducible integer sub-seed from a tuple of indices."""
    seq = np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def variance_sweep(g: Graph, act: Activation, d: int, v_values,
                   trials: int = 10, seed: int = 0, kind: str = "ginibre",
                   s: float = 1.0, operator_mode: str = "norm_laplacian",
                   tol: float = 1e-10, max_iter: int = 1500,
                   init_scale: float = 1e-3, mapper=None) -> list[VarianceRecord]:
    """Mean settled Dirichlet energy Tr(X^T L X) over fresh weight draws per v.

    Uses the Laplacian operator so the onset mode carries nonzero energy.
    Each trial's Gaussian base matrix depends only on (seed, trial), so the
    same draw is rescaled across the v grid; this couples the grid points
    and makes the energy-vs-variance trend monotone in law, not just in
    expectation.  max_iter is modest by default because supercritical
    Ginibre draws can settle into rotating attractors that never meet the
    fixed-point criterion; the energy of the final state is still the
    observable.
    """
    if trials < 1:
        raise InvalidParams("need at least one trial")
    v_values = [float(v) for v in v_values]
    lam_top = float(np.max(operator_spectrum(g, operator_mode).eigenvalues))
    v_c = critical_variance(d, lam_top, act.alpha, kind, 0.0)
    tasks = [
        (g, act, d, v, kind, s, operator_mode, tol, max_iter, init_scale,
         seed, i, t)
        for i, v in enumerate(v_values) for t in range(trials)
    ]
    run = mapper if mapper is not None else map
    energies = [[math.nan] * trials for _ in v_values]
    converged = [0] * len(v_values)
    for i, t, e_d, status in run(_variance_trial, tasks):
        energies[i][t] = e_d
        if status == Status.CONVERGED:
            converged[i] += 1
    records = []
    for i, v in enumerate(v_values):
        arr = np.asarray(energies[i])
        records.append(VarianceRecord(
            v=v, v_over_vc=v / v_c, mean_ed=float(np.nanmean(arr)),
            std_ed=float(np.nanstd(arr)), n_converged=converged[i],
        ))
    return records


def depth_probe(g: Graph, act: Activation, d: int, layers: int, delta: float,
                seed: int = 0, kind: str = "ginibre") -> list[DepthRecord]:
    """Normalized Dirichlet energy along an untrained forward pass.

    Independent weights per layer at the shifted critical variance
    v_c(delta); X^0 is standard Gaussian.  Reports E_D(X)/||X||_F^2 per
    layer so scale collapse and pattern collapse are decoupled; a NaN row
    flags a non-finite (diverged) layer.
    """
    if layers < 0:
        raise InvalidParams("layers must be nonnegative")
    if delta <= -1:
        raise InvalidParams("delta must exceed -1")
    lam_1 = float(g.eigenvalues[0])
    v = critical_variance(d, lam_1, act.alpha, kind, delta)
    rng = np.random.default_rng(_substream(seed, 0))
    x = rng.standard_normal((g.n, d))
    records = [_depth_record(g, 0, x)]
    a_hat = g.norm_adjacency
    alive = True
    for layer in range(1, layers + 1):
        if alive:
            ens = WeightEnsemble(kind=kind, d=d, v=v, seed=_substream(seed, layer))
            weights = sample(ens)
            z = a_hat @ x @ weights
            x = act.eval(z) if np.all(np.isfinite(z)) else z
            if not np.all(np.isfinite(x)):
                alive = False
        if alive:
            records.append(_depth_record(g, layer, x))
        else:
            records.append(DepthRecord(layer=layer, ed_normalized=math.nan,
                                       frobenius_norm=math.inf, collapsed=False))
    return records


def _depth_record(g: Graph, layer: int, x: np.ndarray) -> DepthRecord:
    frob_sq = float(np.sum(x * x))
    if frob_sq < 1e-280:
        return DepthRecord(layer=layer, ed_normalized=0.0,
                           frobenius_norm=math.sqrt(frob_sq), collapsed=True)
    e_d = float(np.sum(x * (g.norm_laplacian @ x)))
    return DepthRecord(layer=layer, ed_normalized=max(e_d, 0.0) / frob_sq,
                       frobenius_norm=math.sqrt(frob_sq), collapsed=False)
