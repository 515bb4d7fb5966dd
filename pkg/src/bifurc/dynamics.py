"""Scalar-feature layer dynamics x -> phi(w M x) on a graph.

M is the normalized adjacency, the normalized Laplacian, or a polynomial
filter of the adjacency.  This module finds fixed points, measures mode
amplitudes and Dirichlet energy, estimates Jacobian radii, evaluates the
closed-form onset/amplitude/energy predictions, and drives coupling sweeps,
phase diagrams and filtered pattern formation.

Operator duality note: with the adjacency operator the leading mode of a
connected graph lies in the kernel of L, so its Dirichlet energy vanishes at
leading order and amplitude is the primary observable; the Laplacian operator
mode makes the energy scaling nontrivial (E_D = lambda_k a^2) and is the one
used for energy tests.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._power import gelfand_radius
from .activations import Activation
from .errors import (
    InvalidParams,
    MultiModeRegime,
    NonSimpleMode,
    UnsupportedActivation,
)
from .graphs import GAP_TOL, Graph, PolynomialFilter, apply_filter

__all__ = [
    "Status",
    "MapConfig",
    "FixedPointResult",
    "SweepRecord",
    "TheoryPrediction",
    "PhaseDiagram",
    "PatternResult",
    "OperatorSpectrum",
    "operator_spectrum",
    "iterate",
    "amplitude",
    "dirichlet_energy",
    "jacobian_radius",
    "theory_predictions",
    "sweep_coupling",
    "phase_diagram",
    "pattern_select",
]

DIVERGE_NORM = 1e6
CYCLE_TOL = 1e-8

OPERATOR_MODES = ("norm_adjacency", "norm_laplacian", "filtered")


class Status(str, enum.Enum):
    CONVERGED = "converged"
    OSCILLATING = "oscillating"
    DIVERGED = "diverged"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class MapConfig:
    """Configuration of one fixed-point solve."""

    activation: Activation
    w: float
    operator_mode: str = "norm_adjacency"
    filter: PolynomialFilter | None = None
    tol: float = 1e-10
    max_iter: int = 200_000
    init_scale: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0:
            raise InvalidParams("tol must be positive")
        if self.max_iter < 1:
            raise InvalidParams("max_iter must be at least 1")
        if self.init_scale <= 0:
            raise InvalidParams("init_scale must be positive")
        if self.operator_mode not in OPERATOR_MODES:
            raise InvalidParams(f"unknown operator mode {self.operator_mode!r}")
        if self.operator_mode == "filtered" and self.filter is None:
            raise InvalidParams("filtered mode needs a PolynomialFilter")


@dataclass(frozen=True)
class FixedPointResult:
    """Terminal state of a fixed-point iteration (vector or matrix state)."""

    state: np.ndarray
    status: Status
    iterations: int
    residual: float
    nonfinite: bool = False
    step_norms: np.ndarray | None = None


@dataclass(frozen=True)
class SweepRecord:
    """One row of a coupling sweep."""

    control: float
    mu: float
    amplitude_measured: float
    amplitude_theory: float
    dirichlet_measured: float
    dirichlet_theory: float
    jacobian_radius: float
    status: Status
    iterations: int
    amplitude_signed: float = 0.0


@dataclass(frozen=True)
class TheoryPrediction:
    """Closed-form onset and scaling data for one operator mode."""

    w_k: float
    mu: float
    a_star: float
    e_d_star: float
    landau_quadratic: float
    landau_quartic: float
    dirichlet_slope: float
    lambda_k: float
    kappa_k: float


@dataclass(frozen=True)
class OperatorSpectrum:
    """Concrete map operator with eigenvalues sorted descending."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kappa: np.ndarray


@dataclass(frozen=True)
class PhaseDiagram:
    alphas: np.ndarray
    ws: np.ndarray
    dirichlet: np.ndarray      # shape (len(alphas), len(ws))
    status: list               # same shape, Status values
    lambda_k: float


@dataclass(frozen=True)
class PatternResult:
    x_star: np.ndarray
    selected_mode: int
    alignment: float
    p_selected: float
    filtered_eigenvalues: np.ndarray
    status: Status
    iterations: int


def operator_spectrum(g: Graph, operator_mode: str = "norm_adjacency",
                      filt: PolynomialFilter | None = None) -> OperatorSpectrum:
    """Resolve the map operator and its spectral data for a graph.

    All three operators share the adjacency eigenvectors; eigenvalues are
    re-sorted descending so mode index 0 is always the first to destabilize.
    """
    if operator_mode == "norm_adjacency":
        return OperatorSpectrum(g.norm_adjacency, g.eigenvalues,
                                g.eigenvectors, g.kappa)
    if operator_mode == "norm_laplacian":
        lam = 1.0 - g.eigenvalues
    elif operator_mode == "filtered":
        if filt is None:
            raise InvalidParams("filtered mode needs a PolynomialFilter")
        _, lam = apply_filter(g, filt)
    else:
        raise InvalidParams(f"unknown operator mode {operator_mode!r}")
    order = np.argsort(-lam, kind="stable")
    lam = np.ascontiguousarray(lam[order])
    vecs = np.ascontiguousarray(g.eigenvectors[:, order])
    matrix = (vecs * lam[None, :]) @ vecs.T
    return OperatorSpectrum(matrix, lam, vecs, (vecs**4).sum(axis=0))


def _iterate_core(step, x0, tol, max_iter, track=False):
    """Shared fixed-point loop; works for 1-D and 2-D states.

    Stops on relative step convergence, norm blow-up past DIVERGE_NORM,
    period-2 cycling, or budget exhaustion; always reports the residual of
    the final state.
    """
    x = np.array(x0, dtype=float)
    prev = None
    steps = [] if track else None
    status = Status.BUDGET_EXHAUSTED
    iterations = max_iter
    nonfinite = False
    for it in range(1, max_iter + 1):
        x_new = step(x)
        if not np.all(np.isfinite(x_new)):
            status = Status.DIVERGED
            nonfinite = True
            iterations = it
            break
        delta = np.linalg.norm(x_new - x)
        norm_new = np.linalg.norm(x_new)
        if track:
            steps.append(delta)
        if delta <= tol * (1.0 + norm_new):
            x = x_new
            status = Status.CONVERGED
            iterations = it
            break
        if norm_new > DIVERGE_NORM:
            x = x_new
            status = Status.DIVERGED
            iterations = it
            break
        # A genuine period-2 cycle closes to machine level while the step
        # stays large; a slowly converging sequence has cycle gap ~ 2*step
        # and must not trip this detector.
        cycle_tol = CYCLE_TOL * (1.0 + norm_new)
        if (prev is not None and delta > 10.0 * cycle_tol
                and np.linalg.norm(x_new - prev) <= cycle_tol):
            x = x_new
            status = Status.OSCILLATING
            iterations = it
            break
        prev = x
        x = x_new
    if nonfinite:
        residual = math.inf
    else:
        nxt = step(x)
        residual = float(np.linalg.norm(nxt - x)) if np.all(np.isfinite(nxt)) else math.inf
    return FixedPointResult(
        state=x, status=status, iterations=iterations, residual=residual,
        nonfinite=nonfinite,
        step_norms=np.asarray(steps) if track else None,
    )


def iterate(g: Graph, cfg: MapConfig, x0: np.ndarray | None = None,
            track_steps: bool = False) -> FixedPointResult:
    """Run x -> phi(w M x) to a terminal status from a small random start.

    ``x0`` overrides the default init_scale * N(0, 1) start (used for warm
    continuation and symmetry checks).
    """
    ops = operator_spectrum(g, cfg.operator_mode, cfg.filter)
    if x0 is None:
        rng = np.random.default_rng(cfg.seed)
        x0 = cfg.init_scale * rng.standard_normal(g.n)
    act, w, matrix = cfg.activation, cfg.w, ops.matrix

    def step(x):
        return act.eval(w * (matrix @ x))

    return _iterate_core(step, x0, cfg.tol, cfg.max_iter, track=track_steps)


def amplitude(g: Graph, mode: int, x: np.ndarray,
              operator_mode: str = "norm_adjacency",
              filt: PolynomialFilter | None = None) -> float:
    """Signed projection <u_mode, x> onto the operator's mode-`mode` eigenvector."""
    ops = operator_spectrum(g, operator_mode, filt)
    if not 0 <= mode < g.n:
        raise InvalidParams(f"mode index {mode} out of range")
    return float(ops.eigenvectors[:, mode] @ np.asarray(x, dtype=float))


def dirichlet_energy(g: Graph, x: np.ndarray) -> float:
    """Quadratic form x^T L x (trace form for matrix-valued states).

    Always measured with the normalized Laplacian, whatever operator drives
    the dynamics; nonnegative up to roundoff.
    """
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * (g.norm_laplacian @ x)))


def jacobian_radius(g: Graph, cfg: MapConfig, x_star: np.ndarray,
                    iters: int = 200, starts: int = 5) -> float:
    """Spectral radius of J = diag(phi'(w M x*)) w M at a fixed point.

    Gelfand estimate (power iteration on norm growth) because J is not
    symmetric in general; max over random starts; ~2% relative accuracy.
    """
    x_star = np.asarray(x_star, dtype=float)
    if not np.all(np.isfinite(x_star)):
        raise InvalidParams("x_star must be finite")
    ops = operator_spectrum(g, cfg.operator_mode, cfg.filter)
    gains = cfg.activation.deriv(cfg.w * (ops.matrix @ x_star)) * cfg.w
    jac = gains[:, None] * ops.matrix
    return gelfand_radius(jac, iters=iters, starts=starts, seed=cfg.seed + 7)


def theory_predictions(g: Graph, act: Activation, k: int, w: float,
                       operator_mode: str = "norm_adjacency",
                       filt: PolynomialFilter | None = None) -> TheoryPrediction:
    """Onset coupling, amplitude and energy laws for mode k of the operator.

    w_k = 1/(alpha lambda_k); mu = alpha w lambda_k - 1; above onset the
    amplitude is sqrt(6 mu / (gamma (w lambda_k)^3 kappa_k)) and the
    Dirichlet energy grows linearly with slope 6 q_k/(gamma (w lambda_k)^3
    kappa_k) where q_k = u_k^T L u_k is the mode's energy weight.
    """
    if act.gamma <= 0:
        raise UnsupportedActivation(
            f"{act.name} has gamma <= 0; no stabilized branch exists")
    ops = operator_spectrum(g, operator_mode, filt)
    if not 0 <= k < g.n:
        raise InvalidParams(f"mode index {k} out of range")
    lam_k = float(ops.eigenvalues[k])
    gaps = np.abs(ops.eigenvalues - lam_k)
    gaps[k] = np.inf
    if gaps.min() <= GAP_TOL:
        raise NonSimpleMode(f"operator eigenvalue {lam_k:.6g} is degenerate")
    if lam_k <= 0:
        raise InvalidParams("theory needs a positive mode eigenvalue")
    kappa_k = float(ops.kappa[k])
    u_k = ops.eigenvectors[:, k]
    q_k = float(u_k @ (g.norm_laplacian @ u_k))

    w_k = 1.0 / (act.alpha * lam_k)
    mu = act.alpha * w * lam_k - 1.0
    wl3 = (w * lam_k) ** 3
    a_star = math.sqrt(6.0 * mu / (act.gamma * wl3 * kappa_k)) if mu > 0 else 0.0
    slope = 6.0 * q_k / (act.gamma * wl3 * kappa_k)
    e_d_star = slope * mu if mu > 0 else 0.0
    return TheoryPrediction(
        w_k=w_k, mu=mu, a_star=a_star, e_d_star=e_d_star,
        landau_quadratic=(1.0 - act.alpha * w * lam_k) / 2.0,
        landau_quartic=act.gamma * wl3 * kappa_k / 24.0,
        dirichlet_slope=slope, lambda_k=lam_k, kappa_k=kappa_k,
    )


def sweep_coupling(g: Graph, act: Activation, k: int, w_values,
                   operator_mode: str = "norm_adjacency",
                   filt: PolynomialFilter | None = None,
                   tol: float = 1e-10, max_iter: int = 200_000,
                   init_scale: float = 1e-3, seed: int = 0,
                   compute_radius: bool = True) -> list[SweepRecord]:
    """Trace the mode-k branch over a sorted coupling grid.

    Each solve warm-starts from the previous solution plus fresh small noise
    (branch continuation), which keeps supercritical points on one pitchfork
    branch instead of hopping between the symmetric pair.  Per-point failures
    are recorded in the status column without aborting the sweep.
    """
    w_values = [float(w) for w in w_values]
    if any(not math.isfinite(w) for w in w_values):
        raise InvalidParams("sweep couplings must be finite")
    if sorted(w_values) != w_values:
        raise InvalidParams("sweep couplings must be sorted ascending")
    ops = operator_spectrum(g, operator_mode, filt)
    u_k = ops.eigenvectors[:, k]
    if (g.bipartite and operator_mode == "norm_adjacency"
            and any(act.alpha * w > 1.0 for w in w_values)):
        warnings.warn(
            "bipartite graph: the -1 adjacency mode destabilizes together "
            "with the leading mode above onset; pitchfork theory does not "
            "cover this regime", RuntimeWarning, stacklevel=2)
    records = []
    x_prev = None
    for i, w in enumerate(w_values):
        rng = np.random.default_rng((seed, i))
        noise = init_scale * rng.standard_normal(g.n)
        x0 = noise if x_prev is None else x_prev + noise
        cfg = MapConfig(activation=act, w=w, operator_mode=operator_mode,
                        filter=filt, tol=tol, max_iter=max_iter,
                        init_scale=init_scale, seed=seed + i)
        res = iterate(g, cfg, x0=x0)
        if res.status == Status.CONVERGED:
            x_prev = res.state

        theory = theory_predictions(g, act, k, w, operator_mode, filt)
        signed = float(u_k @ res.state) if np.all(np.isfinite(res.state)) else math.nan
        e_d = dirichlet_energy(g, res.state) if np.all(np.isfinite(res.state)) else math.nan
        radius = math.nan
        if compute_radius and res.status == Status.CONVERGED:
            radius = jacobian_radius(g, cfg, res.state)
        records.append(SweepRecord(
            control=w, mu=theory.mu,
            amplitude_measured=abs(signed), amplitude_theory=theory.a_star,
            dirichlet_measured=e_d, dirichlet_theory=theory.e_d_star,
            jacobian_radius=radius, status=res.status,
            iterations=res.iterations, amplitude_signed=signed,
        ))
    return records


def _phase_cell(task):
    """Worker for one phase-diagram cell; module level so it pickles."""
    (g, alpha, w, gamma_coeff, tol, max_iter, init_scale, seed, i, j) = task
    from .activations import cubic  # local import keeps module load cheap

    act = cubic(alpha, gamma_coeff)
    rng = np.random.default_rng((seed, i, j))
    x0 = init_scale * rng.standard_normal(g.n)
    cfg = MapConfig(activation=act, w=w, operator_mode="norm_laplacian",
                    tol=tol, max_iter=max_iter, init_scale=init_scale,
                    seed=seed)
    res = iterate(g, cfg, x0=x0)
    e_d = dirichlet_energy(g, res.state) if np.all(np.isfinite(res.state)) else math.nan
    return i, j, e_d, res.status


def phase_diagram(g: Graph, alpha_values, w_values, gamma_coeff: float = 1.0,
                  seed: int = 0, tol: float = 1e-10, max_iter: int = 20_000,
                  init_scale: float = 1e-3, mapper=None) -> PhaseDiagram:
    """Dirichlet energy of the settled state over an (alpha, w) grid.

    Uses the cubic activation family with fixed gamma and the Laplacian
    operator, so the onset boundary alpha * w * lambda_max(L) = 1 carries
    nontrivial leading-order energy.  Cells are independent: each derives
    its own RNG stream from (seed, i, j), so any mapper (serial map or a
    process pool) produces identical results.
    """
    alphas = np.asarray(list(alpha_values), dtype=float)
    ws = np.asarray(list(w_values), dtype=float)
    if alphas.size == 0 or ws.size == 0:
        raise InvalidParams("phase diagram grids must be nonempty")
    tasks = [
        (g, float(a), float(w), gamma_coeff, tol, max_iter, init_scale, seed, i, j)
        for i, a in enumerate(alphas) for j, w in enumerate(ws)
    ]
    run = mapper if mapper is not None else map
    dirichlet = np.full((alphas.size, ws.size), math.nan)
    status = [[Status.BUDGET_EXHAUSTED] * ws.size for _ in range(alphas.size)]
    for i, j, e_d, st in run(_phase_cell, tasks):
        dirichlet[i, j] = e_d
        status[i][j] = st
    lam_k = float(np.max(1.0 - g.eigenvalues))
    return PhaseDiagram(alphas=alphas, ws=ws, dirichlet=dirichlet,
                        status=status, lambda_k=lam_k)


def pattern_select(g: Graph, act: Activation, w: float, filt: PolynomialFilter,
                   tol: float = 1e-10, max_iter: int = 200_000,
                   init_scale: float = 1e-3, seed: int = 0) -> PatternResult:
    """Iterate the filtered map and report which eigenmode the pattern locks to.

    The first mode to destabilize is argmax_r P(lambda_r).  Preconditions:
    exactly one filtered eigenvalue may exceed 1/(alpha w) (else
    MultiModeRegime) and the selected adjacency eigenvalue must be simple
    (else NonSimpleMode).
    """
    _, p_lam = apply_filter(g, filt)
    sel = int(np.argmax(p_lam))
    base_gaps = np.abs(g.eigenvalues - g.eigenvalues[sel])
    base_gaps[sel] = np.inf
    if base_gaps.min() <= GAP_TOL:
        raise NonSimpleMode(
            f"selected adjacency eigenvalue {g.eigenvalues[sel]:.6g} is degenerate")
    others = np.delete(p_lam, sel)
    p_second = float(others.max()) if others.size else -math.inf
    aw = act.alpha * w
    if not (aw * p_lam[sel] > 1.0 and aw * p_second < 1.0):
        raise MultiModeRegime(
            f"need exactly one destabilized mode: alpha*w*P = "
            f"{aw * p_lam[sel]:.4f} (top) vs {aw * p_second:.4f} (second)")

    cfg = MapConfig(activation=act, w=w, operator_mode="filtered", filter=filt,
                    tol=tol, max_iter=max_iter, init_scale=init_scale, seed=seed)
    res = iterate(g, cfg)
    u_sel = g.eigenvectors[:, sel]
    norm = float(np.linalg.norm(res.state))
    alignment = abs(float(u_sel @ res.state)) / norm if norm > 0 else 0.0
    return PatternResult(
        x_star=res.state, selected_mode=sel, alignment=alignment,
        p_selected=float(p_lam[sel]), filtered_eigenvalues=p_lam,
        status=res.status, iterations=res.iterations,
    )
