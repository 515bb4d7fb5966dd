"""Test-graph generation, normalized operators, spectra and spectral filters.

Graphs are dense, undirected and immutable.  Every generated graph carries a
full eigendecomposition of the symmetrically normalized adjacency
A_hat = D^{-1/2} A D^{-1/2}; the normalized Laplacian is L = I - A_hat.
Eigenvalues are sorted descending and eigenvectors follow a deterministic
sign convention so that results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import (
    DegenerateGraph,
    IllConditionedFit,
    InvalidParams,
    NoConvergence,
    NonFinite,
    NotSymmetric,
)

__all__ = [
    "Graph",
    "PolynomialFilter",
    "generate",
    "spectrum",
    "apply_filter",
    "bandpass_filter",
    "GAP_TOL",
]

GAP_TOL = 1e-6        # eigenvalue gap below which the top mode counts as degenerate
_SYM_TOL = 1e-10
_RESID_TOL = 1e-8

GRAPH_KINDS = ("erdos_renyi", "barabasi_albert", "watts_strogatz",
               "random_regular", "grid", "path", "cycle", "complete")


@dataclass(frozen=True)
class Graph:
    """Dense symmetric graph with precomputed normalized spectral data.

    eigenvalues/eigenvectors refer to the normalized adjacency; kappa[r] is
    the quartic sum sum_i u_{r,i}^4 of eigenvector r.
    """

    n: int
    adjacency: np.ndarray
    norm_adjacency: np.ndarray
    norm_laplacian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kappa: np.ndarray
    top_simple: bool
    bipartite: bool
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    seed: int | None = None
    n_requested: int | None = None

    def eigenvector(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, k]

    def to_edgelist(self, path) -> None:
        """Write the text edge list: first line "n m", then one "i j" per edge."""
        ii, jj = np.nonzero(np.triu(self.adjacency, k=1))
        lines = [f"{self.n} {len(ii)}"]
        lines += [f"{i} {j}" for i, j in zip(ii.tolist(), jj.tolist())]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def from_adjacency(adj: np.ndarray, kind: str = "custom", params: dict | None = None,
                   seed: int | None = None, n_requested: int | None = None) -> Graph:
    """Build the full Graph record (operators, spectrum, kappa) from a 0/1 or
    weighted adjacency matrix.  Keeps only the largest connected component."""
    adj = np.asarray(adj, dtype=float)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise InvalidParams("adjacency must be square")
    if np.max(np.abs(adj - adj.T)) > _SYM_TOL:
        raise NotSymmetric("adjacency must be symmetric")
    if np.any(adj < 0):
        raise InvalidParams("adjacency entries must be nonnegative")
    adj = adj.copy()
    np.fill_diagonal(adj, 0.0)

    adj = _largest_component(adj)
    n = adj.shape[0]
    if n < 2:
        raise DegenerateGraph("fewer than 2 nodes survive")

    deg = adj.sum(axis=1)
    d_isqrt = 1.0 / np.sqrt(deg)
    norm_adj = adj * d_isqrt[:, None] * d_isqrt[None, :]
    norm_adj = 0.5 * (norm_adj + norm_adj.T)   # kill rounding asymmetry
    norm_lap = np.eye(n) - norm_adj

    lam, vecs = spectrum(norm_adj)
    kappa = (vecs**4).sum(axis=0)
    top_simple = bool(lam[0] - lam[1] > GAP_TOL)
    bip = _is_bipartite(adj)

    g = Graph(
        n=n, adjacency=adj, norm_adjacency=norm_adj, norm_laplacian=norm_lap,
        eigenvalues=lam, eigenvectors=vecs, kappa=kappa,
        top_simple=top_simple, bipartite=bip, kind=kind,
        params=dict(params or {}), seed=seed,
        n_requested=n_requested if n_requested is not None else n,
    )
    for arr in (g.adjacency, g.norm_adjacency, g.norm_laplacian,
                g.eigenvalues, g.eigenvectors, g.kappa):
        arr.flags.writeable = False
    return g


def generate(kind: str, n: int, seed: int = 0, **params) -> Graph:
    """Generate a named random or deterministic test graph.

    Disconnected samples are reduced to their largest component, so the
    realized node count can be below n; the same (kind, n, params, seed)
    always yields a bit-identical adjacency.
    """
    if n < 2:
        raise InvalidParams("need n >= 2")
    kind = kind.lower()
    if kind == "erdos_renyi":
        p = _req(params, "p", float)
        if not 0.0 < p <= 1.0:
            raise InvalidParams(f"erdos_renyi needs 0 < p <= 1, got {p}")
        G = nx.gnp_random_graph(n, p, seed=seed)
    elif kind == "barabasi_albert":
        m = _req(params, "m", int)
        if not 1 <= m < n:
            raise InvalidParams(f"barabasi_albert needs 1 <= m < n, got m={m}")
        G = nx.barabasi_albert_graph(n, m, seed=seed)
    elif kind == "watts_strogatz":
        k = _req(params, "k", int)
        beta = _req(params, "beta", float)
        if k <= 0 or k % 2 or k >= n:
            raise InvalidParams(f"watts_strogatz needs even 0 < k < n, got k={k}")
        if not 0.0 <= beta <= 1.0:
            raise InvalidParams(f"watts_strogatz needs 0 <= beta <= 1, got {beta}")
        G = nx.watts_strogatz_graph(n, k, beta, seed=seed)
    elif kind == "random_regular":
        deg = _req(params, "deg", int)
        if deg <= 0 or deg >= n or (deg * n) % 2:
            raise InvalidParams(f"random_regular needs deg < n and deg*n even, got deg={deg}")
        G = nx.random_regular_graph(deg, n, seed=seed)
    elif kind == "grid":
        rows = _req(params, "rows", int)
        cols = _req(params, "cols", int)
        if rows < 1 or cols < 1 or rows * cols != n:
            raise InvalidParams(f"grid needs rows*cols = n, got {rows}x{cols} != {n}")
        G = nx.convert_node_labels_to_integers(nx.grid_2d_graph(rows, cols), ordering="sorted")
    elif kind == "path":
        G = nx.path_graph(n)
    elif kind == "cycle":
        G = nx.cycle_graph(n)
    elif kind == "complete":
        G = nx.complete_graph(n)
    else:
        raise InvalidParams(f"unknown graph kind {kind!r}")

    adj = nx.to_numpy_array(G, nodelist=sorted(G.nodes()), dtype=float)
    return from_adjacency(adj, kind=kind, params=params, seed=seed, n_requested=n)


def from_edgelist(path) -> Graph:
    """Read the "n m" / "i j" text format written by Graph.to_edgelist."""
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise InvalidParams("edge list must start with 'n m'")
    n, m = int(tokens[0]), int(tokens[1])
    pairs = tokens[2:]
    if len(pairs) != 2 * m:
        raise InvalidParams(f"expected {m} edges, found {len(pairs) // 2}")
    adj = np.zeros((n, n))
    for t in range(m):
        i, j = int(pairs[2 * t]), int(pairs[2 * t + 1])
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidParams(f"edge ({i},{j}) out of range")
        adj[i, j] = adj[j, i] = 1.0
    return from_adjacency(adj, kind="edgelist")


def spectrum(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a dense symmetric matrix.

    Returns (eigenvalues descending, orthonormal eigenvector columns).  Each
    eigenvector is flipped so its largest-magnitude entry is positive, which
    fixes the sign ambiguity deterministically.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidParams("spectrum needs a square matrix")
    if not np.all(np.isfinite(matrix)):
        raise NonFinite("matrix has non-finite entries")
    if np.max(np.abs(matrix - matrix.T)) > _SYM_TOL:
        raise NotSymmetric("matrix is not symmetric within 1e-10")
    try:
        lam, vecs = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence("symmetric eigensolver failed") from exc
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    vecs = vecs[:, order]
    anchor = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[anchor, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    vecs = vecs * signs[None, :]

    resid = np.max(np.abs(matrix @ vecs - vecs * lam[None, :]))
    ortho = np.max(np.abs(vecs.T @ vecs - np.eye(len(lam))))
    if resid > _RESID_TOL or ortho > _RESID_TOL:
        raise NoConvergence(f"eigendecomposition residual {resid:.2e} / {ortho:.2e}")
    return lam, vecs


@dataclass(frozen=True)
class PolynomialFilter:
    """Polynomial spectral filter P(A) = sum_j theta_j A^j."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(coeffs) == 0:
            raise InvalidParams("filter needs at least one coefficient")
        if not all(np.isfinite(coeffs)):
            raise NonFinite("filter coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, lam):
        """P(lambda) for scalar or array argument (lowest coefficient first)."""
        return np.polynomial.polynomial.polyval(np.asarray(lam, dtype=float),
                                                np.asarray(self.coeffs))


def apply_filter(g: Graph, f: PolynomialFilter) -> tuple[np.ndarray, np.ndarray]:
    """Return (P(A_hat), P(eigenvalues)); the operator shares eigenvectors with A_hat."""
    p_lam = f.evaluate(g.eigenvalues)
    operator = (g.eigenvectors * p_lam[None, :]) @ g.eigenvectors.T
    if not np.all(np.isfinite(operator)):
        raise NonFinite("filtered operator has non-finite entries")
    return operator, p_lam


def bandpass_filter(center: float, width: float, order: int,
                    grid_points: int = 401) -> PolynomialFilter:
    """Least-squares degree-`order` fit to a Gaussian bump on [-1, 1].

    Target is exp(-(lam - center)^2 / (2 width^2)) sampled on a uniform grid.
    """
    if width <= 0:
        raise InvalidParams("width must be positive")
    if order < 2:
        raise InvalidParams("order must be at least 2")
    grid = np.linspace(-1.0, 1.0, grid_points)
    target = np.exp(-((grid - center) ** 2) / (2.0 * width**2))
    vander = np.polynomial.polynomial.polyvander(grid, order)
    coeffs, _, rank, _ = np.linalg.lstsq(vander, target, rcond=None)
    if rank < order + 1:
        raise IllConditionedFit(f"Vandermonde rank {rank} < {order + 1}")
    return PolynomialFilter(tuple(coeffs))


def _req(params: dict, key: str, cast):
    if key not in params:
        raise InvalidParams(f"missing parameter {key!r}")
    try:
        return cast(params[key])
    except (TypeError, ValueError) as exc:
        raise InvalidParams(f"parameter {key!r} must be {cast.__name__}") from exc


def _largest_component(adj: np.ndarray) -> np.ndarray:
    """Restrict to the largest connected component (deterministic tie-break)."""
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    best: list[int] = []
    for start in range(n):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        head = 0
        while head < len(comp):
            nbrs = np.nonzero(adj[comp[head]])[0]
            head += 1
            for v in nbrs:
                if not seen[v]:
                    seen[v] = True
                    comp.append(int(v))
        if len(comp) > len(best):
            best = comp
    if len(best) == n:
        return adj
    idx = np.array(sorted(best), dtype=int)
    return adj[np.ix_(idx, idx)]


def _is_bipartite(adj: np.ndarray) -> bool:
    """Two-coloring check; bipartite graphs put -1 in the A_hat spectrum,
    which violates the transverse stability condition above onset."""
    n = adj.shape[0]
    color = np.full(n, -1, dtype=int)
    for start in range(n):
        if color[start] >= 0:
            continue
        color[start] = 0
        queue = [start]
        while queue:
            u = queue.pop()
            for v in np.nonzero(adj[u])[0]:
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    queue.append(int(v))
                elif color[v] == color[u]:
                    return False
    return True
