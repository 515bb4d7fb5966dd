"""Command-line front end: run experiments, emit CSV/JSON plus run metadata.

Grid arguments use the inclusive "start:stop:count" syntax; graph specs are
"kind:n:param[:param]" (e.g. ba:100:3, er:100:0.08, ws:100:6:0.1, rr:100:6,
grid:100:10, path:16).  All randomness flows from --seed, so reruns with the
same arguments produce byte-identical data files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import activations, dynamics, graphs, multidim, ntk
from .errors import BifurcError, ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_GRAPH_ALIASES = {
    "er": "erdos_renyi", "erdos_renyi": "erdos_renyi",
    "ba": "barabasi_albert", "barabasi_albert": "barabasi_albert",
    "ws": "watts_strogatz", "watts_strogatz": "watts_strogatz",
    "rr": "random_regular", "random_regular": "random_regular",
    "grid": "grid", "path": "path", "cycle": "cycle", "complete": "complete",
}


@dataclass
class RunConfig:
    """Normalized run description; everything that lands in the metadata."""

    command: str
    args: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str = "csv"
    seed: int = 42
    threads: int = 1


def parse_grid(spec: str) -> list[float]:
    """Inclusive numeric grid: "a:b:count" or a single value."""
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) == 3:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ConfigError(f"grid count must be >= 1 in {spec!r}")
            return [float(x) for x in np.linspace(start, stop, count)]
    except ValueError as exc:
        raise ConfigError(f"bad grid {spec!r}") from exc
    raise ConfigError(f"grid must be 'value' or 'start:stop:count', got {spec!r}")


def parse_graph(spec: str, seed: int) -> graphs.Graph:
    """Build a graph from "kind:n[:param[:param]]"."""
    parts = spec.split(":")
    kind = _GRAPH_ALIASES.get(parts[0].lower())
    if kind is None:
        raise ConfigError(f"unknown graph kind {parts[0]!r}")
    try:
        n = int(parts[1])
        extra = parts[2:]
        if kind == "erdos_renyi":
            params = {"p": float(extra[0])}
        elif kind == "barabasi_albert":
            params = {"m": int(extra[0])}
        elif kind == "watts_strogatz":
            params = {"k": int(extra[0]), "beta": float(extra[1])}
        elif kind == "random_regular":
            params = {"deg": int(extra[0])}
        elif kind == "grid":
            rows = int(extra[0])
            cols = int(extra[1]) if len(extra) > 1 else (n // rows if rows else 0)
            params = {"rows": rows, "cols": cols}
        else:
            params = {}
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"bad graph spec {spec!r}") from exc
    try:
        return graphs.generate(kind, n, seed=seed, **params)
    except BifurcError as exc:
        raise ConfigError(f"graph spec {spec!r}: {exc}") from exc


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, dynamics.Status):
        return value.value
    return str(value)


def write_rows(path: str, columns: list[str], rows: list[dict], fmt: str) -> None:
    if fmt == "json":
        payload = [{c: r[c] for c in columns} for r in rows]
        text = json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n"
    else:
        lines = [",".join(columns)]
        lines += [",".join(_fmt(r[c]) for c in columns) for r in rows]
        text = "\n".join(lines) + "\n"
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dynamics.Status):
        return obj.value
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _graph_meta(g: graphs.Graph) -> dict:
    return {
        "kind": g.kind, "params": g.params, "seed": g.seed,
        "n_requested": g.n_requested, "n": g.n,
        "lambda_1": float(g.eigenvalues[0]),
        "lambda_2": float(g.eigenvalues[1]),
        "kappa_1": float(g.kappa[0]),
        "top_simple": g.top_simple, "bipartite": g.bipartite,
    }


def _write_meta(out: str, cfg: RunConfig, graph_meta: dict | None,
                wall_time: float, extra: dict | None = None) -> None:
    meta = {
        "command": cfg.command,
        "config": cfg.args,
        "graph": graph_meta,
        "library_version": __version__,
        "wall_time_s": wall_time,
    }
    if extra:
        meta.update(extra)
    with open(out + ".meta.json", "w", newline="\n") as fh:
        json.dump(_jsonable(meta), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_threads(flag_value: int | None) -> int:
    env = os.environ.get("BIFURC_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"BIFURC_THREADS must be an integer, got {env!r}") from exc
    if flag_value is not None:
        return max(1, flag_value)
    return os.cpu_count() or 1


def _failure_fraction(statuses) -> float:
    statuses = list(statuses)
    if not statuses:
        return 0.0
    bad = sum(1 for s in statuses if s == dynamics.Status.DIVERGED)
    return bad / len(statuses)


# ---------------------------------------------------------------------------
# command implementations: each returns (columns, rows, graph_meta, extra_meta,
# failure_fraction)

def _cmd_sweep_coupling(ns, cfg):
    g = parse_graph(ns.graph, cfg.seed)
    act = activations.from_name(ns.activation)
    theory = dynamics.theory_predictions(g, act, ns.mode, 1.0, ns.operator)
    ratios = sorted(parse_grid(ns.w_over_wk))
    w_values = [r * theory.w_k for r in ratios]
    records = dynamics.sweep_coupling(
        g, act, ns.mode, w_values, operator_mode=ns.operator,
        tol=ns.tol, max_iter=ns.max_iter, seed=cfg.seed)
    columns = ["control", "mu", "amp_measured", "amp_theory", "ed_measured",
               "ed_theory", "jac_radius", "status", "iterations"]
    rows = [{
        "control": r.control, "mu": r.mu,
        "amp_measured": r.amplitude_measured, "amp_theory": r.amplitude_theory,
        "ed_measured": r.dirichlet_measured, "ed_theory": r.dirichlet_theory,
        "jac_radius": r.jacobian_radius, "status": r.status,
        "iterations": r.iterations,
    } for r in records]
    return columns, rows, _graph_meta(g), {}, _failure_fraction(r.status for r in records)


def _cmd_phase_diagram(ns, cfg):
    g = parse_graph(ns.graph, cfg.seed)
    alphas = parse_grid(ns.alpha)
    ws = parse_grid(ns.w)
    mapper = None
    pool = None
    if cfg.threads > 1:
        pool = ProcessPoolExecutor(max_workers=cfg.threads)
        chunk = max(1, (len(alphas) * len(ws)) // (4 * cfg.threads))
        mapper = lambda fn, tasks: pool.map(fn, tasks, chunksize=chunk)
    try:
        diagram = dynamics.phase_diagram(g, alphas, ws, gamma_coeff=ns.gamma,
                                         seed=cfg.seed, mapper=mapper)
    finally:
        if pool is not None:
            pool.shutdown()
    columns = ["alpha", "w", "ed", "status"]
    rows = []
    statuses = []
    for i, a in enumerate(diagram.alphas):
        for j, w in enumerate(diagram.ws):
            st = diagram.status[i][j]
            statuses.append(st)
            rows.append({"alpha": float(a), "w": float(w),
                         "ed": float(diagram.dirichlet[i, j]), "status": st})
    extra = {"lambda_k": diagram.lambda_k}
    return columns, rows, _graph_meta(g), extra, _failure_fraction(statuses)


def _cmd_pattern(ns, cfg):
    g = parse_graph(ns.graph, cfg.seed)
    act = activations.from_name(ns.activation)
    center = {"low": float(g.eigenvalues[0]), "mid": 0.0,
              "high": float(g.eigenvalues[-1])}.get(ns.center)
    if center is None:
        try:
            center = float(ns.center)
        except ValueError as exc:
            raise ConfigError(f"--center must be low|mid|high or a number, "
                              f"got {ns.center!r}") from exc
    filt = graphs.bandpass_filter(center, ns.width, ns.order)
    _, p_lam = graphs.apply_filter(g, filt)
    if ns.w is not None:
        w = ns.w
    else:
        sel = int(np.argmax(p_lam))
        others = np.delete(p_lam, sel)
        gap = float(p_lam[sel] / others.max()) - 1.0 if others.size else math.inf
        mu = min(ns.mu, 0.5 * gap)
        if mu <= 0:
            raise ConfigError("no single-mode window; try a narrower --width")
        w = (1.0 + mu) / (act.alpha * float(p_lam[sel]))
    result = dynamics.pattern_select(g, act, w, filt, seed=cfg.seed)
    columns = ["node", "x", "u_selected"]
    u_sel = g.eigenvectors[:, result.selected_mode]
    rows = [{"node": i, "x": float(result.x_star[i]), "u_selected": float(u_sel[i])}
            for i in range(g.n)]
    extra = {
        "center": center, "width": ns.width, "order": ns.order, "w": w,
        "selected_mode": result.selected_mode,
        "p_selected": result.p_selected,
        "alignment": result.alignment,
        "status": result.status.value,
    }
    return columns, rows, _graph_meta(g), extra, _failure_fraction([result.status])


def _cmd_variance_sweep(ns, cfg):
    g = parse_graph(ns.graph, cfg.seed)
    act = activations.from_name(ns.activation)
    lam_top = float(np.max(1.0 - g.eigenvalues))
    v_c = multidim.critical_variance(ns.d, lam_top, act.alpha, ns.ensemble, 0.0)
    ratios = parse_grid(ns.v_over_vc)
    v_values = [r * v_c for r in ratios]
    mapper = None
    pool = None
    if cfg.threads > 1:
        pool = ProcessPoolExecutor(max_workers=cfg.threads)
        mapper = lambda fn, tasks: pool.map(fn, tasks)
    try:
        records = multidim.variance_sweep(
            g, act, ns.d, v_values, trials=ns.trials, seed=cfg.seed,
            kind=ns.ensemble, max_iter=ns.max_iter, mapper=mapper)
    finally:
        if pool is not None:
            pool.shutdown()
    columns = ["v", "v_over_vc", "mean_ed", "std_ed", "n_converged"]
    rows = [{"v": r.v, "v_over_vc": r.v_over_vc, "mean_ed": r.mean_ed,
             "std_ed": r.std_ed, "n_converged": r.n_converged} for r in records]
    return columns, rows, _graph_meta(g), {"v_c": v_c, "lambda_max_L": lam_top}, 0.0


def _cmd_depth_probe(ns, cfg):
    g = parse_graph(ns.graph, cfg.seed)
    act = activations.from_name(ns.activation)
    records = multidim.depth_probe(g, act, ns.d, ns.layers, ns.delta,
                                   seed=cfg.seed, kind=ns.ensemble)
    columns = ["layer", "ed_normalized", "frobenius_norm", "collapsed"]
    rows = [{"layer": r.layer, "ed_normalized": r.ed_normalized,
             "frobenius_norm": r.frobenius_norm, "collapsed": r.collapsed}
            for r in records]
    bad = sum(1 for r in records if math.isnan(r.ed_normalized))
    return columns, rows, _graph_meta(g), {
        "delta": ns.delta, "weights_shared_across_layers": False,
    }, bad / max(1, len(records))


def _cmd_ntk(ns, cfg):
    g = parse_graph(ns.graph, cfg.seed)
    act = activations.from_name(ns.activation)
    lam_k = float(g.eigenvalues[ns.mode])
    rows = []
    for mu in parse_grid(ns.mu):
        w = (1.0 + mu) / (act.alpha * lam_k)
        if mu > 0:
            report = ntk.ntk_supercritical(g, act, ns.mode, w, h=ns.h,
                                           seed=cfg.seed)
        else:
            report = ntk.ntk_subcritical(g, act, w, k=ns.mode)
        rows.append({"mu": mu, "trace": report.trace,
                     "top_eig": report.top_eigenvalue,
                     "alignment": report.alignment, "regime": report.regime})
    columns = ["mu", "trace", "top_eig", "alignment", "regime"]
    return columns, rows, _graph_meta(g), {}, 0.0


def _cmd_init_variance(ns, cfg):
    v_c = multidim.critical_variance(ns.d, ns.lam, ns.alpha, ns.ensemble, ns.delta)
    print(repr(v_c))
    columns = ["d", "lambda", "alpha", "ensemble", "delta", "v_c"]
    rows = [{"d": ns.d, "lambda": ns.lam, "alpha": ns.alpha,
             "ensemble": ns.ensemble, "delta": ns.delta, "v_c": v_c}]
    return columns, rows, None, {"v_c": v_c}, 0.0


_COMMANDS = {
    "sweep_coupling": _cmd_sweep_coupling,
    "phase_diagram": _cmd_phase_diagram,
    "pattern": _cmd_pattern,
    "variance_sweep": _cmd_variance_sweep,
    "depth_probe": _cmd_depth_probe,
    "ntk": _cmd_ntk,
    "init_variance": _cmd_init_variance,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bifurc",
        description="Bifurcation experiments for graph layer dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, graph=True, activation=True):
        if graph:
            p.add_argument("--graph", required=True,
                           help="kind:n:param[:param], e.g. ba:100:3")
        if activation:
            p.add_argument("--activation", default="sine",
                           help="sine|tanh|relu|fisher_tanh:a|cubic:alpha,gamma")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out", default=None, help="output data file path")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes (env BIFURC_THREADS overrides)")

    p = sub.add_parser("sweep_coupling", help="amplitude/energy laws vs coupling")
    common(p)
    p.add_argument("--mode", type=int, default=0, help="operator mode index (0 = leading)")
    p.add_argument("--operator", choices=("norm_adjacency", "norm_laplacian"),
                   default="norm_adjacency")
    p.add_argument("--w-over-wk", default="0.8:1.2:41", help="coupling grid relative to onset")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=200_000)

    p = sub.add_parser("phase_diagram", help="Dirichlet energy over (alpha, w)")
    common(p, activation=False)
    p.add_argument("--alpha", default="0.2:2.0:19", help="activation slope grid")
    p.add_argument("--w", default="0.2:2.0:19", help="coupling grid")
    p.add_argument("--gamma", type=float, default=1.0, help="cubic coefficient")

    p = sub.add_parser("pattern", help="spectral-filter mode selection")
    common(p)
    p.add_argument("--center", default="low", help="low|mid|high or an eigenvalue")
    p.add_argument("--width", type=float, default=0.2)
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--mu", type=float, default=0.02,
                   help="target distance above onset when --w is not given")
    p.add_argument("--w", type=float, default=None, help="explicit coupling")

    p = sub.add_parser("variance_sweep", help="energy onset vs weight variance")
    common(p)
    p.add_argument("--d", type=int, default=64, help="feature dimension")
    p.add_argument("--v-over-vc", default="0.5:1.5:11", help="variance grid over v_c")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--ensemble", choices=multidim.ENSEMBLE_KINDS, default="ginibre")
    p.add_argument("--max-iter", type=int, default=1500)

    p = sub.add_parser("depth_probe", help="normalized energy along depth")
    common(p)
    p.add_argument("--d", type=int, default=32)
    p.add_argument("--layers", type=int, default=64)
    p.add_argument("--delta", type=float, default=0.0,
                   help="variance shift: v = (1+delta) v_c")
    p.add_argument("--ensemble", choices=multidim.ENSEMBLE_KINDS, default="ginibre")

    p = sub.add_parser("ntk", help="tangent kernel trace/alignment vs mu")
    common(p)
    p.add_argument("--mode", type=int, default=0)
    p.add_argument("--mu", default="0.01:0.08:4", help="bifurcation parameter grid")
    p.add_argument("--h", type=float, default=None, help="finite-difference step")

    p = sub.add_parser("init_variance", help="print the critical weight variance")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--ensemble", choices=multidim.ENSEMBLE_KINDS, default="ginibre")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=None)

    return parser


def run(ns: argparse.Namespace) -> int:
    """Execute a parsed command; returns the process exit code."""
    cfg = RunConfig(
        command=ns.command,
        args={k: v for k, v in vars(ns).items() if k != "command"},
        out=ns.out, fmt=ns.format, seed=ns.seed,
        threads=_resolve_threads(ns.threads),
    )
    started = time.perf_counter()
    try:
        columns, rows, graph_meta, extra, fail_frac = _COMMANDS[ns.command](ns, cfg)
    except ConfigError:
        raise
    except BifurcError as exc:
        raise ConfigError(str(exc)) from exc
    wall = time.perf_counter() - started

    out = cfg.out
    if out is None and ns.command != "init_variance":
        out = f"{ns.command}.{cfg.fmt}"
    if out is not None:
        write_rows(out, columns, rows, cfg.fmt)
        _write_meta(out, cfg, graph_meta, wall, extra)
    if fail_frac > 0.5:
        print(f"numeric failure in {fail_frac:.0%} of cells", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return run(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
