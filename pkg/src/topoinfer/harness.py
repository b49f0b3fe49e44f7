"""
Monte-Carlo experiment harness.

An experiment is described by an INI file (see :func:`parse_config`) and
runs ``trials`` independent realisations. Trial ``i`` draws everything
from ``trial_seed(seed, i)``, so outputs do not depend on the number of
worker threads; results are folded in trial order.

Three kinds are supported:

``table``
    every method over its parameter grid on one basis; the best grid point
    per method (largest mean correlation) forms the comparison table.
``mu_sweep``
    TV-GL / ESA-GL over the mu grid with the true and/or learned basis.
``k_sweep``
    every method over the assumed bandwidth K, with the best mu per K
    (smallest mean E0).
"""

import configparser
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .graph import laplacian_from_adjacency, spectral_decomposition
from .io import write_dense, write_json
from .metrics import CSV_COLUMNS, evaluate, format_value, reports_to_csv, summarize
from .recovery import VARIANTS, RecoveryProblem, SolverConfig, solve
from .synth import GraphModelSpec, SignalModelSpec, gen_graph, gen_signals, trial_seed
from .transform import TransformLearnConfig, block_sparse_projection, learn_transform

SCHEMA_VERSION = 1
KINDS = ("table", "mu_sweep", "k_sweep")
BASES = ("known", "estimated")
DEFAULT_GRID = (0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
TRIAL_COLUMNS = CSV_COLUMNS + ("trial", "basis")
METRIC_NAMES = ("rho", "e0", "ef", "precision", "recall", "f_measure")
SUMMARY_COLUMNS = ("method", "basis", "K", "mu", "trials", "failed") + tuple(
    f"{m}_{s}" for m in METRIC_NAMES for s in ("mean", "stderr"))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment's output.

    ``mu_grid`` is the penalty grid of ``tv_gl``, ``esa_gl`` and ``dong``;
    Kalofolias runs with ``alpha`` fixed and ``beta`` over ``beta_grid``
    and reports beta in the ``mu`` column.
    """

    kind: str = "table"
    graph: GraphModelSpec = field(default_factory=GraphModelSpec)
    signal: SignalModelSpec = field(default_factory=SignalModelSpec)
    methods: tuple = VARIANTS
    mu_grid: tuple = DEFAULT_GRID
    beta_grid: tuple = DEFAULT_GRID
    alpha: float = 1.0
    bandwidth: int = 3
    bases: tuple = ("estimated",)
    k_values: tuple = (2, 3, 4, 5, 6, 7, 8)
    tie_signal_bandwidth: bool = True
    selection: str = "rho"
    trials: int = 20
    seed: int = 0
    jobs: int = 1
    trace_target: Optional[float] = None
    esa_squared: bool = False
    restarts: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)
    kalofolias_iterations: int = 20000
    record_runtime: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if not self.methods:
            raise ConfigError("method list is empty")
        for m in self.methods:
            if m not in VARIANTS:
                raise ConfigError(f"unknown method {m!r}; expected one of {VARIANTS}")
        if not self.mu_grid or not self.beta_grid:
            raise ConfigError("parameter grids must be nonempty")
        if any(v < 0 for v in self.mu_grid) or any(v <= 0 for v in self.beta_grid) or self.alpha <= 0:
            raise ConfigError("mu must be >= 0; alpha and beta must be > 0")
        for b in self.bases:
            if b not in BASES:
                raise ConfigError(f"unknown basis {b!r}; expected one of {BASES}")
        if not self.bases:
            raise ConfigError("basis list is empty")
        if self.selection not in ("rho", "e0"):
            raise ConfigError("selection must be 'rho' or 'e0'")
        n = self.graph.size
        ks = self.k_values if self.kind == "k_sweep" else (self.bandwidth,)
        if not ks:
            raise ConfigError("k_values is empty")
        for k in ks:
            if not 1 <= k <= n:
                raise ConfigError(f"bandwidth K={k} must lie in [1, N={n}]")


# ---------------------------------------------------------------------------
# configuration files


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple:
    out = []
    for tok in text.replace(",", " ").split():
        if ".." in tok:
            lo, hi = tok.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(tok))
    return tuple(out)


def _names(text: str) -> tuple:
    return tuple(v for v in text.replace(",", " ").split())


_GRAPH_KEYS = {"model": str, "n_clusters": int, "nodes_per_cluster": int, "p_intra": float,
               "p_inter": float, "n_nodes": int, "p": float, "m0": int, "m": int, "weighted": "bool"}
_SIGNAL_KEYS = {"model": str, "bandwidth": int, "n_signals": int, "mean": float, "variance": float,
                "decay": float, "alphabet_size": int}
_EXPERIMENT_KEYS = {"kind": str, "trials": int, "seed": int, "jobs": int, "bandwidth": int,
                    "selection": str, "trace_target": float, "restarts": int, "record_runtime": "bool",
                    "bases": _names, "k_values": _ints, "tie_signal_bandwidth": "bool",
                    "schema_version": int}
_METHOD_KEYS = {"names": _names, "mu_grid": _floats, "beta_grid": _floats, "alpha": float,
                "esa_squared": "bool"}
_SOLVER_KEYS = {"max_iterations": int, "primal_tol": float, "dual_tol": float, "penalty": float,
                "polish": "bool", "kalofolias_iterations": int}


def _read_section(cp, name, keys):
    out = {}
    if not cp.has_section(name):
        return out
    for key, raw in cp.items(name):
        if key not in keys:
            raise ConfigError(f"unknown key {key!r} in [{name}]")
        conv = keys[key]
        try:
            if conv == "bool":
                out[key] = cp.getboolean(name, key)
            else:
                out[key] = conv(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {name}.{key}: {raw!r} ({exc})") from None
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse an INI experiment description.

    Sections and keys (all optional except ``schema_version``)::

        [experiment]  schema_version, kind, trials, seed, jobs, bandwidth,
                      bases, k_values, tie_signal_bandwidth, selection,
                      trace_target, restarts, record_runtime
        [graph]       model, n_clusters, nodes_per_cluster, p_intra,
                      p_inter, n_nodes, p, m0, m, weighted
        [signals]     model, bandwidth, n_signals, mean, variance, decay,
                      alphabet_size
        [methods]     names, mu_grid, beta_grid, alpha, esa_squared
        [solver]      max_iterations, primal_tol, dual_tol, penalty,
                      polish, kalofolias_iterations

    Lists are comma or space separated; ``k_values`` accepts ``2..8``.
    """
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    known = {"experiment", "graph", "signals", "methods", "solver"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"unknown section(s): {sorted(extra)}")
    exp = _read_section(cp, "experiment", _EXPERIMENT_KEYS)
    version = exp.pop("schema_version", None)
    if version is None:
        raise ConfigError("[experiment] schema_version is required")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}; this build reads {SCHEMA_VERSION}")
    graph = _read_section(cp, "graph", _GRAPH_KEYS)
    sig = _read_section(cp, "signals", _SIGNAL_KEYS)
    meth = _read_section(cp, "methods", _METHOD_KEYS)
    solv = _read_section(cp, "solver", _SOLVER_KEYS)
    kw = dict(exp)
    if "bases" in kw:
        kw["bases"] = tuple(kw["bases"])
    try:
        kw["graph"] = GraphModelSpec(**graph)
        if "bandwidth" in sig and "bandwidth" not in kw:
            kw["bandwidth"] = sig["bandwidth"]
        kw["signal"] = SignalModelSpec(**sig)
        if "names" in meth:
            kw["methods"] = meth.pop("names")
        kw.update(meth)
        kal = solv.pop("kalofolias_iterations", None)
        if kal is not None:
            kw["kalofolias_iterations"] = kal
        kw["solver"] = SolverConfig(**solv)
        return ExperimentConfig(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# trials


@dataclass
class TrialResult:
    index: int
    seed: int
    rows: list
    artifacts: dict = field(default_factory=dict)


def _grid(config: ExperimentConfig, method: str) -> tuple:
    return config.beta_grid if method == "kalofolias" else config.mu_grid


def _basis(decomp, y, k, which, config, seed):
    """``(u_k, s_k)`` from the true eigenvectors or from transform learning."""
    if which == "known":
        u = np.asarray(decomp.eigenvectors)
        s, support = block_sparse_projection(u.T @ y, k)
        idx = list(support.indices)
        return u[:, idx], s[idx]
    est = learn_transform(y, TransformLearnConfig(k, seed=seed, restarts=config.restarts))
    return est.u_k, est.s_k


def _solver_for(config: ExperimentConfig, method: str) -> SolverConfig:
    if method == "kalofolias":
        return replace(config.solver, max_iterations=config.kalofolias_iterations)
    return config.solver


def _run_methods(config, l_true, y, u_k, s_k, k, basis, seed, artifacts, keep):
    rows = []
    n, m = y.shape
    for method in config.methods:
        for value in _grid(config, method):
            base = dict(seed=seed, method=method, graph_model=config.graph.model,
                        signal_model=config.signal.model, N=n, M=m, K=k, mu=value, basis=basis)
            try:
                problem = RecoveryProblem(
                    method, u_k=u_k, y=y, s_hat_k=s_k, mu=value if method != "kalofolias" else 1.0,
                    trace_target=config.trace_target, alpha=config.alpha,
                    beta=value if method == "kalofolias" else 1.0, esa_squared=config.esa_squared)
                res = solve(problem, _solver_for(config, method))
                est = np.asarray(res.laplacian)
                report = evaluate(l_true, est)
                row = report.row(**base, status=res.status)
                row["basis"] = basis
                row["runtime_ms"] = res.runtime_ms if config.record_runtime else ""
                if keep:
                    artifacts[_artifact_name(method, basis, k, value)] = est
            except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
                row = {c: "" for c in TRIAL_COLUMNS}
                row.update(base, status=f"error: {type(exc).__name__}: {exc}".replace("\n", " "))
            rows.append(row)
    return rows


def _artifact_name(method, basis, k, value) -> str:
    return f"L_{method}_{basis}_K{k}_mu{format_value(float(value))}"


def run_trial(config: ExperimentConfig, index: int, keep_artifacts: bool = False) -> TrialResult:
    """One realisation: a graph, its signals and every method/grid/basis combination."""
    seed = trial_seed(config.seed, index)
    graph = gen_graph(config.graph.with_seed(trial_seed(seed, 0)))
    l_true = np.asarray(laplacian_from_adjacency(graph))
    decomp = spectral_decomposition(l_true)
    learn_seed = trial_seed(seed, 2)
    artifacts = {"L_true": l_true} if keep_artifacts else {}
    rows = []
    if config.kind == "k_sweep":
        for k in config.k_values:
            sig_k = k if config.tie_signal_bandwidth else config.signal.bandwidth
            spec = replace(config.signal, bandwidth=min(sig_k, l_true.shape[0]), seed=trial_seed(seed, 100 + k))
            y, _ = gen_signals(decomp, spec)
            for basis in config.bases:
                u_k, s_k = _basis(decomp, y, k, basis, config, learn_seed)
                rows += _run_methods(config, l_true, y, u_k, s_k, k, basis, seed, artifacts, keep_artifacts)
    else:
        spec = replace(config.signal, seed=trial_seed(seed, 1))
        y, _ = gen_signals(decomp, spec)
        for basis in config.bases:
            u_k, s_k = _basis(decomp, y, config.bandwidth, basis, config, learn_seed)
            rows += _run_methods(config, l_true, y, u_k, s_k, config.bandwidth, basis, seed,
                                 artifacts, keep_artifacts)
    for r in rows:
        r["trial"] = index
    return TrialResult(index, seed, rows, artifacts)


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: list
    summary: list
    best: list
    plots: dict

    @property
    def rows(self) -> list:
        return [r for t in self.trials for r in t.rows]


def _ok(row) -> bool:
    return row.get("status") in ("converged", "max_iter")


def summarize_rows(rows) -> list:
    """Mean and standard error per (method, basis, K, mu), in first-seen order."""
    groups = {}
    for r in rows:
        key = (r["method"], r["basis"], r["K"], r["mu"])
        groups.setdefault(key, []).append(r)
    out = []
    for (method, basis, k, mu), rs in groups.items():
        good = [r for r in rs if _ok(r) and r["rho"] != ""]
        row = dict(method=method, basis=basis, K=k, mu=mu, trials=len(rs), failed=len(rs) - len(good))
        for name in METRIC_NAMES:
            mean, se = summarize([float(r[name]) for r in good])
            row[f"{name}_mean"] = mean if good else ""
            row[f"{name}_stderr"] = "" if se is None else se
        out.append(row)
    return out


def select_best(summary, by: str = "rho") -> list:
    """Best grid point per (method, basis, K): largest mean rho or smallest mean E0.

    Ties keep the first grid point.
    """
    best = {}
    for row in summary:
        if row["rho_mean"] == "" or math.isnan(row["rho_mean"]):
            continue
        key = (row["method"], row["basis"], row["K"])
        score = row["rho_mean"] if by == "rho" else -row["e0_mean"]
        if key not in best or score > best[key][0]:
            best[key] = (score, row)
    return [v[1] for v in best.values()]


def plot_series(config: ExperimentConfig, summary, best) -> dict:
    """Curves ``name -> [(x, mean, stderr), ...]`` for the experiment kind."""
    series = {}
    if config.kind in ("mu_sweep", "table"):
        for row in summary:
            for metric in ("rho", "e0"):
                name = f"{metric}_vs_mu_{row['method']}_{row['basis']}"
                series.setdefault(name, []).append((row["mu"], row[f"{metric}_mean"], row[f"{metric}_stderr"]))
    if config.kind == "k_sweep":
        for row in best:
            for metric in ("e0", "ef"):
                name = f"{metric}_vs_K_{row['method']}_{row['basis']}"
                series.setdefault(name, []).append((row["K"], row[f"{metric}_mean"], row[f"{metric}_stderr"]))
    return series


def run_experiment(config: ExperimentConfig, keep_artifacts: bool = False) -> ExperimentResult:
    """Run all trials (on ``config.jobs`` threads) and aggregate them in trial order."""
    def one(i):
        return run_trial(config, i, keep_artifacts)

    if config.jobs == 1:
        trials = [one(i) for i in range(config.trials)]
    else:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            trials = list(pool.map(one, range(config.trials)))
    rows = [r for t in trials for r in t.rows]
    summary = summarize_rows(rows)
    by = config.selection if config.kind != "k_sweep" else "e0"
    best = select_best(summary, by)
    return ExperimentResult(config, trials, summary, best, plot_series(config, summary, best))


def format_series(points) -> str:
    lines = ["x mean stderr"]
    for x, mean, se in points:
        lines.append(" ".join(format_value(v) if v != "" else "nan" for v in (float(x), mean, se)))
    return "\n".join(lines) + "\n"


def write_outputs(result: ExperimentResult, out_dir, keep_artifacts: bool = False) -> list:
    """Write ``trials.csv``, ``summary.csv``, ``best.csv`` and ``plots/*.dat``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, rows, cols in (("trials.csv", result.rows, TRIAL_COLUMNS),
                             ("summary.csv", result.summary, SUMMARY_COLUMNS),
                             ("best.csv", result.best, SUMMARY_COLUMNS)):
        p = out / name
        p.write_text(reports_to_csv(rows, cols))
        paths.append(p)
    plot_dir = out / "plots"
    plot_dir.mkdir(exist_ok=True)
    for name, points in result.plots.items():
        p = plot_dir / f"{name}.dat"
        p.write_text(format_series(points))
        paths.append(p)
    if keep_artifacts:
        for t in result.trials:
            tdir = out / "artifacts" / f"trial{t.index:04d}"
            tdir.mkdir(parents=True, exist_ok=True)
            for name, mat in t.artifacts.items():
                write_dense(tdir / f"{name}.txt", mat)
            write_json(tdir / "trial.json", {"index": t.index, "seed": t.seed})
    return paths
