"""
Command-line interface: ``topoinfer <subcommand> [options]``.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
4 numerical failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .graph import laplacian_from_adjacency, spectral_decomposition
from .harness import ConfigError, load_config, run_experiment, write_outputs
from .identifiability import assemble_system, nonnegative_singleton, rank_analysis
from .io import read_dense, read_edge_list, read_json, write_dense, write_edge_list, write_json
from .metrics import CSV_COLUMNS, evaluate, reports_to_csv
from .recovery import VARIANTS, RecoveryProblem, SolverConfig, solve
from .synth import GraphModelSpec, SignalModelSpec, gen_graph, gen_signals, trial_seed
from .transform import TransformLearnConfig, derotate_discrete, learn_transform

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

_MODEL_ALIASES = {"clustered": "clustered", "rg": "clustered", "er": "erdos_renyi",
                  "erdos_renyi": "erdos_renyi", "ba": "barabasi_albert", "barabasi_albert": "barabasi_albert"}


class UsageError(Exception):
    pass


def _global_flags(parser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(0), help="root seed (default 0)")
    parser.add_argument("--out", default=d("."), help="output directory (default .)")
    parser.add_argument("--format", choices=["csv"], default=d("csv"), help="tabular output format")
    parser.add_argument("--keep-artifacts", action="store_true", default=d(False),
                        help="persist per-trial matrices next to the CSVs")
    parser.add_argument("--jobs", type=int, default=d(1), help="worker threads for experiments")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topoinfer", description="Graph topology inference from bandlimited signals.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="draw a graph and signals")
    _global_flags(g, suppress=True)
    g.add_argument("--model", default="clustered", choices=sorted(_MODEL_ALIASES))
    g.add_argument("--clusters", type=int, default=3)
    g.add_argument("--size", type=int, default=10, help="nodes per cluster")
    g.add_argument("--p-intra", type=float, default=0.7)
    g.add_argument("--p-inter", type=float, default=0.01)
    g.add_argument("--n", type=int, help="node count (er, ba)")
    g.add_argument("--p", type=float, default=0.3, help="edge probability (er)")
    g.add_argument("--m0", type=int, default=4)
    g.add_argument("--m", type=int, default=3)
    g.add_argument("--weighted", action="store_true")
    g.add_argument("--signals", default="bandlimited",
                   choices=["bandlimited", "compressible", "inverse_laplacian", "discrete_alphabet"])
    g.add_argument("--K", type=int, default=3, help="signal bandwidth")
    g.add_argument("--M", type=int, default=15, help="number of signals")
    g.add_argument("--mean", type=float, default=1.0)
    g.add_argument("--variance", type=float, default=0.5)
    g.add_argument("--decay", type=float, default=2.0)
    g.add_argument("--alphabet-size", type=int, default=2)

    ln = sub.add_parser("learn", help="learn a sparsifying transform from Y")
    _global_flags(ln, suppress=True)
    ln.add_argument("--y", required=True, help="dense N x M signal file")
    ln.add_argument("--K", type=int, required=True)
    ln.add_argument("--init", choices=["householder", "random"], default="householder")
    ln.add_argument("--restarts", type=int, default=1)
    ln.add_argument("--max-iter", type=int, default=500)
    ln.add_argument("--tol", type=float, default=1e-6)
    ln.add_argument("--alphabet", help="comma-separated symbols; derotate the learned basis")

    r = sub.add_parser("recover", help="recover a Laplacian")
    _global_flags(r, suppress=True)
    r.add_argument("--method", required=True, choices=VARIANTS)
    r.add_argument("--u", help="dense N x K basis file")
    r.add_argument("--transform", help="directory written by 'learn'")
    r.add_argument("--y", help="dense N x M signal file")
    r.add_argument("--s", help="dense K x M coefficient file")
    r.add_argument("--mu", type=float, default=1.0)
    r.add_argument("--p", type=float, help="trace target (default N)")
    r.add_argument("--alpha", type=float, default=1.0)
    r.add_argument("--beta", type=float, default=1.0)
    r.add_argument("--esa-squared", action="store_true")
    r.add_argument("--max-iter", type=int, default=5000)

    i = sub.add_parser("identify", help="identifiability verdict for a basis")
    _global_flags(i, suppress=True)
    i.add_argument("--u", required=True, help="dense N x K basis file (first column constant)")
    i.add_argument("--p", type=float, help="trace target (default N)")
    i.add_argument("--components", type=int, help="connected components c")
    i.add_argument("--graph", help="edge list of a candidate graph (for the bandwidth condition)")
    i.add_argument("--svd-tol", type=float, default=1e-10)
    i.add_argument("--lp", action="store_true", help="also run the LP singleton test")

    e = sub.add_parser("eval", help="compare an estimated Laplacian to the truth")
    _global_flags(e, suppress=True)
    e.add_argument("--true", required=True, dest="l_true", help="dense true Laplacian")
    e.add_argument("--est", required=True, dest="l_est", help="dense estimated Laplacian")
    e.add_argument("--all-entries", action="store_true", help="threshold on the mean of all N^2 entries")

    x = sub.add_parser("experiment", help="run a Monte-Carlo experiment from an INI file")
    _global_flags(x, suppress=True)
    x.add_argument("config")
    x.add_argument("--trials", type=int, help="override the trial count")
    x.add_argument("--record-runtime", action="store_true", help="fill the runtime_ms column")
    return p


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen(args) -> int:
    model = _MODEL_ALIASES[args.model]
    if model == "clustered":
        spec = GraphModelSpec("clustered", n_clusters=args.clusters, nodes_per_cluster=args.size,
                              p_intra=args.p_intra, p_inter=args.p_inter, weighted=args.weighted)
    else:
        if args.n is None:
            raise UsageError(f"--n is required for model {args.model}")
        spec = GraphModelSpec(model, n_nodes=args.n, p=args.p, m0=args.m0, m=args.m, weighted=args.weighted)
    n = spec.size
    if not 1 <= args.K <= n:
        raise UsageError(f"--K must lie in [1, N={n}], got {args.K}")
    graph = gen_graph(spec.with_seed(trial_seed(args.seed, 0)))
    lap = np.asarray(laplacian_from_adjacency(graph))
    dec = spectral_decomposition(lap)
    sig = SignalModelSpec(args.signals, bandwidth=args.K, n_signals=args.M, mean=args.mean,
                          variance=args.variance, decay=args.decay, alphabet_size=args.alphabet_size,
                          seed=trial_seed(args.seed, 1))
    y, s = gen_signals(dec, sig)
    out = _out(args)
    write_edge_list(out / "graph.edges", graph)
    write_dense(out / "laplacian.txt", lap)
    write_dense(out / "U.txt", dec.eigenvectors)
    write_dense(out / "lambda.txt", np.asarray(dec.eigenvalues)[:, None])
    write_dense(out / "Y.txt", y)
    if s is not None:
        write_dense(out / "S.txt", s)
    write_json(out / "gen.json", {"seed": args.seed, "graph": {**spec.__dict__, "seed": trial_seed(args.seed, 0)},
                                  "signals": {**sig.__dict__}, "n_edges": graph.n_edges()})
    return EXIT_OK


def cmd_learn(args) -> int:
    y = read_dense(args.y)
    if not 1 <= args.K <= y.shape[0]:
        raise UsageError(f"--K must lie in [1, N={y.shape[0]}], got {args.K}")
    cfg = TransformLearnConfig(args.K, max_iterations=args.max_iter, rel_tol=args.tol, init=args.init,
                               seed=args.seed, restarts=args.restarts)
    est = learn_transform(y, cfg)
    record = {}
    if args.alphabet:
        alphabet = [float(v) for v in args.alphabet.split(",")]
        est, h, errors = derotate_discrete(est, alphabet, seed=args.seed)
        record["derotation"] = {"h": h.tolist(), "quantisation_error": errors[-1]}
    out = _out(args)
    write_dense(out / "U_hat.txt", est.u_hat)
    write_dense(out / "S_hat.txt", est.s_hat)
    write_dense(out / "U_K.txt", est.u_k)
    write_dense(out / "S_K.txt", est.s_k)
    scale = float(np.sum(y * y))
    record.update({
        "K": args.K, "support": list(est.support.indices), "objective": est.objective,
        "relative_objective": est.objective / scale if scale > 0 else 0.0,
        "objective_trace": list(est.objective_trace), "iterations": est.iterations,
        "converged": est.converged, "restarts": est.restarts_run, "init": args.init,
    })
    write_json(out / "learn.json", record)
    if not est.converged:
        print("warning: transform learning did not converge; result written anyway", file=sys.stderr)
    return EXIT_OK


def cmd_recover(args) -> int:
    u_k = s_k = None
    if args.transform:
        tdir = Path(args.transform)
        u_k = read_dense(tdir / "U_K.txt")
        s_k = read_dense(tdir / "S_K.txt")
    if args.u:
        u_k = read_dense(args.u)
    if args.s:
        s_k = read_dense(args.s)
    y = read_dense(args.y) if args.y else None
    if args.method == "esa_gl" and s_k is None:
        raise UsageError("esa_gl needs --s or --transform")
    if args.method in ("tv_gl", "esa_gl") and u_k is None:
        raise UsageError(f"{args.method} needs --u or --transform")
    if args.method in ("tv_gl", "dong", "kalofolias") and y is None:
        raise UsageError(f"{args.method} needs --y")
    if args.method in ("dong", "kalofolias") and (args.u or args.transform):
        print(f"warning: {args.method} does not use a basis; --u/--transform ignored", file=sys.stderr)
        u_k = None
    problem = RecoveryProblem(args.method, u_k=u_k, y=y, s_hat_k=s_k, mu=args.mu, trace_target=args.p,
                              alpha=args.alpha, beta=args.beta, esa_squared=args.esa_squared)
    res = solve(problem, SolverConfig(max_iterations=args.max_iter, seed=None))
    out = _out(args)
    write_dense(out / "L_hat.txt", np.asarray(res.laplacian))
    write_dense(out / "A_hat.txt", np.asarray(res.adjacency.adjacency))
    write_json(out / "recover.json", {"method": args.method, "mu": args.mu, **res.diagnostics()})
    if res.status == "infeasible":
        print("error: the constraint set is empty for this basis and trace", file=sys.stderr)
        return EXIT_NUMERIC
    if res.status != "converged":
        print(f"warning: solver stopped with status {res.status}", file=sys.stderr)
    return EXIT_OK


def cmd_identify(args) -> int:
    u = read_dense(args.u)
    system = assemble_system(u, args.p)
    nnz = None
    c = args.components
    if args.graph:
        graph = read_edge_list(args.graph)
        nnz = 2 * graph.n_edges()
        if c is None:
            c = graph.n_components()
    verdict = rank_analysis(system, args.svd_tol, n_components=c, adjacency_nnz=nnz)
    record = verdict.as_dict()
    if args.lp:
        single, _ = nonnegative_singleton(system)
        record["lp_singleton"] = single
    text = json.dumps(record, sort_keys=True)
    print(text)
    if args.out != ".":
        write_json(_out(args) / "identify.json", record)
    return EXIT_OK


def cmd_eval(args) -> int:
    lt = read_dense(args.l_true)
    le = read_dense(args.l_est)
    report = evaluate(lt, le, offdiag=not args.all_entries)
    sys.stdout.write(reports_to_csv([report.row(seed=args.seed)], CSV_COLUMNS))
    return EXIT_OK


def cmd_experiment(args) -> int:
    from dataclasses import replace

    cfg = load_config(args.config)
    over = {"jobs": args.jobs}
    if args.trials is not None:
        over["trials"] = args.trials
    if args.record_runtime:
        over["record_runtime"] = True
    if args.seed != 0:
        over["seed"] = args.seed
    try:
        cfg = replace(cfg, **over)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    result = run_experiment(cfg, keep_artifacts=args.keep_artifacts)
    paths = write_outputs(result, args.out, keep_artifacts=args.keep_artifacts)
    failed = sum(1 for r in result.rows if str(r["status"]).startswith("error"))
    print(f"{len(result.rows)} rows, {failed} failed; wrote {len(paths)} files to {args.out}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "learn": cmd_learn, "recover": cmd_recover, "identify": cmd_identify,
            "eval": cmd_eval, "experiment": cmd_experiment}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
