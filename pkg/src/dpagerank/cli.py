"""Command-line front end: ``dpagerank solve | bench | update``.

Exit status: 0 converged, 2 round budget exhausted, 1 bad input.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .bench import ALGOS, ReferenceError, compute_reference, generate_synthetic, run_benchmark
from .classic import gauss_seidel, opic, power_iteration
from .config import ConfigError, SolverConfig
from .diteration import (
    DiState,
    InvariantError,
    Scheduler,
    StateFormatError,
    UpdateError,
    di_run,
    di_update,
    load_state,
    normalized_history,
    save_state,
)
from .graph import GraphError, apply_delta, load_delta, load_edge_list

EXIT_OK, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2

log = logging.getLogger("dpagerank")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _open(path, mode="r"):
    try:
        return open(path, mode)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _read_graph(path, n=None):
    with _open(path) as fh:
        try:
            return load_edge_list(fh, n=n)
        except GraphError as exc:
            raise InputError(f"{path}: {exc}") from None


def _read_zap(path, n):
    z = np.zeros(n)
    with _open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            toks = s.split()
            try:
                if len(toks) != 2:
                    raise ValueError("expected 'node_id weight'")
                i, w = int(toks[0]), float(toks[1])
            except ValueError as exc:
                raise InputError(f"{path}: line {lineno}: {exc}") from None
            if not 0 <= i < n:
                raise InputError(f"{path}: line {lineno}: node {i} not in graph (n={n})")
            if not np.isfinite(w) or w < 0:
                raise InputError(f"{path}: line {lineno}: weight must be >= 0")
            z[i] += w
    total = z.sum()
    if abs(total - 1.0) > 1e-9:
        raise InputError(f"{path}: zap weights sum to {total!r}, not a distribution")
    # only absorbs rounding below the 1e-9 acceptance threshold
    return z / total


def _write_vector(path, x):
    with _open(path, "w") as fh:
        for i, v in enumerate(x.tolist()):
            fh.write(f"{i} {v:#.12g}\n")


def _config(args, n, zap=None):
    return SolverConfig(d=args.damping, Z=zap, epsilon=args.epsilon, max_rounds=args.max_rounds)


def cmd_solve(args) -> int:
    g = _read_graph(args.graph, n=args.nodes)
    if g.n == 0:
        raise InputError(f"{args.graph}: graph has no nodes")
    zap = _read_zap(args.zap, g.n) if args.zap else None
    cfg = _config(args, g.n, zap)
    if args.save_state and args.algo != "di":
        raise InputError("--save-state only applies to --algo di")

    if args.algo == "pi":
        x, trace = power_iteration(g, cfg, completed=args.normalize)
    elif args.algo == "gs":
        x, trace = gauss_seidel(g, cfg, completed=args.normalize)
    elif args.algo == "opic":
        if args.scheduler == "greedy":
            raise InputError("opic supports --scheduler cyc or argmax")
        x, trace = opic(g, cfg, Scheduler(args.scheduler, g.n))
    else:
        state, trace = di_run(g, cfg, Scheduler(args.scheduler, g.n))
        x = normalized_history(state) if args.normalize else state.H
        if args.save_state:
            with _open(args.save_state, "w") as fh:
                save_state(state, fh)
    _write_vector(args.output, x)
    if not trace.converged:
        log.warning("round budget of %d exhausted before epsilon=%g", args.max_rounds, args.epsilon)
        return EXIT_BUDGET
    return EXIT_OK


def _parse_synthetic(text):
    parts = text.split(",")
    if len(parts) != 4:
        raise InputError(f"--synthetic expects kind,n,deg,seed, got {text!r}")
    kind, n, deg, seed = parts
    try:
        return kind, int(n), float(deg), int(seed)
    except ValueError as exc:
        raise InputError(f"--synthetic {text!r}: {exc}") from None


def cmd_bench(args) -> int:
    if args.synthetic:
        kind, n, deg, seed = _parse_synthetic(args.synthetic)
        g = generate_synthetic(kind, n, deg, seed)
    elif args.graph:
        g = _read_graph(args.graph, n=args.nodes)
    else:
        raise InputError("bench needs --graph or --synthetic")
    if g.n == 0:
        raise InputError("graph has no nodes")
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    bad = [a for a in algos if a not in ALGOS]
    if bad or not algos:
        raise InputError(f"--algos: unknown {bad}; choose from {','.join(ALGOS)}")
    cfg = _config(args, g.n)
    try:
        reference = compute_reference(g, cfg)
    except ReferenceError as exc:
        log.error("%s", exc)
        return EXIT_BUDGET
    trace = run_benchmark(g, cfg, algos, reference, workers=args.workers)
    with _open(args.trace, "w") as fh:
        trace.to_csv(fh)
    return EXIT_OK


def cmd_update(args) -> int:
    with _open(args.state) as fh:
        state: DiState = load_state(fh)
    g_old = _read_graph(args.graph, n=state.n)
    if g_old.n != state.n:
        raise InputError(f"{args.graph}: graph has {g_old.n} nodes, state has {state.n}")
    with _open(args.delta) as fh:
        try:
            delta = load_delta(fh)
        except GraphError as exc:
            raise InputError(f"{args.delta}: {exc}") from None
    try:
        g_new, changed = apply_delta(g_old, delta)
    except GraphError as exc:
        raise InputError(f"{args.delta}: {exc}") from None
    state = di_update(state, g_old, g_new, changed)
    cfg = SolverConfig(d=state.d, epsilon=args.epsilon, max_rounds=args.max_rounds)
    state, trace = di_run(g_new, cfg, Scheduler(args.scheduler, g_new.n), state=state)
    x = normalized_history(state) if args.normalize else state.H
    _write_vector(args.output, x)
    if args.save_state:
        with _open(args.save_state, "w") as fh:
            save_state(state, fh)
    return EXIT_OK if trace.converged else EXIT_BUDGET


def _nodes(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text!r}")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dpagerank", description="PageRank by D-Iteration and baseline solvers")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, epsilon=1e-9):
        sp.add_argument("--damping", type=float, default=0.85)
        sp.add_argument("--epsilon", type=float, default=epsilon)
        sp.add_argument("--max-rounds", type=int, default=1000)

    s = sub.add_parser("solve", help="solve PageRank on an edge-list graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--nodes", type=_nodes, help="node count (at least 1 + largest id in the file)")
    s.add_argument("--algo", required=True, choices=["pi", "gs", "opic", "di"])
    s.add_argument("--scheduler", default="argmax", choices=["cyc", "argmax", "greedy"])
    common(s)
    s.add_argument("--zap", help="default distribution file: 'node_id weight' lines")
    s.add_argument("--normalize", action="store_true",
                   help="output the completed-graph solution (sums to 1)")
    s.add_argument("--output", required=True)
    s.add_argument("--save-state", help="write the final D-Iteration state (di only)")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="per-round convergence trace of several solvers")
    b.add_argument("--graph")
    b.add_argument("--nodes", type=_nodes, help="node count for --graph")
    b.add_argument("--algos", required=True, help=f"comma list from {','.join(ALGOS)}")
    common(b)
    b.add_argument("--trace", required=True)
    b.add_argument("--synthetic", help="kind,n,deg,seed (kind: cycle, chain, power-law)")
    b.add_argument("--workers", type=int, default=1)
    b.set_defaults(func=cmd_bench)

    u = sub.add_parser("update", help="apply a graph delta to a saved state and resume")
    u.add_argument("--state", required=True)
    u.add_argument("--graph", required=True, help="graph the state was computed on")
    u.add_argument("--delta", required=True)
    u.add_argument("--epsilon", type=float, default=1e-9)
    u.add_argument("--max-rounds", type=int, default=1000)
    u.add_argument("--scheduler", default="argmax", choices=["cyc", "argmax", "greedy"])
    u.add_argument("--normalize", action="store_true")
    u.add_argument("--output", required=True)
    u.add_argument("--save-state")
    u.set_defaults(func=cmd_update)
    return p


def run_cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (InputError, GraphError, ConfigError, StateFormatError, UpdateError,
            InvariantError) as exc:
        print(f"dpagerank: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
