"""Round-by-round convergence comparison of all solvers against a reference.

Rounds are counted the same way for every method: ``n`` entry updates for
the pull solvers (pi, gs) and ``n`` elementary diffusions for the push
solvers (opic-*, di-*).  Errors are L1 distances to the PageRank vector of
the completed graph; pull solvers therefore iterate on the completed matrix
and D-Iteration is scored on its normalized history.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels as K
from .classic import (
    DENSE_LIMIT,
    OpicState,
    dense_reference_solve,
    iter_gauss_seidel,
    iter_power_iteration,
    opic_steps,
)
from .config import ConfigError, SolverConfig
from .diteration import Scheduler, di_advance, di_init, di_run, normalized_history, residual_bound
from .graph import Graph
from .trace import ConvergenceTrace

log = logging.getLogger(__name__)

ALGOS = ("pi", "gs", "opic-cyc", "opic-argmax", "di-cyc", "di-argmax", "di-greedy")
SYNTHETIC_KINDS = ("cycle", "chain", "power-law")

# residual bound the DI-computed reference is driven to
REFERENCE_BOUND = 1e-12


class ReferenceError(RuntimeError):
    pass


def generate_synthetic(kind: str, n: int, avg_degree: float = 4.0, seed: int = 0,
                       dangling_fraction: float = 0.1, exponent: float = 1.0,
                       locality: float = 0.9, site_mean: float = 50.0) -> Graph:
    """Deterministic synthetic graphs.

    ``power-law`` mimics a crawl in lexicographic URL order: nodes are
    grouped into contiguous "sites" with Pareto-distributed sizes.  Each
    non-dangling node draws its out-degree independently (Poisson, at least
    1).  A fraction ``locality`` of its links stay inside its own site and
    favour the first pages of the site (log-uniform rank, the home page
    being most popular); the rest go anywhere, with probability following a
    Zipf fitness ``rank ** -exponent`` over a random permutation of nodes.
    Both mechanisms give skewed in-degrees.  ``dangling_fraction`` of the
    nodes get no out-edges; degrees are scaled so the mean over all nodes is
    close to ``avg_degree`` before parallel edges are merged.
    """
    if kind not in SYNTHETIC_KINDS:
        raise ConfigError(f"unknown synthetic kind {kind!r}; expected one of {SYNTHETIC_KINDS}")
    if int(n) != n or n < 1:
        raise ConfigError(f"n must be a positive integer, got {n}")
    if not avg_degree >= 0:
        raise ConfigError(f"avg_degree must be >= 0, got {avg_degree}")
    if not 0 <= dangling_fraction < 1:
        raise ConfigError(f"dangling_fraction must lie in [0, 1), got {dangling_fraction}")
    if not 0 <= locality <= 1 or not site_mean >= 1:
        raise ConfigError("locality must lie in [0, 1] and site_mean be >= 1")
    n = int(n)
    if kind == "cycle":
        src = np.arange(n)
        return Graph.from_edges(src, (src + 1) % n, n=n)
    if kind == "chain":
        src = np.arange(n - 1)
        return Graph.from_edges(src, src + 1, n=n)

    rng = np.random.default_rng(seed)
    sizes = []
    total = 0
    while total < n:
        size = int(min(max(1.0, rng.pareto(1.5) * site_mean / 2 + 1), n - total))
        sizes.append(size)
        total += size
    sizes = np.array(sizes, dtype=np.int64)
    site_start = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    site_of = np.repeat(np.arange(sizes.shape[0]), sizes)

    n_dangling = int(round(dangling_fraction * n))
    dangling = np.zeros(n, dtype=bool)
    dangling[rng.permutation(n)[:n_dangling]] = True
    mean = avg_degree * n / max(n - n_dangling, 1)
    if mean > 0:
        deg = np.maximum(rng.poisson(mean, size=n), 1)
    else:
        deg = np.zeros(n, dtype=np.int64)
    deg[dangling] = 0

    src = np.repeat(np.arange(n), deg)
    m = src.shape[0]
    local = rng.random(m) < locality
    dst = np.empty(m, dtype=np.int64)
    fitness = np.arange(1, n + 1, dtype=np.float64) ** -exponent
    fitness = fitness[rng.permutation(n)]
    fitness /= fitness.sum()
    dst[~local] = rng.choice(n, size=int((~local).sum()), p=fitness)
    site = site_of[src[local]]
    size = sizes[site]
    rank = np.minimum(np.floor(size ** rng.random(site.shape[0])).astype(np.int64) - 1, size - 1)
    dst[local] = site_start[site] + rank
    return Graph.from_edges(src, dst, n=n)


def compute_reference(g: Graph, cfg: SolverConfig, max_rounds: int = 100_000) -> np.ndarray:
    """High-precision PageRank of the completed graph.

    Uses the dense oracle when it is cheaper than driving DI-argmax to a
    residual bound of ``REFERENCE_BOUND``.
    """
    dense_cost = g.n ** 3 / 3
    di_cost = 100.0 * (g.n_edges + g.n)
    if g.n <= DENSE_LIMIT and dense_cost <= di_cost:
        return dense_reference_solve(g, cfg, completed=True)
    ref_cfg = SolverConfig(d=cfg.d, Z=cfg.Z, epsilon=REFERENCE_BOUND, max_rounds=max_rounds)
    state, trace = di_run(g, ref_cfg, Scheduler("argmax", g.n), label="reference")
    if not trace.converged:
        raise ReferenceError(
            f"reference run stopped at bound {residual_bound(state):.3g} after {max_rounds} rounds"
        )
    return normalized_history(state)


def _err(x, reference) -> float:
    return float(np.abs(x - reference).sum())


def _bench_pull(g, cfg, reference, label):
    it = iter_power_iteration if label == "pi" else iter_gauss_seidel
    trace = ConvergenceTrace()
    x = cfg.zap(g.n)
    trace.add(label, 0, 0, l1_error=_err(x, reference))
    for r, (x, _) in enumerate(it(g, cfg, completed=True), start=1):
        err = _err(x, reference)
        trace.add(label, r, r * g.n, l1_error=err)
        if err <= cfg.epsilon or r >= cfg.max_rounds:
            trace.converged = err <= cfg.epsilon
            break
    return trace


def _bench_opic(g, cfg, reference, label):
    sched = Scheduler(label.split("-", 1)[1], g.n)
    state = OpicState.initial(g.n, cfg.d)
    trace = ConvergenceTrace()
    trace.add(label, 0, 0, 0, _err(state.estimate(), reference))
    err = np.inf
    for r in range(1, cfg.max_rounds + 1):
        opic_steps(state, g, sched, g.n)
        err = _err(state.estimate(), reference)
        trace.add(label, r, state.k, state.scans, err)
        if err <= cfg.epsilon:
            break
    trace.converged = err <= cfg.epsilon
    return trace


def _bench_di(g, cfg, reference, label):
    sched = Scheduler(label.split("-", 1)[1], g.n)
    state = di_init(g, cfg)
    trace = ConvergenceTrace()
    trace.add(label, 0, 0, 0, _err(normalized_history(state), reference), residual_bound(state))
    done = scans = 0
    err = np.inf
    for r in range(1, cfg.max_rounds + 1):
        steps, sc, status = di_advance(state, g, sched, g.n)
        done += steps
        scans += sc
        err = _err(normalized_history(state), reference)
        trace.add(label, r, done, scans, err, residual_bound(state))
        if err <= cfg.epsilon or status != K.BUDGET:
            break
    trace.converged = err <= cfg.epsilon
    return trace


def _run_one(g, cfg, reference, label):
    if label in ("pi", "gs"):
        return _bench_pull(g, cfg, reference, label)
    if label.startswith("opic-"):
        return _bench_opic(g, cfg, reference, label)
    return _bench_di(g, cfg, reference, label)


def run_benchmark(g: Graph, cfg: SolverConfig, algos, reference,
                  workers: int = 1) -> ConvergenceTrace:
    """Run every algorithm in ``algos`` until its L1 error reaches ``cfg.epsilon``
    or ``cfg.max_rounds`` rounds have passed.

    Each run writes a round-0 row for its starting point.  Runs are
    independent and may use a thread pool; rows are assembled in ``algos``
    order regardless.
    """
    algos = list(algos)
    unknown = [a for a in algos if a not in ALGOS]
    if unknown:
        raise ConfigError(f"unknown algorithm(s) {unknown}; expected from {ALGOS}")
    if any(a.startswith("opic") for a in algos) and not cfg.is_uniform(g.n):
        raise ConfigError("OPIC emulation requires a uniform default distribution Z")
    reference = np.asarray(reference, dtype=np.float64)
    if reference.shape != (g.n,):
        raise ConfigError(f"reference has shape {reference.shape}, expected ({g.n},)")

    def job(label):
        log.info("bench %s on n=%d", label, g.n)
        return _run_one(g, cfg, reference, label)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, algos))
    else:
        parts = [job(a) for a in algos]
    out = ConvergenceTrace()
    for part in parts:
        out.extend(part)
    return out
