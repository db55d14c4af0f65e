"""Baseline PageRank solvers and the dense direct oracle.

Power Iteration and Gauss-Seidel are pull methods: every round recomputes
all ``n`` entries from in-neighbours.  OPIC is a push method running on the
damped stochastic emulation matrix

    P'[i, j] = d * P[i, j] + (1 - d) / n     (j has out-edges)
    P'[i, j] = 1 / n                         (j dangling)

whose stationary vector is the PageRank vector of the completed graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels as K
from .config import ConfigError, SolverConfig
from .graph import Graph
from .trace import ConvergenceTrace

DENSE_LIMIT = 5000


def _l1(a, b) -> float:
    return float(np.abs(a - b).sum())


def iter_power_iteration(g: Graph, cfg: SolverConfig, completed: bool = False,
                         x0=None) -> Iterator[tuple[np.ndarray, float]]:
    """Yield ``(x_k, |x_k - x_{k-1}|_1)`` for k = 1, 2, ...  forever.

    With ``completed`` the dangling mass of each iterate is redistributed
    along Z, i.e. the iteration runs on the completed stochastic matrix.
    """
    Z = cfg.zap(g.n)
    d = cfg.d
    P = g.matrix
    x = Z.copy() if x0 is None else np.array(x0, dtype=np.float64)
    base = (1.0 - d) * Z
    while True:
        new = d * (P @ x) + base
        if completed:
            new += d * x[g.dangling].sum() * Z
        change = _l1(new, x)
        x = new
        yield x, change


def power_iteration(g: Graph, cfg: SolverConfig, reference=None, completed: bool = False,
                    label: str = "pi") -> tuple[np.ndarray, ConvergenceTrace]:
    """Power Iteration from x0 = Z, stopping when a round changes x by at most epsilon (L1)."""
    trace = ConvergenceTrace(converged=False)
    x = cfg.zap(g.n)
    if reference is not None:
        trace.add(label, 0, 0, l1_error=_l1(x, reference))
    for k, (x, change) in enumerate(iter_power_iteration(g, cfg, completed), start=1):
        err = _l1(x, reference) if reference is not None else None
        trace.add(label, k, k * g.n, l1_error=err)
        if change <= cfg.epsilon:
            trace.converged = True
            break
        if k >= cfg.max_rounds:
            break
    return x, trace


def iter_gauss_seidel(g: Graph, cfg: SolverConfig, completed: bool = False,
                      x0=None) -> Iterator[tuple[np.ndarray, float]]:
    """Yield the (shared, in-place updated) iterate after each ascending sweep."""
    Z = cfg.zap(g.n)
    R = g.rows
    x = Z.copy() if x0 is None else np.array(x0, dtype=np.float64)
    while True:
        change = K.gs_sweep(R.indptr, R.indices, R.data, x, cfg.d, Z, g.dangling, completed)
        yield x, change


def gauss_seidel(g: Graph, cfg: SolverConfig, reference=None, completed: bool = False,
                 x0=None, label: str = "gs") -> tuple[np.ndarray, ConvergenceTrace]:
    trace = ConvergenceTrace(converged=False)
    x = cfg.zap(g.n) if x0 is None else np.asarray(x0, dtype=np.float64)
    if reference is not None:
        trace.add(label, 0, 0, l1_error=_l1(x, reference))
    for k, (x, change) in enumerate(iter_gauss_seidel(g, cfg, completed, x0), start=1):
        err = _l1(x, reference) if reference is not None else None
        trace.add(label, k, k * g.n, l1_error=err)
        if change <= cfg.epsilon:
            trace.converged = True
            break
        if k >= cfg.max_rounds:
            break
    return x.copy(), trace


@dataclass
class OpicState:
    F: np.ndarray
    H: np.ndarray
    u: float
    s: np.ndarray
    d: float
    cursor: int = 0
    k: int = 0
    scans: int = 0

    @classmethod
    def initial(cls, n: int, d: float) -> "OpicState":
        return cls(F=np.full(n, 1.0 / n), H=np.zeros(n), u=0.0, s=np.zeros(n), d=d)

    def effective_fluid(self) -> np.ndarray:
        n = self.F.shape[0]
        return self.F + (self.u - self.s) / n

    def total_fluid(self) -> float:
        return float(self.effective_fluid().sum())

    def estimate(self) -> np.ndarray:
        total = self.H.sum()
        if total == 0:
            return np.full(self.H.shape[0], 1.0 / self.H.shape[0])
        return self.H / total


def opic_steps(state: OpicState, g: Graph, sched, steps: int) -> OpicState:
    """Advance ``state`` in place by ``steps`` push steps chosen by ``sched``."""
    n = g.n
    kind = K.ARGMAX if sched.kind == "argmax" else K.CYC
    state.u, state.cursor, scans = K.advance_opic(
        g.indptr, g.indices, g.probs, g.dangling, state.F, state.H, state.s, state.u,
        state.d, kind, sched.order, state.cursor, steps, 1.0 / n,
    )
    state.k += steps
    state.scans += scans
    return state


def opic(g: Graph, cfg: SolverConfig, sched=None, reference=None,
         label: str | None = None) -> tuple[np.ndarray, ConvergenceTrace]:
    """Run OPIC for ``cfg.max_rounds`` rounds of ``n`` push steps.

    Returns the history normalized to sum 1.  There is no residual-based
    stopping rule, so the run always uses its full budget.
    """
    from .diteration import Scheduler

    if not cfg.is_uniform(g.n):
        raise ConfigError("OPIC emulation requires a uniform default distribution Z")
    if sched is None:
        sched = Scheduler("cyc", g.n)
    label = label or f"opic-{sched.kind}"
    if sched.kind not in ("cyc", "argmax"):
        raise ConfigError(f"OPIC supports cyc and argmax schedulers, not {sched.kind!r}")
    state = OpicState.initial(g.n, cfg.d)
    state.cursor = sched.cursor
    trace = ConvergenceTrace()
    if reference is not None:
        trace.add(label, 0, 0, 0, _l1(state.estimate(), reference))
    for r in range(1, cfg.max_rounds + 1):
        opic_steps(state, g, sched, g.n)
        err = _l1(state.estimate(), reference) if reference is not None else None
        trace.add(label, r, state.k, state.scans, err)
    sched.cursor = state.cursor
    return state.estimate(), trace


def dense_reference_solve(g: Graph, cfg: SolverConfig, completed: bool = False) -> np.ndarray:
    """Solve ``(I - dP) x = (1 - d) Z`` directly (LU with partial pivoting).

    With ``completed`` the dangling columns of P are replaced by Z first.
    Only for small graphs: refuses ``n > DENSE_LIMIT``.
    """
    if g.n > DENSE_LIMIT:
        raise ValueError(
            f"dense reference solve refused for n={g.n} (limit {DENSE_LIMIT}); "
            "it is a desk-scale oracle"
        )
    Z = cfg.zap(g.n)
    P = g.dense(completed_with=Z if completed else None)
    A = np.eye(g.n) - cfg.d * P
    return np.linalg.solve(A, (1.0 - cfg.d) * Z)


def opic_matrix(g: Graph, d: float) -> np.ndarray:
    """Explicit dense emulation matrix; for verification only."""
    n = g.n
    P = d * g.dense() + (1.0 - d) / n
    P[:, g.dangling] = 1.0 / n
    return P
