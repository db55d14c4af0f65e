"""D-Iteration: PageRank by damped fluid diffusion.

Each node holds some fluid ``F`` and a history ``H``.  Diffusing node ``i``
moves ``F[i]`` into ``H[i]`` and pushes ``d * F[i] * P[:, i]`` to the
out-neighbours.  Throughout a run the identity

    H + F = (1 - d) Z + d P H

holds, so ``H`` converges to the PageRank vector and the remaining fluid
measures the distance to it.  Fluid pushed into a dangling node leaves the
system; the cumulative amount ``l`` lets the history be rescaled to the
solution of the completed (stochastic) problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from . import _kernels as K
from .config import ConfigError, SolverConfig
from .graph import Graph
from .trace import ConvergenceTrace

STATE_MAGIC = "DI-STATE v1"

_KIND_CODES = {"cyc": K.CYC, "argmax": K.ARGMAX, "greedy": K.GREEDY}


class InvariantError(RuntimeError):
    """Raised when a state is internally inconsistent."""


class UpdateError(ValueError):
    pass


class StateFormatError(ValueError):
    pass


@dataclass
class DiState:
    F: np.ndarray
    H: np.ndarray
    d: float
    l: float = 0.0
    k: int = 0
    f_abs: float = 0.0
    Z: np.ndarray | None = None
    _since_refresh: int = field(default=0, repr=False)

    @property
    def n(self) -> int:
        return int(self.F.shape[0])

    @property
    def denominator(self) -> float:
        return 1.0 - self.d - self.d * self.l

    @property
    def norm_factor(self) -> float:
        """Multiplier mapping H onto the completed-matrix solution."""
        denom = self.denominator
        return (1.0 - self.d) / denom if denom > 1e-15 else math.inf

    def refresh(self) -> None:
        self.f_abs = float(np.abs(self.F).sum())
        self._since_refresh = 0

    def copy(self) -> "DiState":
        return DiState(
            self.F.copy(), self.H.copy(), self.d, self.l, self.k, self.f_abs,
            None if self.Z is None else self.Z.copy(),
        )


class Scheduler:
    """Diffusion sequence generator.

    ``cyc`` repeats a fixed permutation of the nodes; ``argmax`` walks the
    same permutation but skips nodes holding less than the average fluid
    magnitude; ``greedy`` always picks the node with the most fluid (ties go
    to the smallest id).
    """

    def __init__(self, kind: str = "argmax", n: int | None = None, order=None, cursor: int = 0):
        if kind not in _KIND_CODES:
            raise ConfigError(f"unknown scheduler {kind!r}; expected one of {sorted(_KIND_CODES)}")
        self.kind = kind
        if order is None:
            self.order = None if n is None else np.arange(n, dtype=np.int64)
        else:
            order = np.asarray(order, dtype=np.int64)
            if not np.array_equal(np.sort(order), np.arange(order.shape[0])):
                raise ConfigError("scheduler order must be a permutation of the nodes")
            self.order = order
        self.cursor = int(cursor)

    def __repr__(self):
        return f"Scheduler({self.kind!r}, cursor={self.cursor})"

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    def bind(self, n: int) -> "Scheduler":
        if self.order is None:
            self.order = np.arange(n, dtype=np.int64)
        elif self.order.shape[0] != n:
            if self.order.shape[0] > n:
                raise ConfigError(f"scheduler has {self.order.shape[0]} nodes, state has {n}")
            extra = np.arange(self.order.shape[0], n, dtype=np.int64)
            self.order = np.concatenate([self.order, extra])
        self.cursor %= max(n, 1)
        return self


def di_init(g: Graph, cfg: SolverConfig) -> DiState:
    Z = cfg.zap(g.n)
    F = (1.0 - cfg.d) * Z
    state = DiState(F=F, H=np.zeros(g.n), d=cfg.d, Z=Z)
    state.refresh()
    return state


def di_step(state: DiState, g: Graph, i: int) -> DiState:
    """Diffuse node ``i`` once.  Mutates ``state`` and returns it."""
    if not 0 <= i < state.n:
        raise IndexError(f"node {i} out of range [0, {state.n})")
    f, delta = K.diffuse(g.indptr, g.indices, g.probs, state.F, state.H, state.d, i)
    state.f_abs = max(state.f_abs + delta, 0.0)
    if g.dangling[i]:
        state.l += f
    state.k += 1
    state._since_refresh += 1
    if state._since_refresh >= state.n:
        state.refresh()
    return state


def schedule_next(sched: Scheduler, state: DiState) -> tuple[int | None, int]:
    """Pick the next node to diffuse; returns ``(node, skipped)``.

    ``node`` is None when an argmax/greedy scheduler finds no fluid left.
    """
    sched.bind(state.n)
    n = state.n
    if sched.kind == "cyc":
        node = int(sched.order[sched.cursor])
        sched.cursor = (sched.cursor + 1) % n
        return node, 0
    if sched.kind == "greedy":
        mags = np.abs(state.F)
        node = int(np.argmax(mags))
        if mags[node] == 0.0:
            return None, 0
        return node, 0
    if state.f_abs == 0.0:
        state.refresh()
        if state.f_abs == 0.0:
            return None, 0
    pos, skipped = K._scan_argmax(state.F, sched.order, sched.cursor, state.f_abs / n)
    if pos < 0:
        state.refresh()
        if state.f_abs == 0.0:
            return None, skipped
        pos, more = K._scan_argmax(state.F, sched.order, sched.cursor, state.f_abs / n)
        skipped += more
        if pos < 0:
            pos = K._first_max(state.F, sched.order, sched.cursor)
    sched.cursor = (pos + 1) % n
    return int(sched.order[pos]), int(skipped)


def residual_bound(state: DiState) -> float:
    """L1 distance bound ``|F|_1 / (1 - d - d*l)`` to the completed-matrix solution.

    Right after :func:`di_update` the leak can transiently exceed what the
    bound can absorb; the bound is then reported as infinite.
    """
    denom = state.denominator
    if not denom > 1e-15 or not math.isfinite(state.l):
        if math.isfinite(state.l) and np.any(state.F < 0):
            return math.inf
        raise InvariantError(
            f"leak l={state.l!r} too large for damping d={state.d!r}; state is corrupted"
        )
    return state.f_abs / denom


def normalized_history(state: DiState) -> np.ndarray:
    """History rescaled by ``(1 - d) / (1 - d - d*l)``."""
    denom = state.denominator
    if not denom > 1e-15:
        raise InvariantError(
            f"cannot normalize: 1 - d - d*l = {denom!r} (leak l={state.l!r})"
        )
    return state.H * ((1.0 - state.d) / denom)


def di_advance(state: DiState, g: Graph, sched: Scheduler, max_steps: int,
               epsilon: float = 0.0) -> tuple[int, int, int]:
    """Run up to ``max_steps`` diffusions; returns ``(steps, scans, status)``.

    Status is one of ``_kernels.BUDGET``, ``BOUND_REACHED`` (residual bound
    at or below ``epsilon``) or ``NO_FLUID``.
    """
    sched.bind(state.n)
    state.refresh()
    steps, scans, cursor, f_abs, leak, status = K.advance(
        g.indptr, g.indices, g.probs, g.dangling, state.F, state.H, state.d,
        sched.code, sched.order, sched.cursor, state.f_abs, state.l, max_steps, epsilon,
    )
    sched.cursor = int(cursor)
    state.k += int(steps)
    state.f_abs = float(f_abs)
    state.l = float(leak)
    return int(steps), int(scans), int(status)


def _error(state: DiState, reference) -> float | None:
    if reference is None or not state.denominator > 1e-15:
        return None
    return float(np.abs(normalized_history(state) - reference).sum())


def di_run(g: Graph, cfg: SolverConfig, sched: Scheduler | None = None,
           state: DiState | None = None, reference=None,
           label: str | None = None) -> tuple[DiState, ConvergenceTrace]:
    """Diffuse until the residual bound reaches ``cfg.epsilon``.

    Starts from ``state`` when given (e.g. after :func:`di_update`),
    otherwise from :func:`di_init`.  One trace row is written per round of
    ``n`` diffusions, plus a final partial-round row if the run stops
    mid-round.  Errors are measured on the normalized history when a
    ``reference`` is supplied.
    """
    if sched is None:
        sched = Scheduler("argmax")
    if state is None:
        state = di_init(g, cfg)
    elif state.n != g.n:
        raise ConfigError(f"state has {state.n} nodes, graph has {g.n}")
    label = label or f"di-{sched.kind}"
    n = g.n
    trace = ConvergenceTrace(converged=False)
    if reference is not None:
        trace.add(label, 0, 0, 0, _error(state, reference), _bound_or_none(state))
    done = scans = 0
    for r in range(1, cfg.max_rounds + 1):
        steps, sc, status = di_advance(state, g, sched, n, cfg.epsilon)
        done += steps
        scans += sc
        trace.add(label, r, done, scans, _error(state, reference), _bound_or_none(state))
        if status != K.BUDGET:
            trace.converged = True
            break
    else:
        trace.converged = residual_bound(state) <= cfg.epsilon
    return state, trace


def _bound_or_none(state: DiState) -> float | None:
    b = residual_bound(state)
    return b if math.isfinite(b) else None


def _check_changed_columns(g_old: Graph, g_new: Graph, changed: frozenset[int]) -> None:
    n = g_new.n
    bad = [j for j in changed if not 0 <= j < n]
    if bad:
        raise UpdateError(f"changed columns {sorted(bad)} outside [0, {n})")
    deg_old = np.zeros(n, dtype=np.int64)
    deg_old[: g_old.n] = g_old.out_degree
    deg_new = g_new.out_degree
    keep = np.ones(n, dtype=bool)
    keep[list(changed)] = False
    differing = keep & (deg_old != deg_new)
    if differing.any():
        raise UpdateError(
            f"column {int(np.flatnonzero(differing)[0])} changed but is not in the changed set"
        )
    old_mask = np.repeat(keep[: g_old.n], g_old.out_degree)
    new_mask = np.repeat(keep, deg_new)
    oi, ni = g_old.indices[old_mask], g_new.indices[new_mask]
    op, np_ = g_old.probs[old_mask], g_new.probs[new_mask]
    mismatch = (oi != ni) | (np.abs(op - np_) > 1e-14)
    if mismatch.any():
        src = np.repeat(np.arange(n), np.where(keep, deg_new, 0))
        j = int(src[np.flatnonzero(mismatch)[0]])
        raise UpdateError(f"column {j} changed but is not in the changed set")


def di_update(state: DiState, g_old: Graph, g_new: Graph, changed,
              zap=None) -> DiState:
    """Re-base a D-Iteration state onto a modified graph.

    The history is kept; the fluid receives ``d * (P_new - P_old) @ H``,
    touching only ``changed`` columns, so that continuing the diffusion on
    ``g_new`` converges to the new solution.  Vectors are zero-padded when
    the graph grows.  ``zap`` optionally replaces the default distribution,
    in which case ``(1 - d) * (zap - Z)`` is injected as well.

    The leak is re-based to the history held by the dangling nodes of
    ``g_new``, which keeps :func:`normalized_history` and
    :func:`residual_bound` exact for the new graph.  Returns a new state;
    ``state`` is left untouched.
    """
    changed = frozenset(int(j) for j in changed)
    if state.n != g_old.n:
        raise UpdateError(f"state has {state.n} nodes, old graph has {g_old.n}")
    if g_new.n < g_old.n:
        raise UpdateError("node removal is not supported; the new graph must keep all ids")
    _check_changed_columns(g_old, g_new, changed)

    n, d = g_new.n, state.d
    pad = n - state.n
    H = np.concatenate([state.H, np.zeros(pad)])
    F = np.concatenate([state.F, np.zeros(pad)])
    Z = None if state.Z is None else np.concatenate([state.Z, np.zeros(pad)])

    for j in sorted(changed):
        h = H[j]
        if h == 0.0:
            continue
        if j < g_old.n:
            lo, hi = g_old.indptr[j], g_old.indptr[j + 1]
            F[g_old.indices[lo:hi]] -= d * h * g_old.probs[lo:hi]
        lo, hi = g_new.indptr[j], g_new.indptr[j + 1]
        F[g_new.indices[lo:hi]] += d * h * g_new.probs[lo:hi]

    if zap is not None:
        zap = np.asarray(zap, dtype=np.float64)
        if zap.shape != (n,):
            raise UpdateError(f"zap has shape {zap.shape}, expected ({n},)")
        if Z is None:
            raise UpdateError("state carries no default distribution to replace")
        F += (1.0 - d) * (zap - Z)
        Z = zap.copy()

    # keep l equal to the history held by dangling nodes of the new graph
    l = state.l
    for j in changed:
        was = j < g_old.n and bool(g_old.dangling[j])
        now = bool(g_new.dangling[j])
        if was != now:
            l += H[j] if now else -H[j]

    new = DiState(F=F, H=H, d=d, l=float(l), k=state.k, Z=Z)
    new.refresh()
    return new


def save_state(state: DiState, stream: TextIO) -> None:
    stream.write(STATE_MAGIC + "\n")
    stream.write(
        f"{state.n} {state.d:.17g} {state.k} {state.l:.17g} {state.norm_factor:.17g}\n"
    )
    for h, f in zip(state.H.tolist(), state.F.tolist()):
        stream.write(f"{h:.17g} {f:.17g}\n")


def load_state(stream: TextIO) -> DiState:
    """Read a state written by :func:`save_state`.

    The default distribution is not stored, so the loaded state has ``Z=None``.
    """
    magic = stream.readline().strip()
    if magic != STATE_MAGIC:
        raise StateFormatError(f"not a D-Iteration state file (header {magic!r})")
    head = stream.readline().split()
    if len(head) != 5:
        raise StateFormatError("line 2 must hold 'n d k l norm_factor'")
    try:
        n, k = int(head[0]), int(head[2])
        d, l, factor = float(head[1]), float(head[3]), float(head[4])
    except ValueError as exc:
        raise StateFormatError(f"line 2: {exc}") from None
    if not 0 < d < 1 or n < 0 or k < 0:
        raise StateFormatError("line 2: invalid n, d or k")
    H = np.empty(n)
    F = np.empty(n)
    for i in range(n):
        toks = stream.readline().split()
        if len(toks) != 2:
            raise StateFormatError(f"line {i + 3}: expected 'H F'")
        try:
            H[i], F[i] = float(toks[0]), float(toks[1])
        except ValueError as exc:
            raise StateFormatError(f"line {i + 3}: {exc}") from None
    if stream.readline().strip():
        raise StateFormatError(f"trailing data after {n} node lines")
    state = DiState(F=F, H=H, d=d, l=l, k=k)
    if not math.isclose(state.norm_factor, factor, rel_tol=1e-12):
        raise StateFormatError(
            f"norm_factor {factor!r} inconsistent with d and l (expected {state.norm_factor!r})"
        )
    state.refresh()
    return state
