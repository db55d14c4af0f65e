"""Directed weighted graphs stored as the columns of the diffusion matrix.

Column ``j`` of the diffusion matrix holds the out-edges of node ``j``; the
entry for target ``i`` is ``w(j, i) / sum_k w(j, k)``.  Nodes without
out-edges are dangling and their column is empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp


class GraphError(Exception):
    """Base class for graph construction and mutation errors."""


class ParseError(GraphError, ValueError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line.strip()!r}")
        self.lineno = lineno


class DeltaError(GraphError, ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable CSR-by-column store of the diffusion matrix.

    ``indices[indptr[j]:indptr[j+1]]`` are the (sorted, distinct) targets of
    node ``j``; ``probs`` and ``weights`` are aligned with ``indices``.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    probs: np.ndarray
    out_weight_sum: np.ndarray
    dangling: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, src, dst, weight=None, n: int | None = None) -> "Graph":
        """Build a graph from parallel edge arrays; parallel edges are merged
        by summing their weights."""
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise GraphError("src and dst must have the same length")
        if weight is None:
            w = np.ones(src.shape[0], dtype=np.float64)
        else:
            w = np.asarray(weight, dtype=np.float64).ravel()
            if w.shape != src.shape:
                raise GraphError("weight must match the edge count")
            if w.size and not (np.all(np.isfinite(w)) and np.all(w > 0)):
                raise GraphError("edge weights must be finite and positive")
        if src.size and (src.min() < 0 or dst.min() < 0):
            raise GraphError("node ids must be non-negative")
        seen = int(max(src.max(), dst.max())) + 1 if src.size else 0
        n = seen if n is None else max(int(n), seen)

        if src.size:
            key = src * n + dst
            ukey, inverse = np.unique(key, return_inverse=True)
            merged = np.zeros(ukey.shape[0])
            np.add.at(merged, inverse, w)
            usrc, udst = np.divmod(ukey, n)
        else:
            usrc = udst = np.zeros(0, dtype=np.int64)
            merged = np.zeros(0)

        counts = np.bincount(usrc, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        out_sum = np.bincount(usrc, weights=merged, minlength=n).astype(np.float64)
        probs = merged / out_sum[usrc] if usrc.size else np.zeros(0)
        return cls(
            n=n,
            indptr=_frozen(indptr),
            indices=_frozen(udst.astype(np.int64)),
            weights=_frozen(merged),
            probs=_frozen(probs.astype(np.float64)),
            out_weight_sum=_frozen(out_sum),
            dangling=_frozen(counts == 0),
        )

    @property
    def n_edges(self) -> int:
        return int(self.indices.shape[0])

    @property
    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def transitions(self, j: int) -> list[tuple[int, float]]:
        """Non-zero entries ``(i, P[i, j])`` of column ``j``."""
        if not 0 <= j < self.n:
            raise IndexError(f"node {j} out of range [0, {self.n})")
        lo, hi = self.indptr[j], self.indptr[j + 1]
        return [(int(i), float(p)) for i, p in zip(self.indices[lo:hi], self.probs[lo:hi])]

    def edges(self) -> Iterable[tuple[int, int, float]]:
        """Yield merged raw edges ``(src, dst, weight)`` in (src, dst) order."""
        for j in range(self.n):
            for pos in range(self.indptr[j], self.indptr[j + 1]):
                yield j, int(self.indices[pos]), float(self.weights[pos])

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree)
        return src, self.indices.copy(), self.weights.copy()

    def weight(self, src: int, dst: int) -> float | None:
        if not (0 <= src < self.n):
            return None
        lo, hi = self.indptr[src], self.indptr[src + 1]
        pos = lo + np.searchsorted(self.indices[lo:hi], dst)
        if pos < hi and self.indices[pos] == dst:
            return float(self.weights[pos])
        return None

    @cached_property
    def matrix(self) -> sp.csc_matrix:
        """The diffusion matrix P as a scipy CSC matrix (column j = out-edges of j)."""
        return sp.csc_matrix(
            (self.probs, self.indices, self.indptr), shape=(self.n, self.n)
        )

    @cached_property
    def rows(self) -> sp.csr_matrix:
        """Row (in-edge) view of P, built on first use for pull solvers."""
        m = self.matrix.tocsr()
        m.sort_indices()
        return m

    def dense(self, completed_with=None) -> np.ndarray:
        """Dense P; dangling columns replaced by ``completed_with`` if given."""
        p = self.matrix.toarray()
        if completed_with is not None:
            p[:, self.dangling] = np.asarray(completed_with, dtype=np.float64)[:, None]
        return p

    def same_structure(self, other: "Graph") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
        )


def transitions(g: Graph, j: int) -> list[tuple[int, float]]:
    return g.transitions(j)


def _parse_id(tok: str, lineno: int, line: str) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise ParseError(lineno, line, f"node id {tok!r} is not an integer") from None
    if v < 0:
        raise ParseError(lineno, line, f"node id {v} is negative")
    return v


def _parse_weight(tok: str, lineno: int, line: str) -> float:
    try:
        w = float(tok)
    except ValueError:
        raise ParseError(lineno, line, f"weight {tok!r} is not a number") from None
    if not math.isfinite(w) or w <= 0:
        raise ParseError(lineno, line, f"weight {tok!r} must be positive")
    return w


def _content_lines(stream: TextIO):
    for lineno, line in enumerate(stream, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        yield lineno, line, s.split()


def load_edge_list(stream: TextIO, n: int | None = None) -> Graph:
    """Parse ``src dst [weight]`` lines into a :class:`Graph`.

    Blank lines and lines starting with ``#`` are skipped.  ``n`` raises the
    node count above ``1 + max id`` when given.
    """
    src, dst, wts = [], [], []
    for lineno, line, toks in _content_lines(stream):
        if len(toks) not in (2, 3):
            raise ParseError(lineno, line, f"expected 2 or 3 fields, got {len(toks)}")
        src.append(_parse_id(toks[0], lineno, line))
        dst.append(_parse_id(toks[1], lineno, line))
        wts.append(_parse_weight(toks[2], lineno, line) if len(toks) == 3 else 1.0)
    return Graph.from_edges(src, dst, wts, n=n)


@dataclass(frozen=True)
class GraphDelta:
    additions: tuple[tuple[int, int, float], ...] = ()
    removals: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "additions", tuple((int(s), int(t), float(w)) for s, t, w in self.additions)
        )
        object.__setattr__(self, "removals", tuple((int(s), int(t)) for s, t in self.removals))
        seen = set()
        for s, t, w in self.additions:
            if s < 0 or t < 0:
                raise DeltaError(f"negative node id in addition ({s}, {t})")
            if not math.isfinite(w) or w <= 0:
                raise DeltaError(f"addition ({s}, {t}) has non-positive weight {w}")
            if (s, t) in seen:
                raise DeltaError(f"edge ({s}, {t}) appears more than once in delta")
            seen.add((s, t))
        for s, t in self.removals:
            if (s, t) in seen:
                raise DeltaError(f"edge ({s}, {t}) appears more than once in delta")
            seen.add((s, t))

    def __bool__(self):
        return bool(self.additions or self.removals)

    @property
    def sources(self) -> frozenset[int]:
        return frozenset(s for s, _, _ in self.additions) | frozenset(s for s, _ in self.removals)


def load_delta(stream: TextIO) -> GraphDelta:
    """Parse ``+ src dst [weight]`` / ``- src dst`` lines."""
    adds, rems = [], []
    for lineno, line, toks in _content_lines(stream):
        op, rest = toks[0], toks[1:]
        if op == "+":
            if len(rest) not in (2, 3):
                raise ParseError(lineno, line, "addition needs 'src dst [weight]'")
            w = _parse_weight(rest[2], lineno, line) if len(rest) == 3 else 1.0
            adds.append((_parse_id(rest[0], lineno, line), _parse_id(rest[1], lineno, line), w))
        elif op == "-":
            if len(rest) != 2:
                raise ParseError(lineno, line, "removal needs 'src dst'")
            rems.append((_parse_id(rest[0], lineno, line), _parse_id(rest[1], lineno, line)))
        else:
            raise ParseError(lineno, line, f"unknown delta operation {op!r}")
    try:
        return GraphDelta(tuple(adds), tuple(rems))
    except DeltaError as exc:
        raise DeltaError(f"invalid delta: {exc}") from None


def apply_delta(g: Graph, delta: GraphDelta) -> tuple[Graph, frozenset[int]]:
    """Return the updated graph and the set of source columns the delta touched.

    Additions on an existing edge add to its weight.  The node count grows
    when an addition names a new id.
    """
    if not delta:
        return g, frozenset()
    src, dst, w = g.edge_arrays()
    n = g.n
    if delta.removals:
        rem = np.array(delta.removals, dtype=np.int64)
        for s, t in delta.removals:
            if g.weight(s, t) is None:
                raise DeltaError(f"cannot remove absent edge ({s}, {t})")
        big = max(n, int(rem.max()) + 1)
        keep = ~np.isin(src * big + dst, rem[:, 0] * big + rem[:, 1])
        src, dst, w = src[keep], dst[keep], w[keep]
    if delta.additions:
        add = np.array([(s, t) for s, t, _ in delta.additions], dtype=np.int64)
        aw = np.array([x for _, _, x in delta.additions])
        src = np.concatenate([src, add[:, 0]])
        dst = np.concatenate([dst, add[:, 1]])
        w = np.concatenate([w, aw])
    return Graph.from_edges(src, dst, w, n=n), delta.sources


def write_edge_list(g: Graph, stream: TextIO) -> None:
    for s, t, w in g.edges():
        stream.write(f"{s} {t} {w!r}\n")
