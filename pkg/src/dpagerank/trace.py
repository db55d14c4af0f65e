"""Per-round convergence records and their CSV serialization."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, TextIO

CSV_HEADER = ("algo", "round", "diffusions", "scans", "l1_error", "bound")


@dataclass(frozen=True)
class TraceRow:
    algo: str
    round: int
    diffusions: int
    scans: int | None = None
    l1_error: float | None = None
    bound: float | None = None


@dataclass
class ConvergenceTrace:
    """Rows of one or more solver runs.

    ``converged`` is False when a solver stopped on its round budget before
    reaching its tolerance; the accompanying vector is still usable.
    """

    rows: list[TraceRow] = field(default_factory=list)
    converged: bool = True

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def add(self, algo, round, diffusions, scans=None, l1_error=None, bound=None):
        self.rows.append(TraceRow(algo, round, diffusions, scans, l1_error, bound))

    def extend(self, other: "ConvergenceTrace") -> None:
        self.rows.extend(other.rows)
        self.converged = self.converged and other.converged

    def for_algo(self, algo: str) -> list[TraceRow]:
        return [r for r in self.rows if r.algo == algo]

    @property
    def algos(self) -> list[str]:
        return list(dict.fromkeys(r.algo for r in self.rows))

    def rounds_to(self, algo: str, error: float) -> int | None:
        """First round at which ``algo``'s L1 error is at or below ``error``."""
        for r in self.for_algo(algo):
            if r.l1_error is not None and r.l1_error <= error:
                return r.round
        return None

    def errors(self, algo: str) -> list[float]:
        return [r.l1_error for r in self.for_algo(algo)]

    def to_csv(self, stream: TextIO) -> None:
        write_csv(self.rows, stream)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def write_csv(rows: Iterable[TraceRow], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.algo, r.round, r.diffusions, _fmt(r.scans), _fmt(r.l1_error), _fmt(r.bound)])


def read_csv(stream: TextIO) -> ConvergenceTrace:
    reader = csv.reader(stream)
    header = next(reader)
    if tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected trace header {header!r}")
    trace = ConvergenceTrace()
    for algo, rnd, diff, scans, err, bound in reader:
        trace.add(
            algo,
            int(rnd),
            int(diff),
            int(scans) if scans else None,
            float(err) if err else None,
            float(bound) if bound else None,
        )
    return trace
