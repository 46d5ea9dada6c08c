"""Makespan of a multi-process computation with and without per-step barriers.

A run is described by a P x K grid of stage times: P processes, K steps,
each entry the wall time one process needs for one step (local work plus
any waiting, excluding time spent blocked in a barrier). Synchronizing
after every step costs the per-step maximum; removing the barriers lets
each process run at its own pace, so the run ends when the slowest total
does. Everything here models exactly that interchange of sum and max,
nothing else (no message latency, no pipeline fill).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "StepTimeMatrix",
    "MakespanReport",
    "synchronized_makespan",
    "asynchronous_makespan",
    "deterministic_speedup",
    "makespan_report",
]


class StepTimeMatrix:
    """Per-process, per-step stage times in seconds.

    Rows index processes, columns index steps. Entries must be finite and
    nonnegative; negatives are rejected rather than clamped so that a buggy
    generator cannot silently masquerade as well-behaved noise.
    """

    __slots__ = ("times",)

    def __init__(self, times):
        arr = np.array(times, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("step-time matrix must be two-dimensional and non-empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("step-time matrix entries must be finite")
        if np.any(arr < 0.0):
            raise ValueError("step-time matrix entries must be nonnegative")
        arr.flags.writeable = False
        self.times = arr

    @property
    def processes(self) -> int:
        return self.times.shape[0]

    @property
    def steps(self) -> int:
        return self.times.shape[1]

    @classmethod
    def from_csv(cls, path) -> "StepTimeMatrix":
        """Load a matrix from CSV: one row per process, one column per step, no header."""
        arr = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
        return cls(arr)

    def __repr__(self) -> str:
        return f"StepTimeMatrix(P={self.processes}, K={self.steps})"


@dataclass(frozen=True)
class MakespanReport:
    """Synchronized and barrier-free makespans plus their ratio."""

    synchronized: float
    asynchronous: float
    speedup: float


def _times(matrix) -> np.ndarray:
    if isinstance(matrix, StepTimeMatrix):
        return matrix.times
    return StepTimeMatrix(matrix).times


def synchronized_makespan(matrix) -> float:
    """Total run time with a barrier after every step: sum over steps of the per-step max."""
    t = _times(matrix)
    return float(t.max(axis=0).sum())


def asynchronous_makespan(matrix) -> float:
    """Total run time without barriers: max over processes of each process's total."""
    t = _times(matrix)
    # Row sums use the same pairwise reduction over the step axis as the
    # synchronized path, so dominance holds exactly even in floating point.
    return float(t.sum(axis=1).max())


def makespan_report(matrix) -> MakespanReport:
    """Both makespans and their ratio; an all-zero matrix reports speedup 1."""
    sync = synchronized_makespan(matrix)
    async_ = asynchronous_makespan(matrix)
    speedup = 1.0 if async_ == 0.0 else sync / async_
    return MakespanReport(synchronized=sync, asynchronous=async_, speedup=speedup)


def deterministic_speedup(W: float, T0: float, K: int) -> float:
    """Speedup of the two-process staggered-wait scenario.

    One process stalls for ``W`` on the first step, the other on the second,
    and every step costs ``T0`` of regular work on top. Removing the barrier
    overlaps the two stalls, giving (2*W + K*T0) / (W + K*T0), i.e.
    (2 + a)/(1 + a) with a = K*T0/W. The pre-cancellation form is used so
    the ratio is exact whenever the two makespans are exactly representable.
    """
    if not W > 0:
        raise ValueError("W must be positive")
    if T0 < 0:
        raise ValueError("T0 must be nonnegative")
    if K < 1:
        raise ValueError("K must be at least 1")
    work = K * T0
    return (2.0 * W + work) / (W + work)
