"""Distances between channels through their Choi matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChoiMatrix

__all__ = ["DistanceReport", "diamond_bound", "trace_distance"]


@dataclass(frozen=True)
class DistanceReport:
    trace_distance: float
    diamond_upper_bound: float
    n: int


def _as_matrix(c):
    return c.matrix if isinstance(c, ChoiMatrix) else np.asarray(c, dtype=complex)


def trace_distance(a, b) -> float:
    """``(1/2) sum_k |lambda_k(a - b)|`` for Choi matrices (or Hermitian arrays) of equal shape."""
    if isinstance(a, ChoiMatrix) and isinstance(b, ChoiMatrix) and (a.n, a.m) != (b.n, b.m):
        raise ValueError(f"dimension mismatch: ({a.n},{a.m}) vs ({b.n},{b.m})")
    ma, mb = _as_matrix(a), _as_matrix(b)
    if ma.shape != mb.shape:
        raise ValueError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    diff = ma - mb
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))


def diamond_bound(a: ChoiMatrix, b: ChoiMatrix) -> DistanceReport:
    """Trace distance together with the diamond-norm bound ``2 n D_t``."""
    d = trace_distance(a, b)
    return DistanceReport(d, 2 * a.n * d, a.n)
