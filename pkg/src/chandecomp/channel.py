"""Quantum channels between spaces of possibly different dimension.

Conventions
-----------
* A channel from dimension ``n`` to ``m`` is a list of ``m x n`` Kraus
  operators with ``sum_k K_k^dag K_k = 1_n``.
* The Choi matrix is ``(E (x) 1)(|eta><eta|)`` with
  ``|eta> = n^{-1/2} sum_i |i, i>``: output factor first, reference second,
  unit trace. In index form ``C[(a, i), (b, j)] = (1/n) sum_k K_k[a, i] conj(K_k[b, j])``,
  i.e. ``C = (1/n) sum_k vec(K_k) vec(K_k)^dag`` with row-major ``vec``.
  Partial trace over the output gives ``1_n / n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NotCPError, ValidationError
from .matgen import haar_unitary
from .validation import (
    check_complex_matrix,
    check_density_matrix,
    check_kraus,
    check_probability_vector,
)

__all__ = [
    "CPTPReport",
    "ChoiMatrix",
    "ExtremalityReport",
    "QuantumChannel",
    "apply",
    "choi_from_kraus",
    "classify_extremality",
    "convex_combine",
    "kraus_from_choi",
    "prep_channel",
    "random_channel",
    "stinespring",
    "trace_channel",
    "validate_cptp",
]

TP_ATOL = 1e-10
RANK_RTOL = 1e-10


class QuantumChannel:
    """Kraus representation of a CPTP map from dimension ``n`` to ``m``.

    Parameters
    ----------
    kraus : sequence of array_like or ndarray of shape (r, m, n)
        Kraus operators. Stored as a read-only complex array.
    atol : float
        Tolerance on ``||sum K^dag K - 1||_F``.
    """

    __slots__ = ("_kraus",)

    def __init__(self, kraus, *, atol: float = TP_ATOL):
        k = check_kraus(kraus).copy()
        resid = _tp_residual(k)
        if resid > atol:
            raise ValidationError(
                f"Kraus operators are not trace preserving: ||sum K^dag K - 1||_F = {resid:.3g}"
            )
        k.flags.writeable = False
        self._kraus = k

    @property
    def kraus(self) -> np.ndarray:
        return self._kraus

    @property
    def n(self) -> int:
        return self._kraus.shape[2]

    @property
    def m(self) -> int:
        return self._kraus.shape[1]

    def __len__(self):
        return self._kraus.shape[0]

    def __repr__(self):
        return f"QuantumChannel(n={self.n}, m={self.m}, num_kraus={len(self)})"


@dataclass(frozen=True)
class ChoiMatrix:
    """Unit-trace Choi matrix of an (n, m)-channel, ordered output (x) input."""

    n: int
    m: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = check_complex_matrix(self.matrix, "Choi matrix", shape=(self.n * self.m,) * 2)
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def checked(cls, matrix, n: int, m: int, atol: float = TP_ATOL) -> "ChoiMatrix":
        """Build and enforce Hermiticity, positivity, unit trace and the partial-trace condition."""
        c = cls(n, m, matrix)
        mat = c.matrix
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > 1e-12:
            raise ValidationError(f"Choi matrix is not Hermitian (max deviation {herm:.3g})")
        lo = np.linalg.eigvalsh(mat)[0]
        if lo < -atol:
            raise NotCPError(f"Choi matrix has eigenvalue {lo:.3g} < -{atol:g}; map is not CP")
        tr = np.trace(mat).real
        if abs(tr - 1) > atol:
            raise ValidationError(f"Choi matrix has trace {tr:.12g}, expected 1")
        ptr = c.partial_trace_output()
        dev = np.max(np.abs(ptr - np.eye(n) / n))
        if dev > atol:
            raise ValidationError(f"partial trace over the output deviates from 1/n by {dev:.3g}")
        return c

    def partial_trace_output(self) -> np.ndarray:
        t = self.matrix.reshape(self.m, self.n, self.m, self.n)
        return np.einsum("aiaj->ij", t)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class CPTPReport:
    """Outcome of :func:`validate_cptp`; ``accepted`` is the verdict."""

    accepted: bool
    tp_residual: float
    min_choi_eigenvalue: float
    shapes_ok: bool
    message: str

    def __bool__(self):
        return self.accepted


@dataclass(frozen=True)
class ExtremalityReport:
    kraus_rank: int
    gram_rank: int
    classification: str  # "extreme" | "quasi-extreme" | "not-generalized-extreme"
    tolerance_used: float

    @property
    def is_generalized_extreme(self) -> bool:
        return self.classification != "not-generalized-extreme"


def _tp_residual(k: np.ndarray) -> float:
    gram = np.einsum("kai,kaj->ij", k.conj(), k)
    return float(np.linalg.norm(gram - np.eye(k.shape[2])))


def _choi_from_stack(k: np.ndarray) -> np.ndarray:
    vecs = k.reshape(k.shape[0], -1)
    return vecs.T @ vecs.conj() / k.shape[2]


def apply(ch: QuantumChannel, rho) -> np.ndarray:
    """``sum_k K_k rho K_k^dag`` for a validated n x n density matrix."""
    rho = check_density_matrix(rho, dim=ch.n)
    k = ch.kraus
    return np.einsum("kai,ij,kbj->ab", k, rho, k.conj())


def choi_from_kraus(ch: QuantumChannel) -> ChoiMatrix:
    return ChoiMatrix(ch.n, ch.m, _choi_from_stack(ch.kraus))


def _fix_phase(v: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(v)))
    return v * (abs(v[idx]) / v[idx])


def kraus_from_choi(c: ChoiMatrix, rtol: float = RANK_RTOL, atol: float = TP_ATOL) -> QuantumChannel:
    """Canonical (linearly independent) Kraus set from the Choi spectrum.

    Eigenvalues above ``rtol * max_eigenvalue`` are kept, in descending
    order; each eigenvector's largest-modulus entry is made real positive.
    Raises :class:`NotCPError` if an eigenvalue falls below ``-atol``.
    """
    w, v = np.linalg.eigh((c.matrix + c.matrix.conj().T) / 2)
    if w[0] < -atol:
        raise NotCPError(f"Choi matrix has eigenvalue {w[0]:.3g}; map is not completely positive")
    keep = w > rtol * w[-1]
    w, v = w[keep][::-1], v[:, keep][:, ::-1]
    kraus = [
        np.sqrt(c.n * lam) * _fix_phase(v[:, i]).reshape(c.m, c.n) for i, lam in enumerate(w)
    ]
    return QuantumChannel(kraus, atol=max(atol, 1e-8))


def validate_cptp(kraus, n: int, m: int) -> CPTPReport:
    """Check shapes, trace preservation (< 1e-8) and Choi positivity (>= -1e-10).

    Never raises on mathematically invalid input; the verdict and residuals
    are in the returned report.
    """
    try:
        k = check_kraus(kraus)
    except (ValueError, TypeError) as exc:
        return CPTPReport(False, float("inf"), float("nan"), False, str(exc))
    if k.shape[1:] != (m, n):
        return CPTPReport(
            False, float("inf"), float("nan"), False,
            f"Kraus operators have shape {k.shape[1:]}, expected {(m, n)}",
        )
    resid = _tp_residual(k)
    lo = float(np.linalg.eigvalsh(_choi_from_stack(k))[0])
    problems = []
    if resid >= 1e-8:
        problems.append(f"trace-preservation residual {resid:.3g} >= 1e-8")
    if lo < -1e-10:
        problems.append(f"Choi min eigenvalue {lo:.3g} < -1e-10")
    return CPTPReport(not problems, resid, lo, True, "; ".join(problems) or "ok")


def classify_extremality(ch: QuantumChannel, tol: float = RANK_RTOL) -> ExtremalityReport:
    """Classify a channel as extreme, quasi-extreme or not generalized extreme.

    The Kraus set is first canonicalized through the Choi matrix. The channel
    is extreme iff the ``r**2`` products ``K_i^dag K_j`` are linearly
    independent; it is generalized extreme iff ``r <= n``. Ranks use singular
    values relative to the largest one, threshold ``tol``.
    """
    canon = kraus_from_choi(choi_from_kraus(ch), rtol=tol)
    k = canon.kraus
    r = k.shape[0]
    prods = np.einsum("iab,jac->ijbc", k.conj(), k).reshape(r * r, -1)
    sv = np.linalg.svd(prods, compute_uv=False)
    gram_rank = int(np.sum(sv > tol * sv[0]))
    if r > ch.n:
        cls = "not-generalized-extreme"
    elif gram_rank == r * r:
        cls = "extreme"
    else:
        cls = "quasi-extreme"
    return ExtremalityReport(r, gram_rank, cls, tol)


def random_channel(n: int, m: int, rank: int, seed=None) -> QuantumChannel:
    """Random channel of Kraus rank ``rank`` from a Haar-random isometry.

    The first ``n`` columns of a Haar unitary on ``m * rank`` dimensions are
    cut into ``rank`` blocks of ``m`` rows each.
    """
    if n < 1 or m < 1:
        raise ValueError(f"dimensions must be positive, got n={n}, m={m}")
    if not 1 <= rank <= n * m:
        raise ValueError(f"rank must lie in [1, {n * m}], got {rank}")
    if m * rank < n:
        raise ValueError(f"no ({n},{m})-channel has Kraus rank {rank}: need m*rank >= n")
    iso = haar_unitary(m * rank, seed)[:, :n]
    return QuantumChannel(iso.reshape(rank, m, n))


def trace_channel(n: int) -> QuantumChannel:
    """The unique (n, 1)-channel, Kraus operators ``<i|``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return QuantumChannel(np.eye(n).reshape(n, 1, n))


def prep_channel(state, rtol: float = RANK_RTOL) -> QuantumChannel:
    """(1, m)-channel preparing ``state``; its Choi matrix is ``state`` itself."""
    state = check_density_matrix(state, name="state")
    w, v = np.linalg.eigh((state + state.conj().T) / 2)
    keep = w > rtol * w[-1]
    w, v = w[keep][::-1], v[:, keep][:, ::-1]
    kraus = [np.sqrt(lam) * _fix_phase(v[:, i])[:, None] for i, lam in enumerate(w)]
    return QuantumChannel(kraus, atol=1e-8)


def convex_combine(channels, probs) -> QuantumChannel:
    """Channel ``sum_i p_i E_i`` with Kraus set ``{sqrt(p_i) K : K in E_i}``."""
    channels = list(channels)
    if not channels:
        raise ValueError("need at least one channel")
    probs = check_probability_vector(probs, size=len(channels))
    n, m = channels[0].n, channels[0].m
    for i, ch in enumerate(channels):
        if (ch.n, ch.m) != (n, m):
            raise ValueError(f"channel {i} maps {ch.n}->{ch.m}, expected {n}->{m}")
    parts = [np.sqrt(p) * ch.kraus for p, ch in zip(probs, channels) if p > 0]
    return QuantumChannel(np.concatenate(parts), atol=1e-8)


def stinespring(ch: QuantumChannel) -> np.ndarray:
    """Isometry ``V = sum_k |k> (x) K_k`` of shape (m * r, n), ancilla index major."""
    return ch.kraus.reshape(-1, ch.n)
