"""Dense complex matrix primitives.

Givens rotations, multiplexers (uniformly controlled rotations), Haar
sampling, a smooth SU(d) parameterization and the 2x2-partitioned
cosine-sine decomposition.

Sign convention for every rotation in the package::

    G_ij(theta) = cos(theta) (|i><i| + |j><j|) + sin(theta) (|j><i| - |i><j|)

so ``G[j, i] = sin(theta)`` and ``G[i, j] = -sin(theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .exceptions import ValidationError

__all__ = [
    "CsdFactorization",
    "cosine_sine_decompose",
    "gell_mann_basis",
    "givens",
    "haar_unitary",
    "multiplexer",
    "param_unitary",
    "su_from_params",
]


def givens(i: int, j: int, theta: float, dim: int) -> np.ndarray:
    """Two-level rotation by ``theta`` on span{|i>, |j>}, identity elsewhere."""
    if not 0 <= i < j < dim:
        raise ValueError(f"need 0 <= i < j < dim, got i={i}, j={j}, dim={dim}")
    theta = float(theta) % (2 * np.pi)
    c, s = np.cos(theta), np.sin(theta)
    g = np.eye(dim, dtype=complex)
    g[i, i] = g[j, j] = c
    g[j, i] = s
    g[i, j] = -s
    return g


def multiplexer(i: int, j: int, angles, target_dim: int) -> np.ndarray:
    """Uniformly controlled Givens rotation ``sum_l |l><l| (x) G_ij(angles[l])``.

    The control register comes first in the tensor product, so the result is
    block diagonal with block ``l`` equal to ``givens(i, j, angles[l], target_dim)``.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.ndim != 1 or angles.size == 0:
        raise ValueError("multiplexer needs a non-empty 1-d list of angles")
    return scipy.linalg.block_diag(*(givens(i, j, t, target_dim) for t in angles))


def haar_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-distributed ``dim x dim`` unitary.

    QR of a standard complex Gaussian matrix, with the phases of ``diag(R)``
    moved into ``Q`` so the distribution is exactly Haar.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


@lru_cache(maxsize=None)
def gell_mann_basis(dim: int) -> np.ndarray:
    """The ``dim**2 - 1`` generalized Gell-Mann matrices, shape (dim**2-1, dim, dim).

    Ordered: symmetric off-diagonal, antisymmetric off-diagonal (both by
    (j, k) with j < k), then diagonal. Normalized to ``tr(a b) = 2 delta_ab``.
    The returned array is read-only.
    """
    mats = []
    for j in range(dim):
        for k in range(j + 1, dim):
            a = np.zeros((dim, dim), dtype=complex)
            a[j, k] = a[k, j] = 1
            mats.append(a)
    for j in range(dim):
        for k in range(j + 1, dim):
            a = np.zeros((dim, dim), dtype=complex)
            a[j, k] = -1j
            a[k, j] = 1j
            mats.append(a)
    for ell in range(1, dim):
        diag = np.zeros(dim)
        diag[:ell] = 1
        diag[ell] = -ell
        mats.append(np.diag(diag * np.sqrt(2 / (ell * (ell + 1)))).astype(complex))
    out = np.array(mats).reshape(dim * dim - 1, dim, dim)
    out.flags.writeable = False
    return out


def _expm(xp):
    if xp is np:
        return scipy.linalg.expm
    import jax.scipy.linalg

    return jax.scipy.linalg.expm


def su_from_params(dim: int, params, xp=np):
    """``exp(i sum_k params[k] lambda_k)`` with the array module ``xp``.

    Backend-neutral core of :func:`param_unitary`; ``xp`` is numpy or
    jax.numpy. No validation.
    """
    if dim == 1:
        return xp.ones((1, 1), dtype=complex)
    h = xp.tensordot(params, gell_mann_basis(dim), axes=1)
    return _expm(xp)(1j * h)


def param_unitary(dim: int, params) -> np.ndarray:
    """Special unitary from ``dim**2 - 1`` real generator coefficients.

    The map is the exponential of a traceless Hermitian matrix expanded in the
    generalized Gell-Mann basis: smooth, onto SU(dim), and the identity at
    the all-zeros vector.
    """
    params = np.asarray(params, dtype=float).ravel()
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if params.size != dim * dim - 1:
        raise ValueError(f"SU({dim}) takes {dim * dim - 1} parameters, got {params.size}")
    return su_from_params(dim, params)


@dataclass(frozen=True)
class CsdFactorization:
    """``U = block_diag(*W_blocks) @ M_middle @ block_diag(*V_blocks)``.

    ``partition = (r1, r2, c1, c2)``. ``M_middle`` uses the layout below,
    where ``p = min(r1, r2, c1, c2)`` is the number of angle pairs and the
    identity blocks have sizes ``k11 = max(0, r1 + c1 - N)``,
    ``k12 = r1 - p - k11``, ``k21 = c1 - p - k11``, ``k22 = c2 - p - k12``::

                 k11   p    k21  |  k22   p    k12
        k11   [   1                                 ]
        p     [        C         |       -S         ]
        k12   [                  |             1    ]
              [------------------+------------------]
        k22   [                  |   1              ]
        p     [        S         |        C         ]
        k21   [             1    |                  ]
    """

    W_blocks: tuple
    M_middle: np.ndarray
    V_blocks: tuple
    thetas: np.ndarray
    partition: tuple

    @property
    def cosines(self) -> np.ndarray:
        return np.cos(self.thetas)

    @property
    def sines(self) -> np.ndarray:
        return np.sin(self.thetas)

    def reconstruct(self) -> np.ndarray:
        w = scipy.linalg.block_diag(*self.W_blocks)
        v = scipy.linalg.block_diag(*self.V_blocks)
        return w @ self.M_middle @ v


def _csd_sizes(r1, c1, dim):
    r2, c2 = dim - r1, dim - c1
    p = min(r1, r2, c1, c2)
    k11 = max(0, r1 + c1 - dim)
    k12 = r1 - p - k11
    k21 = c1 - p - k11
    k22 = c2 - p - k12
    return p, k11, k12, k21, k22


def _csd_middle(thetas, r1, c1, dim):
    p, k11, k12, k21, k22 = _csd_sizes(r1, c1, dim)
    c, s = np.cos(thetas), np.sin(thetas)
    m = np.zeros((dim, dim))
    for a in range(k11):
        m[a, a] = 1
    for a in range(p):
        top, bot = k11 + a, r1 + k22 + a
        m[top, k11 + a] = c[a]
        m[bot, k11 + a] = s[a]
        m[top, c1 + k22 + a] = -s[a]
        m[bot, c1 + k22 + a] = c[a]
    for a in range(k21):
        m[r1 + k22 + p + a, k11 + p + a] = 1
    for a in range(k22):
        m[r1 + a, c1 + a] = 1
    for a in range(k12):
        m[k11 + p + a, c1 + k22 + p + a] = 1
    return m


def cosine_sine_decompose(U, r1: int, c1: int, atol: float = 1e-8) -> CsdFactorization:
    """Cosine-sine decomposition of a unitary under an (r1, c1) block partition.

    The first block column is handled by an SVD of the top-left block
    followed by a column-pivoted QR of the rotated bottom-left block (columns
    processed in order of decreasing norm, so nearly vanishing sines do not spoil the
    orthogonality of the others). The second block column of ``V`` is then
    obtained by projecting ``W^dagger U`` onto the fixed middle layout.

    Angles lie in [0, pi/2] and are sorted ascending. When angles repeat
    the outer blocks are not unique; only the product is meaningful.
    """
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {U.shape}")
    dim = U.shape[0]
    if not (1 <= r1 < dim and 1 <= c1 < dim):
        raise ValueError(f"partition needs 1 <= r1, c1 < {dim}, got r1={r1}, c1={c1}")
    resid = np.linalg.norm(U.conj().T @ U - np.eye(dim))
    if resid > atol:
        raise ValidationError(f"matrix is not unitary: ||U^dag U - 1||_F = {resid:.3g}")

    r2, c2 = dim - r1, dim - c1
    p, k11, k12, k21, k22 = _csd_sizes(r1, c1, dim)

    a1, sigma, b1h = np.linalg.svd(U[:r1, :c1])
    b1 = b1h.conj().T
    cos_vals = sigma[k11:k11 + p]

    # Bottom-left block after the right rotation: columns k11.. are mutually
    # orthogonal with norms (sines..., 1, ..., 1).
    x = (U[r1:, :c1] @ b1)[:, k11:]
    qp, rp, piv = scipy.linalg.qr(x, mode="economic", pivoting=True)
    q = np.empty_like(qp)
    q[:, piv] = qp
    rdiag = np.empty(rp.shape[0], dtype=rp.dtype)
    rdiag[piv] = np.diagonal(rp)
    phase = np.ones_like(rdiag)
    nonzero = np.abs(rdiag) > 0
    phase[nonzero] = rdiag[nonzero] / np.abs(rdiag[nonzero])
    q = q * phase
    sin_vals = np.abs(rdiag[:p])
    if k22 > 0:
        full, _ = np.linalg.qr(q, mode="complete")
        comp = full[:, q.shape[1]:]
        a2 = np.hstack([comp, q])
    else:
        a2 = q

    thetas = np.arctan2(sin_vals, cos_vals)
    # The SVD sorts cosines descending; re-sort by angle to absorb rounding ties.
    order = np.argsort(thetas, kind="stable")
    thetas = thetas[order]
    perm = np.arange(p)[order]
    a1 = a1.copy()
    a1[:, k11:k11 + p] = a1[:, k11:k11 + p][:, perm]
    b1 = b1.copy()
    b1[:, k11:k11 + p] = b1[:, k11:k11 + p][:, perm]
    a2 = a2.copy()
    a2[:, k22:k22 + p] = a2[:, k22:k22 + p][:, perm]

    m = _csd_middle(thetas, r1, c1, dim)
    w = scipy.linalg.block_diag(a1, a2)
    v1 = b1.conj().T
    v2 = m[:, c1:].T @ (w.conj().T @ U[:, c1:])
    return CsdFactorization(
        W_blocks=(a1, a2),
        M_middle=m,
        V_blocks=(v1, v2),
        thetas=thetas,
        partition=(r1, r2, c1, c2),
    )
