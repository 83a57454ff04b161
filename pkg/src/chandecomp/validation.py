"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import ValidationError

__all__ = [
    "check_channel",
    "check_complex_matrix",
    "check_density_matrix",
    "check_kraus",
    "check_probability_vector",
    "check_random_state",
]


def check_complex_matrix(a, name="matrix", shape=None) -> np.ndarray:
    """Return ``a`` as a finite 2-d complex128 array, optionally of a fixed shape."""
    try:
        arr = np.asarray(a, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} is not a numeric array: {exc}") from exc
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-d, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ValidationError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf")
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    return arr


def check_density_matrix(rho, dim=None, atol=1e-10, name="rho") -> np.ndarray:
    """Validate a density matrix: square, Hermitian, unit trace, PSD (all to ``atol``).

    A wrong shape raises ``ValueError``; a square matrix that is not a state
    raises :class:`ValidationError`.
    """
    rho = check_complex_matrix(rho, name)
    if rho.shape[0] != rho.shape[1]:
        raise ValueError(f"{name} must be square, got {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise ValueError(f"{name} must be {dim}x{dim}, got {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > atol:
        raise ValidationError(f"{name} is not Hermitian (max deviation {herm:.3g})")
    tr = np.trace(rho).real
    if abs(tr - 1) > atol:
        raise ValidationError(f"{name} has trace {tr:.12g}, expected 1")
    lo = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
    if lo < -atol:
        raise ValidationError(f"{name} is not positive semidefinite (min eigenvalue {lo:.3g})")
    return rho


def check_kraus(kraus) -> np.ndarray:
    """Stack a non-empty sequence of equally shaped matrices into shape (r, m, n)."""
    if isinstance(kraus, np.ndarray) and kraus.ndim == 2:
        kraus = [kraus]
    mats = [check_complex_matrix(k, f"kraus[{i}]") for i, k in enumerate(kraus)]
    if not mats:
        raise ValueError("need at least one Kraus operator")
    shape = mats[0].shape
    for i, k in enumerate(mats):
        if k.shape != shape:
            raise ValueError(f"kraus[{i}] has shape {k.shape}, expected {shape}")
    return np.stack(mats)


def check_probability_vector(p, size=None, atol=1e-12) -> np.ndarray:
    """Nonnegative real vector summing to one within ``atol``."""
    p = np.asarray(p, dtype=float).ravel()
    if size is not None and p.size != size:
        raise ValueError(f"expected {size} probabilities, got {p.size}")
    if p.size == 0 or not np.all(np.isfinite(p)):
        raise ValueError("probabilities must be a non-empty finite vector")
    if np.any(p < 0):
        raise ValueError(f"probabilities must be nonnegative, got min {p.min():.3g}")
    if abs(p.sum() - 1) > atol:
        raise ValueError(f"probabilities sum to {p.sum():.15g}, not 1")
    return p


def check_random_state(seed) -> np.random.Generator:
    """Turn ``None``, an int, a SeedSequence or a Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a numpy Generator")


def check_channel(x, n=None, m=None, atol=1e-10):
    """Coerce ``x`` to a :class:`~chandecomp.channel.QuantumChannel`.

    Accepts a channel, a Choi matrix object, a single Kraus matrix, a list of
    Kraus matrices or an (r, m, n) array. ``n``/``m`` are checked if given.
    """
    from .channel import ChoiMatrix, QuantumChannel, kraus_from_choi

    if isinstance(x, QuantumChannel):
        ch = x
    elif isinstance(x, ChoiMatrix):
        ch = kraus_from_choi(x)
    else:
        ch = QuantumChannel(check_kraus(x), atol=atol)
    if n is not None and ch.n != n:
        raise ValueError(f"channel input dimension is {ch.n}, expected {n}")
    if m is not None and ch.m != m:
        raise ValueError(f"channel output dimension is {ch.m}, expected {m}")
    return ch
