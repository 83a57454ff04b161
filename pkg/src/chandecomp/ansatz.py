"""Parameterized families of generalized extreme (n, m)-channels.

Every family emits exactly ``n`` Kraus operators of shape ``m x n`` whose
trace preservation follows algebraically from ``cos^2 + sin^2 = 1`` and the
unitarity of the SU factors; nothing is renormalized after the fact.

Family I
    Closed forms obtained from cosine-sine decompositions of the Stinespring
    dilation, one per supported shape (2,2), (3,3), (4,4), (3,2), (2,3),
    (4,2), (2,4).
Family II
    Family I with every inner (ancilla-controlled) rotation set to the
    identity. For (3,4) and (4,3), which have no family I form, it is the
    one-sparse family III structure with one posterior rotation per Kraus
    operator.
Family III
    ``K_i = W F_i V`` with a single posterior rotation ``W`` and one-sparse
    ``F_i`` (diagonal amplitudes followed by a shift) whose amplitudes come
    from a cascade of uniformly controlled rotations. Defined for all
    ``2 <= n, m <= 4``.

Parameter vectors are flat and laid out block by block in the order
returned by :func:`param_layout`: prior SU factor, angle blocks, inner SU
factors, posterior SU factors. An SU(d) block holds ``d**2 - 1`` generator
coefficients for :func:`chandecomp.matgen.param_unitary`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import ExtremalityReport, QuantumChannel, classify_extremality
from .exceptions import CapabilityError
from .matgen import su_from_params

__all__ = [
    "AnsatzSpec",
    "Block",
    "FAMILIES",
    "GeneralizedExtremeChannel",
    "TABLE_SHAPES",
    "build",
    "embed_family_ii",
    "gate_cost",
    "kraus_operators",
    "linear_independence_certificate",
    "normalize_family",
    "param_count",
    "param_layout",
    "random_params",
    "supported_shapes",
]

FAMILIES = ("I", "II", "III")

# Row order of the benchmark table: D2, D2->D3, D3->D2, D3, D2->D4, D4->D2, D4.
TABLE_SHAPES = ((2, 2), (2, 3), (3, 2), (3, 3), (2, 4), (4, 2), (4, 4))
_GENERAL_SHAPES = tuple((n, m) for n in range(2, 5) for m in range(2, 5))

LAYOUT_TAG = "prior-angles-inner-posterior/v1"


@dataclass(frozen=True)
class Block:
    name: str
    kind: str  # "su" or "angle"
    size: int
    role: str  # "prior", "angle", "inner" or "posterior"
    dim: int = 0  # matrix dimension for SU blocks


def _su(name, dim, role):
    return Block(name, "su", dim * dim - 1, role, dim)


def _angles(name, size):
    return Block(name, "angle", size, "angle")


def normalize_family(family) -> str:
    """Accept 1/2/3, "1"/"2"/"3" or "I"/"II"/"III" (any case)."""
    key = str(family).strip().upper()
    key = {"1": "I", "2": "II", "3": "III"}.get(key, key)
    if key not in FAMILIES:
        raise ValueError(f"unknown ansatz family {family!r}; expected one of I, II, III")
    return key


def supported_shapes(family) -> tuple:
    family = normalize_family(family)
    return TABLE_SHAPES if family == "I" else _GENERAL_SHAPES


def _check_shape(family, n, m):
    if (n, m) not in supported_shapes(family):
        shapes = ", ".join(f"({a},{b})" for a, b in supported_shapes(family))
        raise CapabilityError(f"family {family} has no ({n},{m}) ansatz; supported: {shapes}")


def _family_i_blocks(n, m):
    if (n, m) == (2, 2):
        return ([_su("V", 2, "prior"), _angles("theta", 2)], [],
                [_su(f"W{i}", 2, "posterior") for i in range(2)])
    if (n, m) == (3, 3):
        return ([_su("V", 3, "prior"), _angles("C0", 3), _angles("C1", 3)],
                [_su("Z", 3, "inner")],
                [_su(f"W{i}", 3, "posterior") for i in range(3)])
    if (n, m) == (4, 4):
        return ([_su("V", 4, "prior")] + [_angles(f"C{i}", 4) for i in range(3)],
                [_su("Y", 4, "inner"), _su("Z", 4, "inner")],
                [_su(f"W{i}", 4, "posterior") for i in range(4)])
    if (n, m) == (3, 2):
        return ([_su("V", 3, "prior"), _angles("theta", 2), _angles("phi", 2)],
                [_su("F1", 2, "inner"), _su("F2", 2, "inner")],
                [_su(f"W{i}", 2, "posterior") for i in range(3)])
    if (n, m) == (2, 3):
        return ([_su("W", 2, "prior"), _angles("theta", 2)], [],
                [_su(f"V{i}", 3, "posterior") for i in range(2)])
    if (n, m) == (4, 2):
        return ([_su("V", 4, "prior")] + [_angles(f"C{i}", 2) for i in range(4)],
                [_su(f"F{i}", 2, "inner") for i in range(1, 5)],
                [_su(f"W{i}", 2, "posterior") for i in range(4)])
    if (n, m) == (2, 4):
        return ([_su("V", 2, "prior")] + [_angles(f"C{i}", 2) for i in range(1, 4)],
                [_su("F1", 2, "inner"), _su("F2", 2, "inner")],
                [_su(f"W{i}", 4, "posterior") for i in range(2)])
    raise AssertionError((n, m))


@lru_cache(maxsize=None)
def param_layout(family, n: int, m: int) -> tuple:
    """Ordered parameter blocks of one component."""
    family = normalize_family(family)
    _check_shape(family, n, m)
    if family in ("I", "II") and (n, m) in TABLE_SHAPES:
        head, inner, post = _family_i_blocks(n, m)
        return tuple(head + (inner if family == "I" else []) + post)
    k = min(n, m)
    head = [_su("V", n, "prior"), _angles("amp", n * (k - 1))]
    if family == "III":
        return tuple(head + [_su("W", m, "posterior")])
    return tuple(head + [_su(f"W{i}", m, "posterior") for i in range(n)])


def param_count(family, n: int, m: int) -> int:
    """Number of real parameters of one generalized extreme component."""
    return sum(b.size for b in param_layout(family, n, m))


def gate_cost(n: int, m: int) -> int:
    """Primary-gate count of the family I circuit.

    Exact ``d (d + 2) (d - 1)`` for ``n == m == d``; ``n**2 m`` as the
    order-level figure for dimension-altering shapes.
    """
    if n == m:
        return n * (n + 2) * (n - 1)
    return n * n * m


def random_params(family, n: int, m: int, rng) -> np.ndarray:
    """Initial point: angles uniform in [0, pi/2], SU coefficients N(0, 0.5**2)."""
    parts = []
    for b in param_layout(family, n, m):
        if b.kind == "angle":
            parts.append(rng.uniform(0, np.pi / 2, b.size))
        else:
            parts.append(rng.normal(0, 0.5, b.size))
    return np.concatenate(parts)


def embed_family_ii(n: int, m: int, params) -> np.ndarray:
    """Family I parameter vector reproducing a family II one (inner SU blocks at zero)."""
    params = np.asarray(params, dtype=float)
    out, pos = [], 0
    for b in param_layout("I", n, m):
        if b.role == "inner":
            out.append(np.zeros(b.size))
        else:
            out.append(params[pos:pos + b.size])
            pos += b.size
    if pos != params.size:
        raise ValueError(f"expected {pos} family II parameters, got {params.size}")
    return np.concatenate(out)


# -- kernels ---------------------------------------------------------------
# Written against an array module ``xp`` (numpy or jax.numpy) so that the
# optimizer can differentiate them; no in-place writes.


def _unit(shape, r, c):
    e = np.zeros(shape)
    e[r, c] = 1
    return e


def _place(xp, shape, entries):
    """Matrix of ``shape`` holding the given ``((row, col), value)`` entries."""
    return sum(val * _unit(shape, r, c) for (r, c), val in entries) + xp.zeros(shape)


def _split(family, n, m, params, xp):
    blocks, pos = {}, 0
    for b in param_layout(family, n, m):
        chunk = params[pos:pos + b.size]
        pos += b.size
        blocks[b.name] = su_from_params(b.dim, chunk, xp) if b.kind == "su" else chunk
    return blocks


def _kernel_family_i(n, m, p, xp):
    cos, sin, diag = xp.cos, xp.sin, xp.diag
    if (n, m) == (2, 2):
        c, s = diag(cos(p["theta"])), diag(sin(p["theta"]))
        return [p["W0"] @ c @ p["V"], p["W1"] @ s @ p["V"]]
    if (n, m) == (3, 3):
        c0, s0 = diag(cos(p["C0"])), diag(sin(p["C0"]))
        c1, s1 = diag(cos(p["C1"])), diag(sin(p["C1"]))
        tail = p["Z"] @ s0 @ p["V"]
        return [p["W0"] @ c0 @ p["V"], p["W1"] @ c1 @ tail, p["W2"] @ s1 @ tail]
    if (n, m) == (4, 4):
        c0, s0 = diag(cos(p["C0"])), diag(sin(p["C0"]))
        c1, s1 = diag(cos(p["C1"])), diag(sin(p["C1"]))
        c2, s2 = diag(cos(p["C2"])), diag(sin(p["C2"]))
        t1 = p["Y"] @ s0 @ p["V"]
        t2 = p["Z"] @ s2 @ t1
        return [p["W0"] @ c0 @ p["V"], p["W1"] @ c2 @ t1, p["W2"] @ c1 @ t2, p["W3"] @ s1 @ t2]
    if (n, m) == (3, 2):
        ct, st = cos(p["theta"]), sin(p["theta"])
        d11 = _place(xp, (2, 3), [((0, 0), ct[0]), ((1, 1), ct[1])])
        d21 = _place(xp, (2, 3), [((1, 0), st[0])])
        # third angle of the first CSD is fixed at pi/2
        d31 = _place(xp, (2, 3), [((0, 1), st[1]), ((1, 2), 1.0)])
        c, s = diag(cos(p["phi"])), diag(sin(p["phi"]))
        a, b = p["F1"] @ d21, p["F2"] @ d31
        return [p["W0"] @ d11 @ p["V"], p["W1"] @ (c @ a - s @ b) @ p["V"],
                p["W2"] @ (s @ a + c @ b) @ p["V"]]
    if (n, m) == (2, 3):
        ct, st = cos(p["theta"]), sin(p["theta"])
        d11t = _place(xp, (3, 2), [((0, 0), ct[0]), ((1, 1), ct[1])])
        d12t = _place(xp, (3, 2), [((0, 0), -st[0]), ((1, 1), -st[1])])
        return [p["V0"] @ d11t @ p["W"], p["V1"] @ d12t @ p["W"]]
    if (n, m) == (4, 2):
        c = [diag(cos(p[f"C{i}"])) for i in range(4)]
        s = [diag(sin(p[f"C{i}"])) for i in range(4)]
        f = [None] + [p[f"F{i}"] for i in range(1, 5)]
        halves = [
            (c[1] @ f[1] @ c[2], -s[1] @ f[2] @ c[3]),
            (s[1] @ f[1] @ c[2], c[1] @ f[2] @ c[3]),
            (c[0] @ f[3] @ s[2], -s[0] @ f[4] @ s[3]),
            (s[0] @ f[3] @ s[2], c[0] @ f[4] @ s[3]),
        ]
        return [p[f"W{i}"] @ xp.concatenate(h, axis=1) @ p["V"] for i, h in enumerate(halves)]
    if (n, m) == (2, 4):
        c = {i: diag(cos(p[f"C{i}"])) for i in range(1, 4)}
        s = {i: diag(sin(p[f"C{i}"])) for i in range(1, 4)}
        top, bot = p["F1"] @ c[1], p["F2"] @ s[1]
        k0 = xp.concatenate([c[2] @ top, -c[3] @ bot], axis=0)
        k1 = xp.concatenate([-s[2] @ top, s[3] @ bot], axis=0)
        return [p["W0"] @ k0 @ p["V"], p["W1"] @ k1 @ p["V"]]
    raise AssertionError((n, m))


@lru_cache(maxsize=None)
def _slot_tensor(n, m):
    """0/1 tensor T[i, s, l, t]: slot t of input column l lands in Kraus i, output row s.

    For n <= m slot t of column l goes to Kraus t, row (l - t) mod m, i.e.
    ``F_t = X_t E_t`` with the shift ``X_t = sum_l |l><l + t|``; for n > m it
    goes to Kraus (l - t) mod n, row t.
    """
    k = min(n, m)
    t = np.zeros((n, m, n, k))
    for col in range(n):
        for slot in range(k):
            if n <= m:
                t[slot, (col - slot) % m, col, slot] = 1
            else:
                t[(col - slot) % n, slot, col, slot] = 1
    t.flags.writeable = False
    return t


def _one_sparse(n, m, angles, xp):
    """The ``F_i`` blocks: per-column amplitudes from a cascade of rotations."""
    k = min(n, m)
    a = xp.reshape(angles, (n, k - 1))
    sines = xp.cumprod(xp.sin(a), axis=1)
    prefix = xp.concatenate([xp.ones((n, 1)), sines], axis=1)
    cosines = xp.concatenate([xp.cos(a), xp.ones((n, 1))], axis=1)
    amp = prefix * cosines
    return xp.einsum("islt,lt->isl", _slot_tensor(n, m), amp)


def kraus_operators(family, n: int, m: int, params, xp=np):
    """Stack of ``n`` Kraus operators, shape (n, m, n), for one component.

    ``params`` is not validated; use :func:`build` for checked construction.
    """
    family = normalize_family(family)
    p = _split(family, n, m, params, xp)
    if family in ("I", "II") and (n, m) in TABLE_SHAPES:
        if family == "II":
            for b in param_layout("I", n, m):
                if b.role == "inner":
                    p[b.name] = xp.eye(b.dim, dtype=complex)
        return xp.stack(_kernel_family_i(n, m, p, xp))
    f = _one_sparse(n, m, p["amp"], xp)
    if family == "III":
        return xp.stack([p["W"] @ f[i] @ p["V"] for i in range(n)])
    return xp.stack([p[f"W{i}"] @ f[i] @ p["V"] for i in range(n)])


@dataclass(frozen=True)
class AnsatzSpec:
    """Family tag, shape and flat parameter vector of one generalized extreme channel."""

    family: str
    n: int
    m: int
    params: tuple

    def __post_init__(self):
        family = normalize_family(self.family)
        object.__setattr__(self, "family", family)
        _check_shape(family, self.n, self.m)
        params = tuple(float(x) for x in np.asarray(self.params, dtype=float).ravel())
        expected = param_count(family, self.n, self.m)
        if len(params) != expected:
            raise ValueError(
                f"family {family} ({self.n},{self.m}) takes {expected} parameters, got {len(params)}"
            )
        if not np.all(np.isfinite(params)):
            raise ValueError("ansatz parameters must be finite")
        object.__setattr__(self, "params", params)


@dataclass(frozen=True)
class GeneralizedExtremeChannel:
    channel: QuantumChannel
    spec: AnsatzSpec


def build(spec: AnsatzSpec) -> GeneralizedExtremeChannel:
    """Assemble the channel described by ``spec``."""
    k = kraus_operators(spec.family, spec.n, spec.m, np.asarray(spec.params))
    return GeneralizedExtremeChannel(QuantumChannel(k), spec)


def linear_independence_certificate(g: GeneralizedExtremeChannel, tol: float = 1e-10) -> ExtremalityReport:
    """Extremality report of a built ansatz channel."""
    return classify_extremality(g.channel, tol)
