"""JSON files for channels and decomposition results.

Complex numbers are ``[re, im]`` pairs and matrices are row-major lists of
rows. Floats are written with Python's shortest round-trip repr, so every
file re-reads to the identical bits. Writes go through a temporary file in
the target directory and an atomic rename, so a failed command never leaves
a partial file behind.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from .ansatz import LAYOUT_TAG, AnsatzSpec
from .channel import QuantumChannel, validate_cptp
from .decompose import DecompositionResult
from .exceptions import FileFormatError

__all__ = [
    "FORMAT_VERSION",
    "channel_checksum",
    "channel_to_dict",
    "dump_json",
    "load_channel",
    "load_result",
    "result_to_dict",
    "save_channel",
    "save_result",
]

FORMAT_VERSION = 1


def channel_checksum(ch: QuantumChannel) -> str:
    """sha256 of the Kraus array as little-endian complex128, C order."""
    data = np.ascontiguousarray(ch.kraus, dtype="<c16").tobytes()
    return "sha256:" + hashlib.sha256(data).hexdigest()


def channel_to_dict(ch: QuantumChannel) -> dict:
    k = ch.kraus
    return {
        "format_version": FORMAT_VERSION,
        "n": ch.n,
        "m": ch.m,
        "kraus": [
            [[[float(z.real), float(z.imag)] for z in row] for row in op] for op in k
        ],
    }


def _atomic_text(text: str, path) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".part", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj, path) -> None:
    """Write ``obj`` as UTF-8 JSON to ``path`` atomically."""
    _atomic_text(json.dumps(obj, indent=1, allow_nan=False) + "\n", path)


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _field(doc, key, path, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise FileFormatError(f"{path}: missing field {key!r}")
    val = doc[key]
    if kind is not None and (not isinstance(val, kind) or isinstance(val, bool)):
        raise FileFormatError(f"{path}: field {key!r} has type {type(val).__name__}")
    return val


def _check_version(doc, path):
    version = _field(doc, "format_version", path, int)
    if version != FORMAT_VERSION:
        raise FileFormatError(f"{path}: unsupported format_version {version}")


def _parse_kraus(raw, n, m, path):
    if not isinstance(raw, list) or not raw:
        raise FileFormatError(f"{path}: field 'kraus' must be a non-empty list")
    ops = []
    for i, op in enumerate(raw):
        where = f"{path}: kraus[{i}]"
        if not isinstance(op, list) or len(op) != m:
            raise FileFormatError(f"{where}: expected {m} rows")
        mat = np.empty((m, n), dtype=complex)
        for a, row in enumerate(op):
            if not isinstance(row, list) or len(row) != n:
                raise FileFormatError(f"{where}[{a}]: expected {n} entries")
            for b, z in enumerate(row):
                if (
                    not isinstance(z, list)
                    or len(z) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in z)
                ):
                    raise FileFormatError(f"{where}[{a}][{b}]: expected a [re, im] pair of numbers")
                mat[a, b] = complex(z[0], z[1])
        ops.append(mat)
    return np.stack(ops)


def load_channel(path) -> QuantumChannel:
    """Read a channel file; rejects maps that fail :func:`validate_cptp` at 1e-8."""
    path = os.fspath(path)
    doc = _read_json(path)
    _check_version(doc, path)
    n = _field(doc, "n", path, int)
    m = _field(doc, "m", path, int)
    if n < 1 or m < 1:
        raise FileFormatError(f"{path}: dimensions must be positive, got n={n}, m={m}")
    kraus = _parse_kraus(_field(doc, "kraus", path), n, m, path)
    report = validate_cptp(kraus, n, m)
    if not report.accepted:
        raise FileFormatError(
            f"{path}: not a CPTP map (trace-preservation residual {report.tp_residual:.3g}, "
            f"min Choi eigenvalue {report.min_choi_eigenvalue:.3g}): {report.message}"
        )
    return QuantumChannel(kraus, atol=1e-8)


def save_channel(ch: QuantumChannel, path) -> None:
    dump_json(channel_to_dict(ch), path)


def result_to_dict(result: DecompositionResult, target: QuantumChannel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "target_checksum": channel_checksum(target),
        "family": result.family,
        "n": target.n,
        "m": target.m,
        "probs": [float(p) for p in result.probs],
        "specs": [{"layout": LAYOUT_TAG, "params": list(s.params)} for s in result.specs],
        "achieved_error": float(result.achieved_error),
        "diamond_upper_bound": float(result.diamond_upper_bound),
        "seed": result.seed,
        "budgets": dict(result.budgets),
        "evals_used": int(result.evals_used),
        "per_start_errors": [float(e) for e in result.per_start_errors],
        "converged": bool(result.converged),
        "best_start": int(result.best_start),
    }


def save_result(result: DecompositionResult, target: QuantumChannel, path) -> None:
    dump_json(result_to_dict(result, target), path)


def load_result(path):
    """Read a result file; returns ``(result, target_checksum)``."""
    path = os.fspath(path)
    doc = _read_json(path)
    _check_version(doc, path)
    family = _field(doc, "family", path, str)
    n = _field(doc, "n", path, int)
    m = _field(doc, "m", path, int)
    raw_specs = _field(doc, "specs", path, list)
    if not raw_specs:
        raise FileFormatError(f"{path}: field 'specs' is empty")
    specs = []
    for i, s in enumerate(raw_specs):
        layout = _field(s, "layout", f"{path}: specs[{i}]", str)
        if layout != LAYOUT_TAG:
            raise FileFormatError(f"{path}: specs[{i}] has unknown layout {layout!r}")
        try:
            specs.append(AnsatzSpec(family, n, m, tuple(_field(s, "params", f"{path}: specs[{i}]", list))))
        except (TypeError, ValueError) as exc:
            raise FileFormatError(f"{path}: specs[{i}]: {exc}") from exc
    try:
        probs = np.array(_field(doc, "probs", path, list), dtype=float)
        per_start = tuple(float(e) for e in _field(doc, "per_start_errors", path, list))
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    result = DecompositionResult(
        probs=probs,
        specs=tuple(specs),
        achieved_error=float(_field(doc, "achieved_error", path, (int, float))),
        diamond_upper_bound=float(_field(doc, "diamond_upper_bound", path, (int, float))),
        evals_used=_field(doc, "evals_used", path, int),
        per_start_errors=per_start,
        converged=bool(_field(doc, "converged", path)),
        best_start=_field(doc, "best_start", path, int),
        seed=doc.get("seed"),
        budgets=dict(doc.get("budgets", {})),
    )
    return result, _field(doc, "target_checksum", path, str)
