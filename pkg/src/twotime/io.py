"""JSON documents for every domain object.

Every document is an envelope::

    {"format_version": "1", "kind": "...", "dim": d, "payload": {...}}

with kind one of ``two_time_state``, ``ensemble``, ``density_vector``,
``measurement``, ``observable``, ``bipartite_density``, ``operator_set``.
Complex numbers are two-element arrays ``[re, im]`` (plain numbers are
accepted on input and read as real); matrices are row-major nested
arrays.  Parsing validates the full object invariants (normalization,
Hermiticity, positivity) and reports errors with the JSON path of the
offending field.  ``serialize_document(parse_document(doc))`` is
field-identical for every valid document.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .bipartite import BipartiteDensity, BipartiteOperator
from .core import DensityVector, KrausOperator, TwoTimeState
from .errors import SchemaError, TwoTimeError
from .measurements import Measurement, MeasurementOutcome
from .states import Ensemble

__all__ = [
    "FORMAT_VERSION",
    "KINDS",
    "parse_document",
    "serialize_document",
]

FORMAT_VERSION = "1"

KINDS = (
    "two_time_state",
    "ensemble",
    "density_vector",
    "measurement",
    "observable",
    "bipartite_density",
    "operator_set",
)

# Norm/trace slack accepted at load time; constructors renormalize.
_LOAD_NORM_ATOL = 1e-9


def _fail(path: str, message: str) -> SchemaError:
    return SchemaError(f"{path}: {message}")


def _get(obj: dict, key: str, path: str) -> Any:
    if not isinstance(obj, dict):
        raise _fail(path, f"expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise _fail(path, f"missing required field '{key}'")
    return obj[key]


def _number(node: Any, path: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise _fail(path, f"expected a number, got {type(node).__name__}")
    val = float(node)
    if not np.isfinite(val):
        raise _fail(path, f"non-finite number {node!r}")
    return val


def _complex(node: Any, path: str) -> complex:
    if isinstance(node, (int, float)) and not isinstance(node, bool):
        return complex(_number(node, path), 0.0)
    if isinstance(node, list) and len(node) == 2:
        return complex(_number(node[0], path + "[0]"), _number(node[1], path + "[1]"))
    raise _fail(path, "expected a complex number as [re, im] (or a plain real number)")


def _matrix(node: Any, path: str, rows: int, cols: int) -> np.ndarray:
    if not isinstance(node, list) or len(node) != rows:
        raise _fail(path, f"expected a {rows}x{cols} matrix as nested arrays")
    out = np.empty((rows, cols), dtype=np.complex128)
    for i, row in enumerate(node):
        if not isinstance(row, list) or len(row) != cols:
            raise _fail(f"{path}[{i}]", f"expected a row of {cols} entries")
        for j, entry in enumerate(row):
            out[i, j] = _complex(entry, f"{path}[{i}][{j}]")
    return out


def _dim(envelope: dict) -> int:
    dim = _get(envelope, "dim", "document")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise _fail("document.dim", f"expected a positive integer, got {dim!r}")
    return dim


def _wrap(path: str, exc: TwoTimeError) -> TwoTimeError:
    # Keep the specific class (and its machine code); prepend the path.
    return type(exc)(f"{path}: {exc}")


def _check_state_norm(coeffs: np.ndarray, path: str) -> None:
    norm = float(np.linalg.norm(coeffs))
    if abs(norm - 1.0) > _LOAD_NORM_ATOL:
        raise _fail(path, f"coefficients have Frobenius norm {norm!r}, expected 1")


def _parse_state_payload(payload: dict, d: int, path: str) -> TwoTimeState:
    coeffs = _matrix(_get(payload, "coeffs", path), f"{path}.coeffs", d, d)
    _check_state_norm(coeffs, f"{path}.coeffs")
    try:
        return TwoTimeState(coeffs)
    except TwoTimeError as exc:
        raise _wrap(f"{path}.coeffs", exc) from exc


def _parse_measurement_payload(payload: dict, d: int, path: str) -> Measurement:
    outcomes_node = _get(payload, "outcomes", path)
    if not isinstance(outcomes_node, list) or not outcomes_node:
        raise _fail(f"{path}.outcomes", "expected a nonempty array of outcomes")
    outcomes = []
    for idx, node in enumerate(outcomes_node):
        opath = f"{path}.outcomes[{idx}]"
        kraus_node = _get(node, "kraus", opath)
        if not isinstance(kraus_node, list) or not kraus_node:
            raise _fail(f"{opath}.kraus", "expected a nonempty array of matrices")
        ops = []
        for k, mat_node in enumerate(kraus_node):
            entries = _matrix(mat_node, f"{opath}.kraus[{k}]", d, d)
            try:
                ops.append(KrausOperator(entries))
            except TwoTimeError as exc:
                raise _wrap(f"{opath}.kraus[{k}]", exc) from exc
        name = node.get("name", "") if isinstance(node, dict) else ""
        if not isinstance(name, str):
            raise _fail(f"{opath}.name", f"expected a string, got {type(name).__name__}")
        try:
            outcomes.append(MeasurementOutcome(tuple(ops), name))
        except TwoTimeError as exc:
            raise _wrap(opath, exc) from exc
    try:
        return Measurement(tuple(outcomes))
    except TwoTimeError as exc:
        raise _wrap(f"{path}.outcomes", exc) from exc


def parse_document(doc):
    """Parse a document (JSON text, bytes, or an already-loaded dict).

    Returns the domain object for the document's kind:
    :class:`TwoTimeState`, :class:`Ensemble`, :class:`DensityVector`,
    :class:`Measurement`, :class:`KrausOperator` (observable),
    :class:`BipartiteDensity`, or a tuple of :class:`BipartiteOperator`.

    Raises
    ------
    SchemaError
        On malformed JSON, a bad envelope, or a payload shape problem;
        messages carry the JSON path of the offending field.
    TwoTimeError subclasses
        When the payload parses but violates an object invariant (bad
        normalization, non-PSD matrix, ...); the original machine code
        is preserved and the message is path-prefixed.
    """
    if isinstance(doc, (str, bytes)):
        try:
            envelope = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed JSON: {exc}") from exc
    else:
        envelope = doc
    if not isinstance(envelope, dict):
        raise SchemaError(f"document: expected a JSON object, got {type(envelope).__name__}")

    version = _get(envelope, "format_version", "document")
    if version != FORMAT_VERSION:
        raise SchemaError(
            f"document.format_version: unsupported version {version!r}, expected "
            f"{FORMAT_VERSION!r}"
        )
    kind = _get(envelope, "kind", "document")
    if kind not in KINDS:
        raise SchemaError(
            f"document.kind: unknown kind {kind!r}, expected one of {', '.join(KINDS)}"
        )
    d = _dim(envelope)
    payload = _get(envelope, "payload", "document")
    path = "payload"

    if kind == "two_time_state":
        return _parse_state_payload(payload, d, path)

    if kind == "ensemble":
        members_node = _get(payload, "members", path)
        if not isinstance(members_node, list) or not members_node:
            raise _fail(f"{path}.members", "expected a nonempty array of members")
        members = []
        for idx, node in enumerate(members_node):
            mpath = f"{path}.members[{idx}]"
            weight = _number(_get(node, "weight", mpath), f"{mpath}.weight")
            state = _parse_state_payload(node, d, mpath)
            members.append((weight, state))
        try:
            return Ensemble(tuple(members))
        except TwoTimeError as exc:
            raise _wrap(f"{path}.members", exc) from exc

    if kind == "density_vector":
        mat = _matrix(_get(payload, "matrix", path), f"{path}.matrix", d * d, d * d)
        try:
            return DensityVector(mat)
        except TwoTimeError as exc:
            raise _wrap(f"{path}.matrix", exc) from exc

    if kind == "measurement":
        return _parse_measurement_payload(payload, d, path)

    if kind == "observable":
        mat = _matrix(_get(payload, "matrix", path), f"{path}.matrix", d, d)
        try:
            return KrausOperator(mat)
        except TwoTimeError as exc:
            raise _wrap(f"{path}.matrix", exc) from exc

    if kind == "bipartite_density":
        mat = _matrix(_get(payload, "matrix", path), f"{path}.matrix", d * d, d * d)
        try:
            return BipartiteDensity(mat)
        except TwoTimeError as exc:
            raise _wrap(f"{path}.matrix", exc) from exc

    # operator_set
    ops_node = _get(payload, "operators", path)
    if not isinstance(ops_node, list) or not ops_node:
        raise _fail(f"{path}.operators", "expected a nonempty array of matrices")
    ops = []
    for idx, node in enumerate(ops_node):
        mat = _matrix(node, f"{path}.operators[{idx}]", d * d, d * d)
        try:
            ops.append(BipartiteOperator(mat))
        except TwoTimeError as exc:
            raise _wrap(f"{path}.operators[{idx}]", exc) from exc
    return tuple(ops)


def _emit_complex(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def _emit_matrix(mat: np.ndarray) -> list:
    return [[_emit_complex(complex(entry)) for entry in row] for row in np.asarray(mat)]


def serialize_document(obj) -> dict:
    """Serialize a domain object back to its envelope dict."""
    if isinstance(obj, TwoTimeState):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "two_time_state",
            "dim": obj.dim,
            "payload": {"coeffs": _emit_matrix(obj.coeffs)},
        }
    if isinstance(obj, Ensemble):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "ensemble",
            "dim": obj.dim,
            "payload": {
                "members": [
                    {"weight": float(w), "coeffs": _emit_matrix(s.coeffs)}
                    for w, s in obj.members
                ]
            },
        }
    if isinstance(obj, DensityVector):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "density_vector",
            "dim": obj.dim,
            "payload": {"matrix": _emit_matrix(obj.mat)},
        }
    if isinstance(obj, Measurement):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "measurement",
            "dim": obj.dim,
            "payload": {
                "outcomes": [
                    {
                        "name": out.name,
                        "kraus": [_emit_matrix(op.entries) for op in out.kraus],
                    }
                    for out in obj.outcomes
                ]
            },
        }
    if isinstance(obj, KrausOperator):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "observable",
            "dim": obj.dim,
            "payload": {"matrix": _emit_matrix(obj.entries)},
        }
    if isinstance(obj, BipartiteDensity):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "bipartite_density",
            "dim": obj.dim,
            "payload": {"matrix": _emit_matrix(obj.rho)},
        }
    if isinstance(obj, tuple) and obj and all(isinstance(x, BipartiteOperator) for x in obj):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "operator_set",
            "dim": obj[0].dim,
            "payload": {"operators": [_emit_matrix(x.op) for x in obj]},
        }
    raise SchemaError(f"cannot serialize object of type {type(obj).__name__}")
