"""JSON formats for operators and channel specifications.

Operator files::

    {"layout": [["X1", 2], ["Y1", 2]],
     "scalar_domain": "rational" | "quad(10)" | "complex_f64",
     "entries": [[...], ...]}             # row-major

Rational entries are ``"p/q"`` strings (plain integers are accepted). In
``quad(r)`` files an entry is either a rational string or a pair
``["p/q", "s/t"]`` meaning ``p/q + (s/t)*sqrt(r)``. ``complex_f64`` entries
are numbers or ``[re, im]`` pairs.
"""

from __future__ import annotations

import hashlib
import json
import re
from fractions import Fraction
from pathlib import Path

import numpy as np

from .channels import (
    ChannelError,
    ChoiChannel,
    amplitude_damping,
    classical_noiseless,
    pauli_channel,
    replacement_channel,
)
from .exact import QuadScalar
from .tensor import LabeledOperator, SystemLayout

__all__ = [
    "FormatError",
    "parse_operator",
    "load_operator",
    "dump_operator",
    "operator_to_json",
    "entries_checksum",
    "parse_channel_spec",
    "load_channel_spec",
]

_QUAD = re.compile(r"^quad\((\d+)\)$")


class FormatError(ValueError):
    """Malformed or non-representable file content."""


def _rational(tok) -> Fraction:
    if isinstance(tok, bool):
        raise FormatError(f"not a rational: {tok!r}")
    if isinstance(tok, int):
        return Fraction(tok)
    if isinstance(tok, str):
        try:
            return Fraction(tok.strip())
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"not a rational: {tok!r}") from None
    # floats are rejected on purpose: exact files must not round
    raise FormatError(f"not a rational string: {tok!r}")


def _domain(name: str):
    if name in ("rational", "complex_f64"):
        return name, None
    m = _QUAD.match(str(name))
    if m:
        return "quad", int(m.group(1))
    raise FormatError(f"unknown scalar_domain {name!r}")


def _parse_entry(tok, kind: str, r: int | None):
    if kind == "rational":
        return _rational(tok)
    if kind == "quad":
        if isinstance(tok, list):
            if len(tok) != 2:
                raise FormatError(f"quad entry needs two parts, got {tok!r}")
            a, b = _rational(tok[0]), _rational(tok[1])
            return QuadScalar(a, b, r) if b else a
        return _rational(tok)
    if isinstance(tok, list):
        if len(tok) != 2:
            raise FormatError(f"complex entry needs [re, im], got {tok!r}")
        return complex(float(tok[0]), float(tok[1]))
    if isinstance(tok, (int, float)) and not isinstance(tok, bool):
        return complex(tok)
    raise FormatError(f"not a number: {tok!r}")


def _layout(raw) -> SystemLayout:
    try:
        systems = tuple((str(lab), int(d)) for lab, d in raw)
    except (TypeError, ValueError):
        raise FormatError(f"layout must be a list of [label, dim] pairs, got {raw!r}") from None
    return SystemLayout(systems)


def parse_operator(obj: dict) -> LabeledOperator:
    """Build a :class:`LabeledOperator` from a decoded operator document."""
    for key in ("layout", "scalar_domain", "entries"):
        if key not in obj:
            raise FormatError(f"missing field {key!r}")
    layout = _layout(obj["layout"])
    kind, r = _domain(obj["scalar_domain"])
    if kind == "quad":
        try:
            QuadScalar(0, 0, r)
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    n = layout.dim
    raw = obj["entries"]
    if not isinstance(raw, list):
        raise FormatError("entries must be a list")
    # nested rows and a flat list differ in length unless n == 1, where a
    # bare entry pair has length 2 and cannot be mistaken for a row
    if len(raw) == n and all(isinstance(row, list) and len(row) == n for row in raw):
        flat = [tok for row in raw for tok in row]
    elif len(raw) == n * n:
        flat = list(raw)
    else:
        raise FormatError(f"entries must be {n}x{n}")
    vals = [_parse_entry(t, kind, r) for t in flat]
    if kind == "complex_f64":
        a = np.array(vals, dtype=complex).reshape(n, n)
        if not np.any(a.imag):
            a = a.real.copy()
    else:
        a = np.empty(n * n, dtype=object)
        a[:] = vals
        a = a.reshape(n, n)
    herm = bool(obj.get("hermitian", True))
    try:
        return LabeledOperator(layout, a, herm)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def load_operator(path) -> LabeledOperator:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return parse_operator(obj)


def _entry_json(x, kind: str):
    if kind == "complex_f64":
        x = complex(x)
        return x.real if x.imag == 0 else [x.real, x.imag]
    if isinstance(x, QuadScalar):
        if kind == "rational":
            if x.b:
                raise FormatError("irrational entry in a rational file")
            return str(x.a)
        return [str(x.a), str(x.b)]
    return str(Fraction(x))


def _detect_domain(op: LabeledOperator) -> str:
    if not op.exact:
        return "complex_f64"
    radicands = {x.r for x in op.entries.ravel() if isinstance(x, QuadScalar) and x.b}
    if not radicands:
        return "rational"
    if len(radicands) > 1:
        raise FormatError(f"several radicands in one operator: {sorted(radicands)}")
    return f"quad({radicands.pop()})"


def operator_to_json(op: LabeledOperator, scalar_domain: str | None = None) -> dict:
    domain = scalar_domain or _detect_domain(op)
    kind, _ = _domain(domain)
    n = op.dim
    return {
        "layout": [[lab, d] for lab, d in op.layout.systems],
        "scalar_domain": domain,
        "entries": [[_entry_json(op.entries[i, j], kind) for j in range(n)] for i in range(n)],
    }


def dump_operator(op: LabeledOperator, path, scalar_domain: str | None = None) -> None:
    doc = operator_to_json(op, scalar_domain)
    rows = ",\n    ".join(json.dumps(row) for row in doc["entries"])
    text = (
        "{\n"
        f'  "layout": {json.dumps(doc["layout"])},\n'
        f'  "scalar_domain": {json.dumps(doc["scalar_domain"])},\n'
        f'  "entries": [\n    {rows}\n  ]\n'
        "}\n"
    )
    Path(path).write_text(text)


def entries_checksum(op: LabeledOperator) -> str:
    """sha256 of a canonical serialization; insensitive to file formatting."""
    doc = operator_to_json(op)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------- channels
def _one_channel(spec: dict, exact: bool) -> ChoiChannel:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise FormatError(f"channel spec needs a 'kind': {spec!r}")
    kind = spec["kind"]
    try:
        if kind == "ad":
            eta = spec["eta"]
            if exact:
                eta = _rational(eta) if isinstance(eta, (str, int)) else Fraction(str(eta))
            return amplitude_damping(eta, exact=exact)
        if kind == "pauli":
            return pauli_channel(spec["probs"], int(spec.get("q", 1)))
        if kind == "replacement":
            rho = np.asarray(spec["rho"], dtype=float)
            return replacement_channel(rho, int(spec.get("in_dim", rho.shape[0])))
        if kind == "classical":
            return classical_noiseless(int(spec["m"]), exact=exact)
    except KeyError as exc:
        raise FormatError(f"channel {kind!r} is missing parameter {exc.args[0]!r}") from None
    except ChannelError as exc:
        raise FormatError(str(exc)) from None
    raise FormatError(f"unknown channel kind {kind!r}")


def parse_channel_spec(obj, exact: bool = False) -> list[ChoiChannel]:
    """A single channel spec, an array of them, or ``{"channels": [...]}``."""
    if isinstance(obj, dict) and "channels" in obj:
        obj = obj["channels"]
    items = obj if isinstance(obj, list) else [obj]
    if not items:
        raise FormatError("empty channel list")
    return [_one_channel(s, exact) for s in items]


def load_channel_spec(path, exact: bool = False) -> list[ChoiChannel]:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return parse_channel_spec(obj, exact)
