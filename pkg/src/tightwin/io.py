"""Reading, writing and validating the on-disk formats.

Window JSON::

    {"K": int, "a": int, "M": int, "p": real|null, "lambda": real|null,
     "coeffs": [real, ...]}

plus an optional ``"p_fraction"`` string (e.g. ``"14/512"``) when ``p`` was
given as a rational.  Window CSV is one coefficient per line without a
header.  Floats are written with shortest round-trip formatting so files
reproduce bitwise.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

import jsonschema
import numpy as np

from .solver import SolverTrace

__all__ = [
    "WindowFile",
    "SchemaError",
    "read_window",
    "write_window_json",
    "write_window_csv",
    "read_window_csv",
    "write_spectrum_csv",
    "write_trace_csv",
    "write_summary_csv",
    "write_json",
    "schema_check",
    "detect_kind",
    "p_label",
    "SPECTRUM_COLUMNS",
    "TRACE_COLUMNS",
    "SUMMARY_COLUMNS",
]

SPECTRUM_COLUMNS = ["freq_cycles_per_sample", "freq_nyquist_normalized", "magnitude_db"]
TRACE_COLUMNS = ["iter", "grad_norm", "objective"]
SUMMARY_COLUMNS = ["p_numerator", "iterations", "status", "concentration", "sidelobe_energy"]

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_POS_INT = {"type": "integer", "minimum": 1}

WINDOW_SCHEMA = {
    "type": "object",
    "required": ["K", "a", "M", "p", "lambda", "coeffs"],
    "properties": {
        "K": _POS_INT,
        "a": _POS_INT,
        "M": _POS_INT,
        "p": _NUM_OR_NULL,
        "lambda": _NUM_OR_NULL,
        "p_fraction": {"type": ["string", "null"], "pattern": r"^\d+/\d+$"},
        "coeffs": {"type": "array", "items": _NUM, "minItems": 1},
    },
    "additionalProperties": False,
}

METRICS_SCHEMA = {
    "type": "object",
    "required": ["p", "concentration", "sidelobe_energy", "is_tight", "lambda"],
    "properties": {
        "p": _NUM,
        "concentration": _NUM,
        "sidelobe_energy": _NUM,
        "is_tight": {"type": "boolean"},
        "lambda": _NUM,
    },
    "additionalProperties": True,
}

VERIFY_SCHEMA = {
    "type": "object",
    "required": ["tight", "lambda", "max_deviation", "max_relative_error", "passed"],
    "properties": {
        "tight": {"type": "boolean"},
        "lambda": _NUM,
        "max_deviation": _NUM,
        "max_relative_error": _NUM_OR_NULL,
        "passed": {"type": "boolean"},
        "L": _POS_INT,
        "trials": _POS_INT,
        "seed": {"type": "integer"},
    },
}

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["command", "parameters", "tool_version", "timestamp", "outputs"],
    "properties": {
        "command": {"type": "string"},
        "parameters": {"type": "object"},
        "tool_version": {"type": "string"},
        "timestamp": {"type": "string"},
        "outputs": {"type": "array", "items": {"type": "string"}},
        "conventions": {"type": "object"},
    },
}

JSON_SCHEMAS = {
    "window": WINDOW_SCHEMA,
    "metrics": METRICS_SCHEMA,
    "verify": VERIFY_SCHEMA,
    "manifest": MANIFEST_SCHEMA,
}


class SchemaError(ValueError):
    """A file does not match its documented format."""


@dataclass(frozen=True)
class WindowFile:
    coeffs: np.ndarray
    K: int
    a: int
    M: int
    p: Optional[float] = None
    lam: Optional[float] = None
    p_fraction: Optional[str] = None


def _fmt(x) -> str:
    return repr(float(x))


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n")
    return path


def write_window_json(path, wf: WindowFile) -> Path:
    obj = {
        "K": int(wf.K),
        "a": int(wf.a),
        "M": int(wf.M),
        "p": None if wf.p is None else float(wf.p),
        "lambda": None if wf.lam is None else float(wf.lam),
        "coeffs": [float(c) for c in wf.coeffs],
    }
    if wf.p_fraction is not None:
        obj["p_fraction"] = wf.p_fraction
    return write_json(path, obj)


def write_window_csv(path, coeffs) -> Path:
    path = Path(path)
    path.write_text("".join(_fmt(c) + "\n" for c in coeffs))
    return path


def read_window_csv(path) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    try:
        return np.array([float(ln) for ln in lines])
    except ValueError as exc:
        raise SchemaError(f"{path}: not a headerless one-column CSV: {exc}") from exc


def read_window(path) -> WindowFile:
    """Load a window JSON file and validate it."""
    path = Path(path)
    obj = json.loads(path.read_text())
    _validate(obj, "window", path)
    if len(obj["coeffs"]) != obj["K"]:
        raise SchemaError(f"{path}: {len(obj['coeffs'])} coefficients but K={obj['K']}")
    return WindowFile(
        coeffs=np.array(obj["coeffs"], dtype=np.float64),
        K=obj["K"],
        a=obj["a"],
        M=obj["M"],
        p=obj["p"],
        lam=obj["lambda"],
        p_fraction=obj.get("p_fraction"),
    )


def _write_csv(path, header: list, rows: Iterable) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_spectrum_csv(path, spec) -> Path:
    rows = (
        (_fmt(f), _fmt(fn), _fmt(db))
        for f, fn, db in zip(spec.freqs, spec.freqs_nyquist, spec.magnitudes_db)
    )
    return _write_csv(path, SPECTRUM_COLUMNS, rows)


def write_trace_csv(path, trace: SolverTrace) -> Path:
    rows = (
        (i, _fmt(g), _fmt(o)) for i, (g, o) in enumerate(zip(trace.grad_norms, trace.objective))
    )
    return _write_csv(path, TRACE_COLUMNS, rows)


def write_summary_csv(path, rows: Iterable[dict]) -> Path:
    out = (
        (
            r["p_numerator"],
            r["iterations"],
            r["status"],
            _fmt(r["concentration"]),
            _fmt(r["sidelobe_energy"]),
        )
        for r in rows
    )
    return _write_csv(path, SUMMARY_COLUMNS, out)


def p_label(p: float | Fraction, K: int) -> str:
    """File-name label ``<numerator>_<K>`` for ``p = numerator / K``."""
    num = Fraction(p) * K if isinstance(p, Fraction) else Fraction(p).limit_denominator(10**9) * K
    if num.denominator == 1:
        return f"{num.numerator}_{K}"
    return f"{float(num):g}_{K}".replace(".", "d")


def _validate(obj, kind: str, path) -> None:
    try:
        jsonschema.validate(obj, JSON_SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{path}: invalid {kind} file: {exc.message}") from exc


def detect_kind(path) -> str:
    """Guess the format of a produced file from its extension and content."""
    path = Path(path)
    if path.suffix == ".json":
        obj = json.loads(path.read_text())
        if not isinstance(obj, dict):
            raise SchemaError(f"{path}: top-level JSON value must be an object")
        if "coeffs" in obj:
            return "window"
        if "command" in obj:
            return "manifest"
        if "max_relative_error" in obj:
            return "verify"
        if "concentration" in obj:
            return "metrics"
        raise SchemaError(f"{path}: unrecognized JSON file")
    if path.suffix == ".csv":
        first = path.read_text().split("\n", 1)[0].strip()
        for kind, cols in (
            ("spectrum", SPECTRUM_COLUMNS),
            ("trace", TRACE_COLUMNS),
            ("summary", SUMMARY_COLUMNS),
        ):
            if first == ",".join(cols):
                return kind
        return "window_csv"
    raise SchemaError(f"{path}: unknown file type")


def _check_csv(path, cols: list, types: list) -> None:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != cols:
        raise SchemaError(f"{path}: header must be {','.join(cols)}")
    if len(rows) < 2:
        raise SchemaError(f"{path}: no data rows")
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(cols):
            raise SchemaError(f"{path}:{n}: expected {len(cols)} fields, got {len(row)}")
        for value, typ in zip(row, types):
            try:
                typ(value)
            except ValueError as exc:
                raise SchemaError(f"{path}:{n}: bad value {value!r}") from exc


def _status(value: str) -> str:
    from .solver import Status

    return Status(value).value


def schema_check(path) -> str:
    """Validate ``path`` against its format; return the detected kind.

    Raises
    ------
    SchemaError
        If the file does not match.
    """
    path = Path(path)
    try:
        kind = detect_kind(path)
        if kind in JSON_SCHEMAS:
            obj = json.loads(path.read_text())
            _validate(obj, kind, path)
            if kind == "window" and len(obj["coeffs"]) != obj["K"]:
                raise SchemaError(f"{path}: coefficient count does not match K")
        elif kind == "spectrum":
            _check_csv(path, SPECTRUM_COLUMNS, [float, float, float])
        elif kind == "trace":
            _check_csv(path, TRACE_COLUMNS, [int, float, float])
        elif kind == "summary":
            _check_csv(path, SUMMARY_COLUMNS, [str, int, _status, float, float])
        else:
            if read_window_csv(path).size == 0:
                raise SchemaError(f"{path}: empty window CSV")
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    return kind
