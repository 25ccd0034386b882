"""File formats: digraphs, enrichments, matrices and channels as JSON, matrices as CSV.

Rational numbers are written as ``"p/q"`` strings so exact data survive a
round trip; floats are written with ``repr`` precision.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import exact
from .digraph import Digraph


class FormatError(ValueError):
    pass


def scalar_out(x):
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, complex) or isinstance(x, np.complexfloating):
        return [float(x.real), float(x.imag)]
    return float(x)


def scalar_in(x):
    """Strings and ints become Fractions, floats stay floats."""
    if isinstance(x, bool):
        raise FormatError(f"not a number: {x!r}")
    if isinstance(x, (int, str)):
        try:
            return exact.as_fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"not a number: {x!r}") from exc
    if isinstance(x, float):
        return x
    raise FormatError(f"not a number: {x!r}")


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def _default(x):
    if isinstance(x, (np.integer, np.floating, np.bool_)):
        return x.item()
    if isinstance(x, (Fraction, np.ndarray)):
        return scalar_out(x) if isinstance(x, Fraction) else x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_default) + "\n"


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def write_json(path, data) -> Path:
    return write_text(path, dumps(data))


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# digraphs --------------------------------------------------------------


def digraph_from_json(data: dict) -> Digraph:
    """``{"vertices": [...], "arcs": [[src, dst], ...]}``; vertices are kept as strings."""
    if not isinstance(data, dict) or "arcs" not in data:
        raise FormatError("digraph document needs an 'arcs' list")
    arcs = []
    for a in data["arcs"]:
        if not isinstance(a, (list, tuple)) or len(a) != 2:
            raise FormatError(f"arc must be a pair, got {a!r}")
        arcs.append((str(a[0]), str(a[1])))
    if "vertices" in data:
        vertices = [str(v) for v in data["vertices"]]
    else:
        vertices = list(dict.fromkeys(v for a in arcs for v in a))
    return Digraph(vertices, arcs)


def read_digraph(path) -> Digraph:
    return digraph_from_json(read_json(path))


def arc_values_from_json(data: dict, D: Digraph) -> dict:
    """``{"arcs": [{"src": s, "dst": d, "value": v}, ...]}`` keyed onto D's vertices."""
    lookup = {str(v): v for v in D.vertices}
    out = {}
    try:
        for rec in data["arcs"]:
            arc = (lookup[str(rec["src"])], lookup[str(rec["dst"])])
            out[arc] = rec["value"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed arc value record: {exc}") from exc
    return out


def arc_values_to_json(values: dict, convert=scalar_out) -> dict:
    return {"arcs": [{"src": str(j), "dst": str(k), "value": convert(v)} for (j, k), v in values.items()]}


# matrices --------------------------------------------------------------


def matrix_to_json(A) -> dict:
    A = np.asarray(A)
    r, c = A.shape
    return {"rows": r, "cols": c, "data": [scalar_out(x) for x in A.ravel()]}


def matrix_from_json(data: dict) -> np.ndarray:
    try:
        r, c = int(data["rows"]), int(data["cols"])
        vals = [scalar_in(x) for x in data["data"]]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed matrix document: {exc}") from exc
    if len(vals) != r * c:
        raise FormatError(f"expected {r * c} entries, got {len(vals)}")
    if all(isinstance(x, Fraction) for x in vals):
        A = np.empty(r * c, dtype=object)
        A[:] = vals
        return A.reshape(r, c)
    return np.array([float(x) for x in vals]).reshape(r, c)


def read_matrix_csv(path) -> np.ndarray:
    """Square or rectangular matrix; an all-rational file yields an exact object array."""
    rows = []
    with open(path, newline="") as fh:
        for line in csv.reader(fh):
            if not line or all(not x.strip() for x in line):
                continue
            rows.append([x.strip() for x in line])
    if not rows:
        raise FormatError(f"{path}: empty matrix")
    if len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: ragged rows")
    try:
        if all("." not in x and "e" not in x.lower() and "inf" not in x.lower() for r in rows for x in r):
            out = np.empty((len(rows), len(rows[0])), dtype=object)
            for i, r in enumerate(rows):
                for j, x in enumerate(r):
                    out[i, j] = Fraction(x)
            return out
        return np.array([[float(x) for x in r] for r in rows])
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def matrix_csv_text(A) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(A):
        w.writerow([_csv_cell(x) for x in row])
    return buf.getvalue()


def _csv_cell(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def table_csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_csv_cell(x) if isinstance(x, (float, Fraction, np.floating)) else x for x in r])
    return buf.getvalue()
