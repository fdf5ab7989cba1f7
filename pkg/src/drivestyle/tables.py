"""Delimited-table output with unit-bearing headers and run manifests."""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.6g"
_UNIT_RE = re.compile(r"\s*\[[^\]]*\]$")


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def with_units(frame, units):
    """Rename columns to ``name [unit]``; ``-`` marks dimensionless or label columns."""
    return frame.rename(columns={c: f"{c} [{units.get(c, '-')}]" for c in frame.columns})


def write_table(frame, path, units=None, float_format=FLOAT_FORMAT):
    """Write a comma-separated table whose header names every column's unit.

    Floats use ``float_format`` (six significant digits by default),
    NaN is written as an empty field.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = with_units(frame.reset_index(drop=True), units or {})
    out.to_csv(path, index=False, float_format=float_format, na_rep="", lineterminator="\n")
    return path


def read_table(path, index_col=None, str_columns=("subject_id",)):
    """Read a table written by :func:`write_table`, stripping units from headers.

    Columns named in ``str_columns`` are kept as text (missing values become
    empty strings) so identifiers like ``007`` survive the round trip.
    """
    header = pd.read_csv(path, nrows=0).columns
    dtype = {c: str for c in header if _UNIT_RE.sub("", c) in str_columns}
    frame = pd.read_csv(path, keep_default_na=True, dtype=dtype)
    for c in dtype:
        frame[c] = frame[c].fillna("")
    frame.columns = [_UNIT_RE.sub("", c) for c in frame.columns]
    if index_col is not None:
        frame = frame.set_index(index_col)
    return frame


def fmt(x, digits=6):
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{digits}g}"
    return str(x)


def markdown_table(frame, digits=6):
    cols = [str(c) for c in frame.columns]
    lines = ["| " + " | ".join(cols) + " |", "|" + "|".join("---" for _ in cols) + "|"]
    for row in frame.itertuples(index=False):
        lines.append("| " + " | ".join(fmt(v, digits) for v in row) + " |")
    return "\n".join(lines)


def write_manifest(path, step, parameters, inputs, outputs, versions):
    """Record what a step read and wrote. Digests are SHA-256 of file bytes."""
    base = Path(path).parent
    data = {
        "step": step,
        "parameters": parameters,
        "versions": versions,
        "inputs": {str(k): sha256_file(k) for k in sorted(map(str, inputs))},
        "outputs": {str(Path(p).relative_to(base)): sha256_file(p) for p in sorted(map(str, outputs))},
    }
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return data


def verify_manifest(path):
    """Return the manifest if every listed output still has its recorded digest."""
    path = Path(path)
    if not path.is_file():
        return None
    data = json.loads(path.read_text(encoding="utf-8"))
    for rel, digest in data["outputs"].items():
        f = path.parent / rel
        if not f.is_file() or sha256_file(f) != digest:
            return None
    return data
