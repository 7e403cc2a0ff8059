"""Trace records and their CSV serialization.

Columns follow the record field order with vector fields flattened as
``q_1 .. q_n``. Floats are written with 17 significant digits so reading a
file back reproduces every finite value bit for bit. Lines starting with
``#`` carry metadata (``# key: value``).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, fields

import numpy as np

VECTOR_FIELDS = ("q", "qdot", "e", "s", "xi", "pihat", "tau_bar")


@dataclass(frozen=True)
class TraceRecord:
    t: float
    q: np.ndarray
    qdot: np.ndarray
    e: np.ndarray
    s: np.ndarray
    xi: np.ndarray
    pihat: np.ndarray
    tau_bar: np.ndarray
    det_Mn_hat: float
    eta: float
    V: float
    Vdot: float
    pihat_delta_identity: float

    def __eq__(self, other):
        if not isinstance(other, TraceRecord):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name), equal_nan=True)
            for f in fields(self)
        )


def header(n, m, p):
    sizes = {"q": n, "qdot": n, "e": m, "s": n, "xi": n, "pihat": p, "tau_bar": m}
    cols = []
    for f in fields(TraceRecord):
        if f.name in sizes:
            cols += [f"{f.name}_{i + 1}" for i in range(sizes[f.name])]
        else:
            cols.append(f.name)
    return cols


def _fmt(x):
    return format(float(x), ".17g")


def format_row(rec):
    vals = []
    for f in fields(TraceRecord):
        v = getattr(rec, f.name)
        if f.name in VECTOR_FIELDS:
            vals.extend(_fmt(x) for x in v)
        else:
            vals.append(_fmt(v))
    return ",".join(vals)


def write_trace(stream, records, metadata=None, error=None):
    """Write records (and optional metadata / terminating error) as CSV.

    A run that failed before its first record is written as metadata plus
    the error line, with no header.
    """
    if not records and error is None:
        raise ValueError("cannot serialize an empty trace")
    for key, value in (metadata or {}).items():
        stream.write(f"# {key}: {value}\n")
    if records:
        first = records[0]
        stream.write(",".join(header(first.q.size, first.e.size, first.pihat.size)) + "\n")
    for rec in records:
        stream.write(format_row(rec) + "\n")
    if error is not None:
        stream.write(f"# error: {error}\n")


def dumps(records, metadata=None, error=None):
    buf = io.StringIO()
    write_trace(buf, records, metadata, error)
    return buf.getvalue()


def read_trace(stream):
    """Parse a trace file; returns ``(records, metadata)``.

    A terminating error line is reported under ``metadata["error"]``.
    """
    metadata = {}
    cols = None
    records = []
    for line in stream:
        line = line.rstrip("\n")
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            metadata[key.strip()] = value.strip()
            continue
        if cols is None:
            cols = line.split(",")
            sizes = {name: sum(1 for c in cols if c.rsplit("_", 1)[0] == name and c.rsplit("_", 1)[-1].isdigit())
                     for name in VECTOR_FIELDS}
            continue
        vals = [float(x) for x in line.split(",")]
        if len(vals) != len(cols):
            raise ValueError(f"row has {len(vals)} values, header has {len(cols)} columns")
        it = iter(vals)
        kwargs = {}
        for f in fields(TraceRecord):
            if f.name in VECTOR_FIELDS:
                kwargs[f.name] = np.array([next(it) for _ in range(sizes[f.name])])
            else:
                kwargs[f.name] = next(it)
        records.append(TraceRecord(**kwargs))
    return records, metadata


def loads(text):
    return read_trace(io.StringIO(text))
