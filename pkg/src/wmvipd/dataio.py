"""LIBSVM text parsing and trace CSV serialization.

Trace CSV layout::

    # key=value          (optional config comments)
    iteration,prox_evals,kkt,elapsed_seconds
    0,0,1.2345,0
    ...
    # status=Converged
"""

import io
import os

import numpy as np

from .experiments import Dataset
from .solvers import CONVERGED, DIVERGED, MAX_ITER, Trace, TraceRow

TRACE_HEADER = "iteration,prox_evals,kkt,elapsed_seconds"
_STATUSES = (CONVERGED, DIVERGED, MAX_ITER)


class LibsvmFormatError(ValueError):
    def __init__(self, lineno, msg):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class TraceFormatError(ValueError):
    pass


def _as_text(source):
    if isinstance(source, (bytes, bytearray)):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data


def parse_libsvm(source, n_features=None, name="libsvm"):
    """Parse ``label idx:val ...`` lines into a dense :class:`Dataset`.

    Indices are 1-based and strictly increasing within a line. Missing
    features are zero. With ``n_features`` given, the width is fixed and a
    larger index is an error.
    """
    labels, rows = [], []
    width = 0
    for lineno, raw in enumerate(_as_text(source).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise LibsvmFormatError(lineno, f"bad label {tokens[0]!r}") from None
        entries = {}
        last = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise LibsvmFormatError(lineno, f"malformed token {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise LibsvmFormatError(lineno, f"malformed token {tok!r}") from None
            if idx < 1:
                raise LibsvmFormatError(lineno, f"index {idx} < 1")
            if idx <= last:
                raise LibsvmFormatError(lineno, f"index {idx} not increasing (after {last})")
            if n_features is not None and idx > n_features:
                raise LibsvmFormatError(lineno, f"index {idx} exceeds width {n_features}")
            entries[idx] = val
            last = idx
        width = max(width, last)
        labels.append(label)
        rows.append(entries)
    if not rows:
        raise LibsvmFormatError(0, "no rows")
    ncol = n_features if n_features is not None else width
    if ncol < 1:
        raise LibsvmFormatError(0, "no features")
    B = np.zeros((len(rows), ncol))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            B[i, idx - 1] = val
    return Dataset(B, np.array(labels), name=name)


def load_libsvm(path, n_features=None):
    with open(path, "rb") as fh:
        return parse_libsvm(fh, n_features, name=os.path.basename(path))


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_trace_csv(trace, sink, config=None):
    """Write ``trace`` to a text stream, path, or binary stream."""
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            return write_trace_csv(trace, fh, config)
    lines = [f"# {k}={v}" for k, v in (config or {}).items()]
    lines.append(TRACE_HEADER)
    for r in trace.records:
        lines.append(",".join(_fmt(v) for v in (r.iteration, r.prox_evals, r.kkt, r.elapsed_seconds)))
    lines.append(f"# status={trace.status}")
    text = "\n".join(lines) + "\n"
    if isinstance(sink, io.TextIOBase):
        sink.write(text)
    else:
        sink.write(text.encode("utf-8"))


def read_trace_csv(source):
    """Inverse of :func:`write_trace_csv`; config comments land in ``meta``."""
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            return read_trace_csv(fh)
    lines = _as_text(source).splitlines()
    meta, records = {}, []
    status = None
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        k, _, v = lines[i][1:].strip().partition("=")
        meta[k] = v
        i += 1
    if i >= len(lines) or lines[i] != TRACE_HEADER:
        got = lines[i] if i < len(lines) else "<eof>"
        raise TraceFormatError(f"expected header {TRACE_HEADER!r}, got {got!r}")
    for lineno in range(i + 1, len(lines)):
        line = lines[lineno]
        if line.startswith("# status="):
            status = line[len("# status="):]
            if status not in _STATUSES:
                raise TraceFormatError(f"unknown status {status!r}")
            continue
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise TraceFormatError(f"line {lineno + 1}: expected 4 fields, got {len(parts)}")
        try:
            records.append(TraceRow(int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
        except ValueError as e:
            raise TraceFormatError(f"line {lineno + 1}: {e}") from None
    if status is None:
        raise TraceFormatError("missing status line")
    return Trace(records=records, status=status, meta=meta)
