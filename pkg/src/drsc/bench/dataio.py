"""Dataset and result file formats.

Dataset CSV: one point per row, comma-separated floats, no header.
Dataset binary: b"DRSC", u32 version (=1), u64 number of points N, u64 point
dimension m, then N*m little-endian float64 values, point-major.
Labels: one integer per line, aligned with the dataset rows.
"""
from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from ..errors import ParseError

MAGIC = b"DRSC"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def save_binary(path, points: np.ndarray) -> None:
    """Write ``points`` (m x N, points as columns) in the binary format."""
    P = np.ascontiguousarray(np.asarray(points, dtype="<f8").T)
    N, m = P.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, N, m))
        fh.write(P.tobytes(order="C"))


def load_binary(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ParseError("file too short for DRSC header", offset=len(raw))
    magic, version, N, m = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise ParseError(f"unsupported version {version}", offset=4)
    expected = _HEADER.size + 8 * N * m
    if len(raw) != expected:
        raise ParseError(f"payload size mismatch: expected {expected} bytes, got {len(raw)}",
                         offset=min(len(raw), expected))
    P = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(N, m)
    return P.T.astype(np.float64)


def save_csv(path, points: np.ndarray) -> None:
    P = np.asarray(points, dtype=np.float64).T
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in P:
            w.writerow([repr(float(v)) for v in row])


def load_csv(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise ParseError(f"non-numeric value: {exc}", line=lineno) from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ParseError(f"expected {width} values, got {len(vals)}", line=lineno)
            rows.append(vals)
    if not rows:
        raise ParseError("no data rows", line=1)
    return np.asarray(rows, dtype=np.float64).T


def load_points(path) -> np.ndarray:
    """Load a dataset (m x N); ``.csv``/``.txt`` is text, anything else binary."""
    if Path(path).suffix.lower() in (".csv", ".txt"):
        return load_csv(path)
    return load_binary(path)


def save_points(path, points) -> None:
    if Path(path).suffix.lower() in (".csv", ".txt"):
        save_csv(path, points)
    else:
        save_binary(path, points)


def save_labels(path, labels) -> None:
    with open(path, "w") as fh:
        for v in np.asarray(labels).ravel():
            fh.write(f"{int(v)}\n")


def load_labels(path, expected: int | None = None) -> np.ndarray:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            try:
                out.append(int(s))
            except ValueError:
                raise ParseError(f"invalid label {s!r}", line=lineno) from None
    labels = np.asarray(out, dtype=np.int64)
    if expected is not None and labels.size != expected:
        raise ParseError(f"expected {expected} labels, got {labels.size}", line=labels.size + 1)
    return labels


def write_csv_rows(path_or_buf, header: list[str], rows: list[list]) -> None:
    """RFC-4180 CSV (CRLF line endings, minimal quoting)."""
    own = not hasattr(path_or_buf, "write")
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    finally:
        if own:
            fh.close()


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    write_csv_rows(buf, header, rows)
    return buf.getvalue()
