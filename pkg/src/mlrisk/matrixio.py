"""Reading and writing square matrices and eigenvalue series.

Two matrix formats are supported:

* csv: a header line of N labels followed by N lines of N values.
* bin: ``b"MLRM"``, a little-endian u32 version, a little-endian u64 N,
  then N*N little-endian f64 values in row-major order.
"""

from __future__ import annotations

import csv
import io
import os
import struct

import numpy as np

MAGIC = b"MLRM"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")


class MatrixFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def write_matrix_csv(path, matrix, labels=None) -> None:
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    labels = list(labels) if labels is not None else [f"A{i + 1}" for i in range(n)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(labels)
    for row in m:
        w.writerow([_fmt(x) for x in row])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def write_matrix_bin(path, matrix) -> None:
    m = np.ascontiguousarray(matrix, dtype="<f8")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise MatrixFormatError(f"expected a square matrix, got {m.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, m.shape[0]))
        fh.write(m.tobytes(order="C"))


def write_matrix(path, matrix, fmt: str = "csv", labels=None) -> None:
    if fmt == "csv":
        write_matrix_csv(path, matrix, labels)
    elif fmt == "bin":
        write_matrix_bin(path, matrix)
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")


def read_matrix(path: str | os.PathLike) -> tuple[np.ndarray, list[str] | None]:
    """Load a matrix written by :func:`write_matrix`; the format is sniffed."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] == MAGIC:
        if len(raw) < _HEADER.size:
            raise MatrixFormatError(f"{path}: truncated header")
        _, version, n = _HEADER.unpack_from(raw)
        if version != VERSION:
            raise MatrixFormatError(f"{path}: unsupported version {version}")
        body = raw[_HEADER.size:]
        if len(body) != 8 * n * n:
            raise MatrixFormatError(f"{path}: expected {8 * n * n} data bytes, found {len(body)}")
        return np.frombuffer(body, dtype="<f8").reshape(n, n).astype(float), None
    rows = list(csv.reader(io.StringIO(raw.decode("utf-8"))))
    rows = [r for r in rows if r]
    if not rows:
        raise MatrixFormatError(f"{path}: empty file")
    labels = None
    try:
        [float(x) for x in rows[0]]
    except ValueError:
        labels, rows = rows[0], rows[1:]
    try:
        m = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: {exc}") from None
    if m.ndim != 2 or m.shape[0] != m.shape[1] or (labels is not None and len(labels) != m.shape[0]):
        raise MatrixFormatError(f"{path}: not a square matrix")
    return m, labels


def write_series(path, values) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.writelines(_fmt(x) + "\n" for x in values)


def read_series(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return np.array([float(line) for line in fh if line.strip()], dtype=float)
