"""Matrix files: delimited text and a packed little-endian binary layout.

Text: one row per line, values separated by commas or whitespace. Lines
starting with ``#`` are comments; the first comment line written by
``write_text`` carries the column names.

Binary: a 16-byte header followed by the payload.

    bytes 0..7    magic b"SPHAMAT1"
    bytes 8..11   T, number of rows, uint32 little-endian
    bytes 12..15  N, number of columns, uint32 little-endian
    bytes 16..    T * N float64 little-endian, row-major
"""
from __future__ import annotations

import io
import os
import struct

import numpy as np

from .errors import FormatError

MAGIC = b"SPHAMAT1"
_HEADER = struct.Struct("<8sII")


def write_binary(path, A) -> None:
    A = np.ascontiguousarray(A, dtype="<f8")
    if A.ndim != 2:
        raise FormatError("binary matrices must be two-dimensional")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, A.shape[0], A.shape[1]))
        fh.write(A.tobytes(order="C"))


def read_binary(path, raw: bytes | None = None) -> np.ndarray:
    if raw is None:
        with open(path, "rb") as fh:
            raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: shorter than the 16-byte header")
    magic, T, N = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    expect = _HEADER.size + 8 * T * N
    if len(raw) != expect:
        raise FormatError(f"{path}: expected {expect} bytes for a {T} x {N} matrix, found {len(raw)}")
    return np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(T, N).astype(float)


def format_text(A, columns=None) -> str:
    """Delimited text with a ``# name name ...`` header; floats use repr precision."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if columns is None:
        columns = [f"c{j}" for j in range(A.shape[1])]
    out = io.StringIO()
    out.write("# " + " ".join(columns) + "\n")
    for row in A:
        out.write(" ".join(repr(float(v)) for v in row) + "\n")
    return out.getvalue()


def write_text(path, A, columns=None) -> None:
    with open(path, "w") as fh:
        fh.write(format_text(A, columns))


def read_text(path, with_columns: bool = False, raw: bytes | None = None):
    if raw is None:
        with open(path, "rb") as fh:
            raw = fh.read()
    rows = []
    columns = None
    for lineno, line in enumerate(raw.decode().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if columns is None and not rows:
                columns = line[1:].split()
            continue
        parts = line.replace(",", " ").split()
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    width = len(rows[0]) if rows else 0
    if any(len(r) != width for r in rows):
        raise FormatError(f"{path}: rows have differing lengths")
    A = np.array(rows, dtype=float).reshape(len(rows), width)
    if with_columns:
        return A, (columns if columns is not None and len(columns) == width else None)
    return A


def read_matrix(path, with_columns: bool = False):
    """Read either format, telling them apart by the magic bytes.

    With ``with_columns`` also return the header names of a text file, or
    None when there is no usable header.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[: len(MAGIC)] == MAGIC:
        A = read_binary(path, raw)
        return (A, None) if with_columns else A
    return read_text(path, with_columns, raw)


def write_matrix(path, A, columns=None, binary: bool = False) -> None:
    if binary:
        write_binary(path, A)
    else:
        write_text(path, A, columns)
