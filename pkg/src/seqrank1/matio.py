"""Matrix container I/O.

Binary format: 8 magic bytes ``SQR1MAT\\x00``, then rows and cols as 64-bit
little-endian unsigned integers, then rows*cols float64 values, row-major,
little-endian. A plain-text interchange writer/reader ("rows cols" header
line, one row per line, 17 significant digits) is provided for humans.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .linalg import as_matrix

MAGIC = b"SQR1MAT\x00"


class MatrixFormatError(ValueError):
    """File does not parse as a matrix container."""


def write_matrix(path, m) -> None:
    arr = as_matrix(m)
    rows, cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 16:
        raise MatrixFormatError(f"{path}: truncated header")
    if raw[: len(MAGIC)] != MAGIC:
        raise MatrixFormatError(f"{path}: bad magic bytes")
    rows, cols = struct.unpack("<QQ", raw[len(MAGIC) : len(MAGIC) + 16])
    body = raw[len(MAGIC) + 16 :]
    expected = rows * cols * 8
    if len(body) != expected:
        raise MatrixFormatError(
            f"{path}: payload is {len(body)} bytes, expected {expected} for {rows}x{cols}"
        )
    arr = np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(np.float64)
    if not np.isfinite(arr).all():
        raise MatrixFormatError(f"{path}: non-finite entries")
    return arr


def write_matrix_text(path, m) -> None:
    arr = as_matrix(m)
    with open(path, "w") as fh:
        fh.write(f"{arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_matrix_text(path) -> np.ndarray:
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise MatrixFormatError(f"{path}: empty file")
    try:
        rows, cols = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: bad header line {lines[0]!r}") from exc
    if len(lines) - 1 != rows:
        raise MatrixFormatError(f"{path}: expected {rows} data rows, got {len(lines) - 1}")
    data = [[float(tok) for tok in line.split()] for line in lines[1:]]
    arr = np.array(data, dtype=np.float64)
    if arr.shape != (rows, cols):
        raise MatrixFormatError(f"{path}: data shape {arr.shape} != header {(rows, cols)}")
    return arr
