"""Matrix file formats: canonical CSV and the SPCMAT01 raw binary layout."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import EmptyMatrixError, MatrixFormatError, NonFiniteError
from .matrixcore import as_matrix

MAGIC = b"SPCMAT01"


def format_float(x: float) -> str:
    """Canonical decimal form: 17 significant digits, round-trip exact."""
    return format(float(x), ".17g")


def matrix_to_csv(a) -> str:
    arr = as_matrix(a)
    lines = [",".join(format_float(x) for x in row) for row in arr]
    return "\n".join(lines) + "\n"


def write_matrix_csv(path, a) -> None:
    Path(path).write_bytes(matrix_to_csv(a).encode("ascii"))


def read_matrix_csv(path) -> np.ndarray:
    text = Path(path).read_text(encoding="ascii")
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise MatrixFormatError(f"line {lineno}: {exc}") from exc
    if not rows:
        raise EmptyMatrixError("CSV file contains no matrix rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise MatrixFormatError("ragged rows: all lines must have the same width")
    arr = np.array(rows, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise NonFiniteError("matrix file contains non-finite values")
    return arr


def write_matrix_bin(path, a) -> None:
    arr = as_matrix(a)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", arr.shape[0], arr.shape[1]))
        fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_matrix_bin(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < 24 or blob[:8] != MAGIC:
        raise MatrixFormatError("missing SPCMAT01 magic header")
    rows, cols = struct.unpack("<QQ", blob[8:24])
    expected = 24 + rows * cols * 8
    if rows == 0 or cols == 0:
        raise EmptyMatrixError("binary matrix has zero extent")
    if len(blob) != expected:
        raise MatrixFormatError(
            f"payload length {len(blob)} does not match {rows}x{cols} f64 grid"
        )
    arr = np.frombuffer(blob[24:], dtype="<f8").reshape(rows, cols).astype(np.float64)
    if not np.isfinite(arr).all():
        raise NonFiniteError("matrix file contains non-finite values")
    return arr


def load_matrix(path, fmt: str | None = None) -> np.ndarray:
    """Read a matrix; format sniffed from the magic bytes unless forced."""
    if fmt == "csv":
        return read_matrix_csv(path)
    if fmt == "bin":
        return read_matrix_bin(path)
    if fmt is not None:
        raise ValueError(f"unknown matrix format {fmt!r}")
    with open(path, "rb") as fh:
        head = fh.read(8)
    return read_matrix_bin(path) if head == MAGIC else read_matrix_csv(path)


def save_matrix(path, a, fmt: str = "csv") -> None:
    if fmt == "csv":
        write_matrix_csv(path, a)
    elif fmt == "bin":
        write_matrix_bin(path, a)
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")
