"""Matrix and vector exchange formats.

CSV: one matrix row per line, comma separated, every entry written as
``a+bi`` (e.g. ``0.5-1.25i``). Vectors are stored as a single column.

Binary: little-endian; 4-byte magic ``b"FCSM"``, then ``rows`` and
``cols`` as uint64, then ``rows*cols`` entries in row-major order, each
entry two float64 values (real part, imaginary part).
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

MAGIC = b"FCSM"
_HEADER = struct.Struct("<4sQQ")


def format_complex(z: complex) -> str:
    """Render one entry as ``a+bi`` with round-trip precision."""
    z = complex(z)
    return f"{z.real!r}{z.imag:+.17g}i"


def parse_complex(s: str) -> complex:
    """Parse ``a+bi`` (or a bare real) into a complex number."""
    s = s.strip().replace(" ", "")
    if not s:
        raise InvalidInputError("empty CSV entry")
    if s.endswith("i"):
        s = s[:-1] + "j"
    try:
        return complex(s)
    except ValueError:
        raise InvalidInputError(f"cannot parse complex entry {s!r}") from None


def write_matrix_csv(path, A) -> None:
    A = np.asarray(A)
    if A.ndim == 1:
        A = A[:, None]
    lines = [",".join(format_complex(v) for v in row) for row in A]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            rows.append([parse_complex(t) for t in line.split(",")])
    if not rows:
        raise InvalidInputError(f"{path}: no data")
    if len({len(r) for r in rows}) != 1:
        raise InvalidInputError(f"{path}: ragged rows")
    return np.array(rows, dtype=np.complex128)


def read_vector_csv(path) -> np.ndarray:
    """Read a vector stored as one column (or one row) of a CSV file."""
    A = read_matrix_csv(path)
    if min(A.shape) != 1:
        raise InvalidInputError(f"{path}: expected a single row or column")
    return A.ravel()


def write_matrix_bin(path, A) -> None:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim == 1:
        A = A[:, None]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, A.shape[0], A.shape[1]))
        fh.write(A.astype("<c16").tobytes(order="C"))


def read_matrix_bin(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise InvalidInputError(f"{path}: truncated header")
    magic, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise InvalidInputError(f"{path}: bad magic {magic!r}")
    body = data[_HEADER.size:]
    if len(body) != rows * cols * 16:
        raise InvalidInputError(f"{path}: payload size mismatch")
    return np.frombuffer(body, dtype="<c16").reshape(rows, cols).astype(np.complex128)


def real_if_close(x, tol: float = 0.0):
    """Drop an all-zero imaginary part so real data stays real."""
    x = np.asarray(x)
    if np.iscomplexobj(x) and np.all(np.abs(x.imag) <= tol):
        return x.real.copy()
    return x


def complex_to_json(x) -> list:
    """Encode a vector as a list of ``[re, im]`` pairs."""
    x = np.asarray(x, dtype=np.complex128).ravel()
    return [[float(v.real), float(v.imag)] for v in x]


def complex_from_json(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.ndim == 1:
        return arr.astype(np.complex128)
    return arr[:, 0] + 1j * arr[:, 1]


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
