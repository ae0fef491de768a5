"""
Raw float dumps for debugging.

Layout, all little-endian:

- Matrix (QBH1): 16-byte header `b'QBH1'`, u32 n, u32 flags, u32 reserved (0),
  then n*n float64 values row-major. Flag bit 0 marks complex data, stored as
  interleaved (real, imag) pairs.
- Grid (QBG1): 16-byte header `b'QBG1'`, u32 nx, u32 ny, u32 flags (0),
  then nx*ny float64 values row-major with x as the leading index.
"""
from pathlib import Path
from typing import Union
import logging
import struct

import numpy as np

from app.utils.errors import EmitError

log = logging.getLogger(__name__)

_HEADER = struct.Struct('<4sIII')
MATRIX_MAGIC = b'QBH1'
GRID_MAGIC = b'QBG1'
FLAG_COMPLEX = 1

PathLike = Union[str, Path]


def _write(path: PathLike, header: bytes, payload: np.ndarray):
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, 'wb') as f:
            f.write(header)
            f.write(payload.tobytes(order='C'))
    except OSError as e:
        raise EmitError(f"cannot write binary dump ({e.strerror})", str(p)) from e
    log.debug('Wrote %d bytes to %s', len(header) + payload.nbytes, p)


def dump_matrix(matrix: np.ndarray, path: PathLike):
    matrix = np.asarray(matrix)
    n = matrix.shape[0]
    if np.iscomplexobj(matrix):
        flags = FLAG_COMPLEX
        payload = np.ascontiguousarray(matrix, dtype='<c16').view('<f8')
    else:
        flags = 0
        payload = np.ascontiguousarray(matrix, dtype='<f8')
    _write(path, _HEADER.pack(MATRIX_MAGIC, n, flags, 0), payload)


def load_matrix(path: PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, n, flags, _ = _HEADER.unpack_from(data)
    if magic != MATRIX_MAGIC:
        raise ValueError(f"{path} is not a QBH1 matrix dump")
    values = np.frombuffer(data, dtype='<f8', offset=_HEADER.size)
    if flags & FLAG_COMPLEX:
        return values.view('<c16').reshape(n, n).copy()
    return values.reshape(n, n).copy()


def dump_grid(values: np.ndarray, path: PathLike):
    values = np.asarray(values, dtype=float)
    nx, ny = values.shape
    _write(path, _HEADER.pack(GRID_MAGIC, nx, ny, 0), np.ascontiguousarray(values, dtype='<f8'))


def load_grid(path: PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, nx, ny, _ = _HEADER.unpack_from(data)
    if magic != GRID_MAGIC:
        raise ValueError(f"{path} is not a QBG1 grid dump")
    return np.frombuffer(data, dtype='<f8', offset=_HEADER.size).reshape(nx, ny).copy()


__all__ = ['dump_matrix', 'load_matrix', 'dump_grid', 'load_grid']
