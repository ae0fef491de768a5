"""
Artifact writers.

`emit` picks the format from the file suffix:

- `.csv`: RFC 4180 (header row, CRLF line ends) from a DataFrame, a
  TimeSeries or a mapping of equal-length columns.
- `.pgm`: binary 16-bit PGM (P5, maxval 65535, big-endian samples) of a
  DensityGrid or a 2D array, with a sidecar `.json` recording the linear
  min-max scaling. Rows run from y_max down to y_min, columns from x_min to x_max.
- `.json`: a mapping or pydantic model with sorted keys.
- `.qbh` / `.qbg`: raw matrix / grid dumps from `app.utils.binary`.
"""
from pathlib import Path
from typing import Any, List, Mapping, Union
import json
import logging

import numpy as np
import pandas as pd
from pydantic import BaseModel

from app.dynamics.states import TimeSeries
from app.stadium.propagator import DensityGrid, Snapshot
from app.utils.binary import dump_grid, dump_matrix
from app.utils.errors import EmitError

log = logging.getLogger(__name__)

PGM_MAXVAL = 65535

PathLike = Union[str, Path]


def _frame(artifact: Any) -> pd.DataFrame:
    if isinstance(artifact, pd.DataFrame):
        return artifact
    if isinstance(artifact, TimeSeries):
        return pd.DataFrame({'t': artifact.times, 'value': artifact.values})
    if isinstance(artifact, Mapping):
        return pd.DataFrame(dict(artifact))
    raise TypeError(f"cannot write {type(artifact).__name__} as CSV")


def _open_parent(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise EmitError(f"cannot create directory ({e.strerror})", str(path.parent)) from e


def write_csv(artifact: Any, path: PathLike) -> List[Path]:
    p = Path(path)
    _open_parent(p)
    try:
        _frame(artifact).to_csv(p, index=False, lineterminator='\r\n')
    except OSError as e:
        raise EmitError(f"cannot write CSV ({e.strerror})", str(p)) from e
    return [p]


def _to_json_text(artifact: Any) -> str:
    if isinstance(artifact, BaseModel):
        artifact = artifact.model_dump(mode='json')
    return json.dumps(artifact, sort_keys=True, indent=2, default=_json_default) + '\n'


def _json_default(obj: Any):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return obj.as_posix()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def write_json(artifact: Any, path: PathLike) -> List[Path]:
    p = Path(path)
    _open_parent(p)
    try:
        p.write_text(_to_json_text(artifact), encoding='utf-8', newline='\n')
    except OSError as e:
        raise EmitError(f"cannot write JSON ({e.strerror})", str(p)) from e
    return [p]


def pgm_bytes(values: np.ndarray) -> tuple:
    """Encodes an (nx, ny) array as P5 bytes; returns (bytes, vmin, vmax)."""
    values = np.asarray(values, dtype=float)
    nx, ny = values.shape
    vmin = float(np.min(values))
    vmax = float(np.max(values))
    span = vmax - vmin
    if span > 0:
        scaled = np.rint((values - vmin) / span * PGM_MAXVAL)
    else:
        scaled = np.zeros_like(values)
    image = scaled.T[::-1, :].astype('>u2')
    header = f'P5\n{nx} {ny}\n{PGM_MAXVAL}\n'.encode('ascii')
    return header + image.tobytes(order='C'), vmin, vmax


def write_pgm(artifact: Any, path: PathLike) -> List[Path]:
    p = Path(path)
    sidecar = {'maxval': PGM_MAXVAL, 'row_order': 'y descending', 'column_order': 'x ascending'}
    if isinstance(artifact, DensityGrid):
        values = artifact.values
        sidecar.update(window=list(artifact.window), x_range=[float(artifact.x[0]), float(artifact.x[-1])],
                       y_range=[float(artifact.y[0]), float(artifact.y[-1])], quantity='time-averaged density')
    elif isinstance(artifact, Snapshot):
        values = artifact.real_part
        sidecar.update(time=artifact.time, quantity='real part of psi')
    else:
        values = np.asarray(artifact, dtype=float)
    if np.ndim(values) != 2:
        raise TypeError(f"PGM needs a 2D array, got shape {np.shape(values)}")
    payload, vmin, vmax = pgm_bytes(values)
    sidecar.update(width=int(np.shape(values)[0]), height=int(np.shape(values)[1]), min=vmin, max=vmax)
    _open_parent(p)
    try:
        p.write_bytes(payload)
    except OSError as e:
        raise EmitError(f"cannot write PGM ({e.strerror})", str(p)) from e
    return [p] + write_json(sidecar, p.with_suffix('.json'))


def write_binary(artifact: Any, path: PathLike) -> List[Path]:
    p = Path(path)
    if p.suffix == '.qbh':
        dump_matrix(getattr(artifact, 'entries', artifact), p)
    else:
        dump_grid(getattr(artifact, 'values', artifact), p)
    return [p]


_WRITERS = {
    '.csv': write_csv,
    '.json': write_json,
    '.pgm': write_pgm,
    '.qbh': write_binary,
    '.qbg': write_binary,
}


def emit(artifact: Any, path: PathLike) -> List[Path]:
    """
    Writes an artifact, choosing the format from the suffix of `path`.

    Returns:
        Every file written (a PGM comes with its sidecar JSON).

    Raises:
        EmitError: On I/O failure, with the offending path.
        ValueError: On an unknown suffix.
    """
    p = Path(path)
    writer = _WRITERS.get(p.suffix.lower())
    if writer is None:
        raise ValueError(f"unknown artifact suffix '{p.suffix}' for {p}")
    written = writer(artifact, p)
    log.debug('emit %s -> %s', type(artifact).__name__, ', '.join(str(w) for w in written))
    return written


__all__ = ['emit', 'pgm_bytes', 'write_csv', 'write_json', 'write_pgm', 'write_binary']
