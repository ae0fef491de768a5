"""
Gaussian random-matrix ensembles.

Variance convention (fixed for every threshold in the test suite):

- GOE: off-diagonal entries N(0, 1), diagonal entries N(0, 2);
  the spectrum fills a semicircle of radius 2*sqrt(N).
- GUE: off-diagonal real and imaginary parts N(0, 1/2) each, diagonal N(0, 1);
  same semicircle radius.

Variates are consumed from the stream in a fixed order: the N diagonal
entries first, then the strict upper triangle in row-major order (for GUE the
real parts of the upper triangle come before the imaginary parts).
"""
from dataclasses import dataclass, field
from typing import Literal, Optional
import logging

import numpy as np

from app.rmt.streams import RandomStream
from app.utils.errors import InvalidDimensionError

log = logging.getLogger(__name__)

EnsembleName = Literal['goe', 'gue']


@dataclass(frozen=True)
class BlockLayout:
    """Two diagonal blocks alpha (first n_alpha sites) and beta (the rest)."""
    n_alpha: int
    n_beta: int
    connection_width: Optional[int] = None
    coupling_scale: Optional[float] = None

    @property
    def n(self) -> int:
        return self.n_alpha + self.n_beta


@dataclass(frozen=True)
class Hamiltonian:
    entries: np.ndarray
    ensemble: EnsembleName = 'goe'
    blocks: Optional[BlockLayout] = None
    stream: Optional[RandomStream] = field(default=None, compare=False)

    def __post_init__(self):
        entries = np.array(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidDimensionError(f"Hamiltonian must be square, got shape {entries.shape}")
        if self.blocks is not None and self.blocks.n != entries.shape[0]:
            raise InvalidDimensionError(
                f"block sizes {self.blocks.n_alpha}+{self.blocks.n_beta} do not match n={entries.shape[0]}"
            )
        entries.flags.writeable = False
        object.__setattr__(self, 'entries', entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.entries)

    def coupling_block(self) -> np.ndarray:
        """The alpha-beta off-diagonal block V (rows alpha, columns beta)."""
        if self.blocks is None:
            raise InvalidDimensionError("Hamiltonian has no block layout")
        na = self.blocks.n_alpha
        return self.entries[:na, na:]


def _check_dimension(n: int) -> int:
    if int(n) < 1:
        raise InvalidDimensionError(f"matrix dimension must be >= 1, got {n}")
    return int(n)


def goe_entries(n: int, rs: RandomStream) -> np.ndarray:
    n = _check_dimension(n)
    z = rs.normals(n * (n + 1) // 2)
    h = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    off = z[n:]
    h[iu] = off
    h[iu[1], iu[0]] = off
    h[np.diag_indices(n)] = np.sqrt(2.0) * z[:n]
    return h


def sample_goe(n: int, rs: RandomStream) -> Hamiltonian:
    """
    Samples a GOE matrix from the given stream.

    Args:
        n: Matrix dimension, at least 1.
        rs: Random stream the entries are drawn from.

    Returns:
        A real-symmetric Hamiltonian, exactly symmetric by construction.

    Raises:
        InvalidDimensionError: If `n` is zero.
    """
    h = goe_entries(n, rs)
    log.debug('sample_goe n=%d stream=(%d,%d)', h.shape[0], rs.seed, rs.stream_id)
    return Hamiltonian(h, ensemble='goe', stream=rs)


def sample_gue(n: int, rs: RandomStream) -> Hamiltonian:
    """
    Samples a GUE matrix from the given stream.

    Args:
        n: Matrix dimension, at least 1.
        rs: Random stream the entries are drawn from.

    Returns:
        A complex-Hermitian Hamiltonian with a real diagonal.

    Raises:
        InvalidDimensionError: If `n` is zero.
    """
    n = _check_dimension(n)
    m = n * (n - 1) // 2
    z = rs.normals(n + 2 * m)
    h = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    scale = np.sqrt(0.5)
    off = scale * (z[n:n + m] + 1j * z[n + m:])
    h[iu] = off
    h[iu[1], iu[0]] = np.conj(off)
    h[np.diag_indices(n)] = z[:n]
    log.debug('sample_gue n=%d stream=(%d,%d)', n, rs.seed, rs.stream_id)
    return Hamiltonian(h, ensemble='gue', stream=rs)


def sample(ensemble: EnsembleName, n: int, rs: RandomStream) -> Hamiltonian:
    if ensemble == 'goe':
        return sample_goe(n, rs)
    if ensemble == 'gue':
        return sample_gue(n, rs)
    raise ValueError(f"unknown ensemble {ensemble!r}")


__all__ = ['BlockLayout', 'Hamiltonian', 'sample_goe', 'sample_gue', 'sample', 'goe_entries']
