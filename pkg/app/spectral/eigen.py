from dataclasses import dataclass
from typing import Optional
import logging

import numpy as np

from app.rmt.ensembles import BlockLayout, Hamiltonian
from app.utils.errors import InvalidStateError, SolverError

log = logging.getLogger(__name__)

ORTHONORMALITY_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-8
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and the matching orthonormal eigenvector columns."""
    energies: np.ndarray
    vectors: np.ndarray
    degenerate: bool = False
    blocks: Optional[BlockLayout] = None
    ensemble: str = 'goe'

    def __post_init__(self):
        for name in ('energies', 'vectors'):
            values = np.array(getattr(self, name))
            values.flags.writeable = False
            object.__setattr__(self, name, values)

    @property
    def n(self) -> int:
        return self.energies.shape[0]

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.energies))) if self.n else 0.0

    def coefficients(self, state: np.ndarray) -> np.ndarray:
        """Overlaps <phi_n|state> for every eigenvector."""
        state = np.asarray(state)
        if state.shape != (self.n,):
            raise InvalidStateError(f"state of shape {state.shape} does not match dimension {self.n}")
        return self.vectors.conj().T @ state

    def cluster_starts(self) -> np.ndarray:
        """Start indices of groups of levels equal within the degeneracy tolerance."""
        if self.n == 0:
            return np.zeros(0, dtype=int)
        tol = DEGENERACY_TOL * max(self.spectral_radius, 1.0)
        gaps = np.diff(self.energies)
        return np.concatenate(([0], np.nonzero(gaps > tol)[0] + 1))

    def rescaled(self, factor: float) -> 'EigenSystem':
        """Same eigenvectors with every energy multiplied by `factor`."""
        return EigenSystem(self.energies * factor, self.vectors, self.degenerate, self.blocks, self.ensemble)


def _decoupled(h: Hamiltonian) -> bool:
    return h.blocks is not None and not np.any(h.coupling_block())


def _solve_blocks(h: Hamiltonian):
    # exactly block-diagonal input: solve each block on its own so eigenvectors
    # carry exact zeros outside their block
    na = h.blocks.n_alpha
    ea, va = np.linalg.eigh(h.entries[:na, :na])
    eb, vb = np.linalg.eigh(h.entries[na:, na:])
    energies = np.concatenate((ea, eb))
    vectors = np.zeros((h.n, h.n), dtype=h.entries.dtype)
    vectors[:na, :na] = va
    vectors[na:, na:] = vb
    order = np.argsort(energies, kind='stable')
    return energies[order], vectors[:, order]


def eigensolve(h: Hamiltonian, verify: bool = True) -> EigenSystem:
    """
    Diagonalizes a symmetric or Hermitian Hamiltonian.

    Args:
        h: The Hamiltonian.
        verify: Check orthonormality and reconstruction against their tolerances.

    Returns:
        EigenSystem with ascending energies.

    Raises:
        SolverError: If LAPACK fails or the result misses a tolerance; the
            exception carries the offending residual.
    """
    try:
        if _decoupled(h):
            log.debug('eigensolve: coupling block is zero, solving blocks separately')
            energies, vectors = _solve_blocks(h)
        else:
            energies, vectors = np.linalg.eigh(h.entries)
    except np.linalg.LinAlgError as e:
        raise SolverError(f"eigendecomposition did not converge: {e}") from e

    radius = float(np.max(np.abs(energies))) if energies.size else 0.0
    if verify:
        gram = vectors.conj().T @ vectors
        gram[np.diag_indices_from(gram)] -= 1.0
        orth = float(np.max(np.abs(gram)))
        if orth > ORTHONORMALITY_TOL:
            raise SolverError(f"eigenvectors not orthonormal (residual {orth:.3e})", residual=orth)
        recon = float(np.max(np.abs((vectors * energies) @ vectors.conj().T - h.entries)))
        if recon > RECONSTRUCTION_TOL * max(radius, 1.0):
            raise SolverError(f"reconstruction residual {recon:.3e} too large", residual=recon)
        log.debug('eigensolve n=%d orth=%.2e recon=%.2e', h.n, orth, recon)

    es = EigenSystem(energies, vectors, False, h.blocks, h.ensemble)
    degenerate = len(es.cluster_starts()) < es.n
    if degenerate:
        log.warning('eigensolve: %d degenerate level groups detected', es.n - len(es.cluster_starts()))
        es = EigenSystem(energies, vectors, True, h.blocks, h.ensemble)
    return es


__all__ = ['EigenSystem', 'eigensolve']
