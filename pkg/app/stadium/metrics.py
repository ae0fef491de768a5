import logging

import numpy as np
from scipy import stats

from app.stadium.propagator import DensityGrid, Snapshot
from app.utils.errors import DomainError, InsufficientDataError

log = logging.getLogger(__name__)

QUADRANTS = {
    'upper-right': (1.0, 1.0),
    'upper-left': (-1.0, 1.0),
    'lower-left': (-1.0, -1.0),
    'lower-right': (1.0, -1.0),
}


def _check_symmetric_axes(dg: DensityGrid):
    if not (np.allclose(dg.x, -dg.x[::-1]) and np.allclose(dg.y, -dg.y[::-1])):
        raise DomainError("reflection metrics need a grid symmetric about the origin")


def symmetry_error(dg: DensityGrid) -> float:
    """
    Mass-normalized L1 distance between a density and its average over the
    reflection group {1, x -> -x, y -> -y, both}.
    """
    _check_symmetric_axes(dg)
    v = np.asarray(dg.values, dtype=float)
    total = float(np.sum(np.abs(v)))
    if total == 0.0:
        return 0.0
    symmetrized = 0.25 * (v + v[::-1, :] + v[:, ::-1] + v[::-1, ::-1])
    return float(np.sum(np.abs(v - symmetrized)) / total)


def contrast(dg: DensityGrid) -> float:
    """Coefficient of variation std/mean of the density over the masked cells."""
    inside = np.asarray(dg.values)[dg.mask]
    if inside.size == 0:
        raise InsufficientDataError("density has no cells inside the mask")
    mean = float(np.mean(inside))
    if mean == 0.0:
        raise InsufficientDataError("density vanishes inside the mask")
    return float(np.std(inside) / mean)


def density_distance(first: DensityGrid, second: DensityGrid) -> float:
    """L1 distance sum |p - q| dA of two unit-mass densities on the same grid, in [0, 2]."""
    if first.shape != second.shape:
        raise DomainError(f"density grids differ in shape: {first.shape} vs {second.shape}")
    return float(np.sum(np.abs(first.values - second.values)) * first.cell_area)


def snapshot_correlation(snapshot: Snapshot, dg: DensityGrid, quadrant: str = 'upper-right') -> float:
    """
    Pearson correlation between (Re psi)^2 of an early snapshot and the
    long-time density over the masked cells of one quadrant.
    """
    try:
        sx, sy = QUADRANTS[quadrant]
    except KeyError:
        raise DomainError(f"unknown quadrant '{quadrant}', expected one of {sorted(QUADRANTS)}") from None
    X, Y = np.meshgrid(dg.x, dg.y, indexing='ij')
    cells = dg.mask & (sx * X > 0) & (sy * Y > 0)
    early = np.asarray(snapshot.real_part)[cells] ** 2
    late = np.asarray(dg.values)[cells]
    if early.size < 3 or np.ptp(early) == 0.0 or np.ptp(late) == 0.0:
        raise InsufficientDataError(f"quadrant '{quadrant}' holds too little structure to correlate")
    r = stats.pearsonr(early, late)[0]
    log.debug('snapshot_correlation t=%.4g quadrant=%s r=%.4f', snapshot.time, quadrant, r)
    return float(r)


__all__ = ['symmetry_error', 'contrast', 'density_distance', 'snapshot_correlation', 'QUADRANTS']
