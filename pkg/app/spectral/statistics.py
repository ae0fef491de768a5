"""
Spectral characterization of sampled Hamiltonians.

Functions:
- `density_of_states(es, bins)` -> normalized histogram over energy
- `staircase(es)` -> integrated level count N(E)
- `semicircle_density(e, n)`, `semicircle_deviation(energies, n, bins)` -> semicircle-law oracle
- `level_spacings(es, discard_fraction)` -> unfolded nearest-neighbour spacings
- `ks_distance(series, law)` -> Kolmogorov-Smirnov distance to the Wigner surmise or Poisson law
- `in_out_ratio(es, n_alpha)`, `mixing_fraction(es, n_alpha)` -> block localization of eigenstates
- `heisenberg_time(es, window)`, `bulk_window(es, fraction)` -> 2*pi over the mean level spacing
"""
from dataclasses import dataclass
from typing import Literal, Optional, Tuple, Union
import logging

import numpy as np
from numpy.polynomial import Polynomial
from scipy import stats

from app.spectral.eigen import EigenSystem
from app.utils.errors import InsufficientDataError, InvalidDimensionError

log = logging.getLogger(__name__)

UNFOLDING_DEGREE = 7
DEFAULT_DISCARD_FRACTION = 0.05
MIN_SPACING_LEVELS = 50

Levels = Union[EigenSystem, np.ndarray]


@dataclass(frozen=True)
class Histogram:
    centers: np.ndarray
    density: np.ndarray
    widths: np.ndarray

    @property
    def masses(self) -> np.ndarray:
        return self.density * self.widths


@dataclass(frozen=True)
class SpacingSeries:
    values: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


def _levels(source: Levels) -> np.ndarray:
    if isinstance(source, EigenSystem):
        return np.asarray(source.energies)
    return np.sort(np.asarray(source, dtype=float))


def density_of_states(es: Levels, bins: int = 50) -> Histogram:
    """Histogram of the levels normalized so that it integrates to one."""
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    energies = _levels(es)
    density, edges = np.histogram(energies, bins=bins, density=True)
    return Histogram(0.5 * (edges[:-1] + edges[1:]), density, np.diff(edges))


def staircase(es: Levels) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (energies, N(E)) with N counting levels up to and including E."""
    energies = _levels(es)
    return energies, np.arange(1, energies.size + 1)


def semicircle_density(e: np.ndarray, n: int) -> np.ndarray:
    """Unit-mass semicircle law of radius 2*sqrt(n) evaluated at energies `e`."""
    r2 = 4.0 * n
    e = np.asarray(e, dtype=float)
    return np.sqrt(np.clip(r2 - e ** 2, 0.0, None)) / (2.0 * np.pi * n)


def _semicircle_cdf(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, -1.0, 1.0)
    return 0.5 + (x * np.sqrt(1.0 - x ** 2) + np.arcsin(x)) / np.pi


def semicircle_deviation(energies: np.ndarray, n: int, bins: int = 50) -> float:
    """
    Sup-norm distance between the level histogram and the semicircle law.

    Energies are scaled by the radius 2*sqrt(n) and binned on [-1, 1]; each bin
    is compared against the bin average of the law (2/pi)*sqrt(1-x^2). Levels
    pooled from several realizations of the same dimension may be passed.
    """
    x = np.asarray(energies, dtype=float).ravel() / (2.0 * np.sqrt(n))
    edges = np.linspace(-1.0, 1.0, bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    width = edges[1] - edges[0]
    empirical = counts / (x.size * width)
    expected = np.diff(_semicircle_cdf(edges)) / width
    return float(np.max(np.abs(empirical - expected)))


def level_spacings(es: Levels, discard_fraction: float = DEFAULT_DISCARD_FRACTION,
                   degree: int = UNFOLDING_DEGREE) -> SpacingSeries:
    """
    Unfolded nearest-neighbour spacings of the bulk spectrum.

    The spectrum is trimmed by `discard_fraction` on each side, the staircase
    of the retained levels is fitted with a polynomial of degree `degree`, and
    the spacings of the fitted staircase are scaled to unit mean.

    Raises:
        InsufficientDataError: If fewer than 50 levels survive the trim.
    """
    if not 0.0 <= discard_fraction < 0.5:
        raise ValueError(f"discard_fraction must lie in [0, 0.5), got {discard_fraction}")
    energies = _levels(es)
    cut = int(np.floor(energies.size * discard_fraction))
    bulk = energies[cut:energies.size - cut]
    if bulk.size < MIN_SPACING_LEVELS:
        raise InsufficientDataError(
            f"{bulk.size} levels left after trimming, need at least {MIN_SPACING_LEVELS}"
        )
    counts = np.arange(cut + 1, cut + bulk.size + 1, dtype=float)
    fit = Polynomial.fit(bulk, counts, deg=min(degree, bulk.size - 1))
    spacings = np.diff(fit(bulk))
    spacings = spacings / np.mean(spacings)
    log.debug('level_spacings kept=%d mean=%.6f', bulk.size, float(np.mean(spacings)))
    return SpacingSeries(spacings)


def wigner_surmise_cdf(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return 1.0 - np.exp(-np.pi * s ** 2 / 4.0)


def poisson_cdf(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return 1.0 - np.exp(-np.clip(s, 0.0, None))


def ks_distance(series: SpacingSeries, law: Literal['wigner', 'poisson'] = 'wigner') -> float:
    cdf = wigner_surmise_cdf if law == 'wigner' else poisson_cdf
    return float(stats.kstest(series.values, cdf).statistic)


def _check_alpha(es: EigenSystem, n_alpha: Optional[int]) -> int:
    if n_alpha is None:
        if es.blocks is None:
            raise InvalidDimensionError("n_alpha is required when the eigensystem has no block layout")
        n_alpha = es.blocks.n_alpha
    if not 1 <= n_alpha < es.n:
        raise InvalidDimensionError(f"n_alpha must lie in [1, {es.n - 1}], got {n_alpha}")
    return n_alpha


def in_out_ratio(es: EigenSystem, n_alpha: Optional[int] = None) -> np.ndarray:
    """
    Per-eigenstate ratio of the per-site weight inside block alpha to that in beta.

    The ergodic value is 1; an eigenstate with no weight in beta reports +inf.
    """
    n_alpha = _check_alpha(es, n_alpha)
    n_beta = es.n - n_alpha
    weights = np.abs(es.vectors) ** 2
    inside = weights[:n_alpha].sum(axis=0) / n_alpha
    outside = weights[n_alpha:].sum(axis=0) / n_beta
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(outside > 0.0, inside / np.where(outside > 0.0, outside, 1.0), np.inf)
    return ratio


def mixing_fraction(es: EigenSystem, n_alpha: Optional[int] = None, threshold: float = 10.0) -> float:
    """Fraction of eigenstates whose in-out ratio lies within [1/threshold, threshold]."""
    r = in_out_ratio(es, n_alpha)
    return float(np.mean((r >= 1.0 / threshold) & (r <= threshold)))


def bulk_window(es: Levels, fraction: float = 0.5) -> Tuple[float, float]:
    """Energy interval holding the central `fraction` of the levels."""
    energies = _levels(es)
    lo = int(np.floor(energies.size * (1.0 - fraction) / 2.0))
    hi = max(lo + 1, energies.size - 1 - lo)
    hi = min(hi, energies.size - 1)
    return float(energies[lo]), float(energies[hi])


def mean_spacing(es: Levels, window: Optional[Tuple[float, float]] = None) -> float:
    energies = _levels(es)
    if window is None:
        window = bulk_window(energies)
    lo, hi = window
    inside = energies[(energies >= lo) & (energies <= hi)]
    if inside.size < 2:
        raise InsufficientDataError(f"window [{lo}, {hi}] holds {inside.size} levels, need 2")
    span = float(inside[-1] - inside[0])
    if span <= 0.0:
        raise InsufficientDataError(f"levels in window [{lo}, {hi}] are degenerate")
    return span / (inside.size - 1)


def heisenberg_time(es: Levels, window: Optional[Tuple[float, float]] = None) -> float:
    """
    Heisenberg time 2*pi / mean level spacing inside `window` (hbar = 1).

    Args:
        es: Eigensystem or raw levels.
        window: Energy interval; defaults to the central half of the spectrum.

    Raises:
        InsufficientDataError: If the window holds fewer than two distinct levels.
    """
    return 2.0 * np.pi / mean_spacing(es, window)


__all__ = [
    'Histogram',
    'SpacingSeries',
    'density_of_states',
    'staircase',
    'semicircle_density',
    'semicircle_deviation',
    'level_spacings',
    'wigner_surmise_cdf',
    'poisson_cdf',
    'ks_distance',
    'in_out_ratio',
    'mixing_fraction',
    'bulk_window',
    'mean_spacing',
    'heisenberg_time',
]
