"""
Localization measures: IPR, time-averaged site densities and the
participation number N(t).

Three routes to N(t) are provided:

- `participation_number_direct`: 1/N = sum_i rho_i(t)^2 with the site
  densities rho_i(t) = (1/t) int_0^t |<a(tau)|b_i>|^2 dtau in closed form.
- `participation_number_integral`: 1/N = (2/t) int_0^t (1 - tau/t) P(tau) dtau,
  Simpson quadrature over the survival probability.
- `participation_number_purity`: the same kernel integral evaluated in the
  eigenbasis, 1/N = sum_{n,m} p_n p_m sinc^2((E_n - E_m) t / 2 pi).

The kernel integral is the purity of the time-averaged density matrix, so
the direct route only matches it when that matrix is diagonal in the site
basis; in general N_direct >= N_integral = N_purity.
"""
import logging

import numpy as np
from scipy import integrate

from app.dynamics.evolution import spectral_sum
from app.dynamics.states import StateLike, as_amplitudes
from app.spectral.eigen import EigenSystem

log = logging.getLogger(__name__)

POINTS_PER_PERIOD = 32


def _positive(t: float) -> float:
    if not t > 0:
        raise ValueError(f"averaging time must be positive, got {t}")
    return float(t)


def ipr(state: StateLike) -> float:
    """Inverse participation ratio sum_i |<state|b_i>|^4, in [1/N, 1]."""
    probs = np.abs(as_amplitudes(state)) ** 2
    return float(np.sum(probs ** 2))


def _sinc_matrix(energies: np.ndarray, t: float) -> np.ndarray:
    return np.sinc(np.subtract.outer(energies, energies) * t / (2.0 * np.pi))


def rho_av(es: EigenSystem, a0: StateLike, t: float) -> np.ndarray:
    """
    Time-averaged site densities over [0, t].

    The oscillating cross terms integrate to exp(-i D t / 2) * sinc(D t / 2 pi)
    with D = E_n - E_m, so the average is exact for any t > 0.
    """
    t = _positive(t)
    c = es.coefficients(as_amplitudes(a0))
    keep = np.abs(c) > 0.0
    energies = es.energies[keep]
    amps = es.vectors[:, keep] * (c[keep] * np.exp(-0.5j * energies * t))[None, :]
    smoothed = np.conj(amps) @ _sinc_matrix(energies, t)
    rho = np.real(np.sum(amps * smoothed, axis=1))
    return np.clip(rho, 0.0, None)


def participation_number_direct(es: EigenSystem, a0: StateLike, t: float) -> float:
    rho = rho_av(es, a0, t)
    return float(1.0 / np.sum(rho ** 2))


def participation_number_purity(es: EigenSystem, a0: StateLike, t: float) -> float:
    t = _positive(t)
    c = es.coefficients(as_amplitudes(a0))
    keep = np.abs(c) > 0.0
    p = np.abs(c[keep]) ** 2
    kernel = _sinc_matrix(es.energies[keep], t) ** 2
    return float(1.0 / (p @ kernel @ p))


def participation_number_integral(es: EigenSystem, a0: StateLike, t: float,
                                  points_per_period: int = POINTS_PER_PERIOD) -> float:
    """
    N(t) from the survival-probability kernel integral.

    Composite Simpson rule on a uniform grid with at least `points_per_period`
    points per shortest oscillation period 2*pi / (E_max - E_min), the energy
    range taken over eigenstates the initial state overlaps.
    """
    t = _positive(t)
    c = es.coefficients(as_amplitudes(a0))
    keep = np.abs(c) > 0.0
    energies = es.energies[keep]
    weights = np.abs(c[keep]) ** 2 + 0j
    bandwidth = float(energies[-1] - energies[0]) if energies.size > 1 else 0.0
    intervals = max(2, int(np.ceil(points_per_period * t * bandwidth / (2.0 * np.pi))))
    intervals += intervals % 2
    tau = np.linspace(0.0, t, intervals + 1)
    survival = np.abs(spectral_sum(weights, energies, tau)) ** 2
    integral = integrate.simpson((1.0 - tau / t) * survival, x=tau)
    log.debug('participation_number_integral t=%.4g intervals=%d', t, intervals)
    return float(t / (2.0 * integral))


__all__ = [
    'ipr',
    'rho_av',
    'participation_number_direct',
    'participation_number_purity',
    'participation_number_integral',
]
