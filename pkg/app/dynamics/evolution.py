"""
Time evolution in the eigenbasis.

All routines expand the initial state once, c_n = <phi_n|a0>, and attach the
phases exp(-i E_n t); nothing here integrates the Schroedinger equation
step by step.
"""
from typing import Iterable
import logging

import numpy as np

from app.dynamics.states import StateLike, StateVector, TimeSeries, as_amplitudes
from app.spectral.eigen import EigenSystem
from app.utils.errors import InvalidStateError

log = logging.getLogger(__name__)

# complex entries held in one phase block
_BLOCK_ENTRIES = 4_000_000


def _times(times: Iterable[float]) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.ndim != 1:
        raise ValueError("times must be one-dimensional")
    return t


def spectral_sum(weights: np.ndarray, energies: np.ndarray, times: np.ndarray) -> np.ndarray:
    """sum_n weights_n * exp(-i E_n t) for every t, in bounded-memory blocks."""
    out = np.empty(times.size, dtype=complex)
    rows = max(1, _BLOCK_ENTRIES // max(energies.size, 1))
    for start in range(0, times.size, rows):
        t = times[start:start + rows]
        out[start:start + rows] = np.exp(-1j * np.outer(t, energies)) @ weights
    return out


def evolve(es: EigenSystem, a0: StateLike, t: float) -> StateVector:
    """
    Evolves `a0` to time `t` under the diagonalized Hamiltonian.

    Returns:
        The evolved state; `a0` itself when t == 0.

    Raises:
        InvalidStateError: On dimension mismatch.
    """
    amps = as_amplitudes(a0)
    if amps.shape[0] != es.n:
        raise InvalidStateError(f"state dimension {amps.shape[0]} does not match {es.n}")
    if t == 0:
        return a0 if isinstance(a0, StateVector) else StateVector(amps)
    c = es.coefficients(amps)
    return StateVector(es.vectors @ (np.exp(-1j * es.energies * t) * c))


def survival_probability(es: EigenSystem, a0: StateLike, times: Iterable[float]) -> TimeSeries:
    """P(t) = |<a0|a(t)>|^2 on the given time grid."""
    t = _times(times)
    c = es.coefficients(as_amplitudes(a0))
    amp = spectral_sum(np.abs(c) ** 2 + 0j, es.energies, t)
    return TimeSeries(t, np.clip(np.abs(amp) ** 2, 0.0, 1.0))


def cross_probability(es: EigenSystem, a0: StateLike, b: StateLike, times: Iterable[float]) -> TimeSeries:
    """P^{ab}(t) = |<b|a(t)>|^2 on the given time grid."""
    t = _times(times)
    c = es.coefficients(as_amplitudes(a0))
    d = es.coefficients(as_amplitudes(b))
    amp = spectral_sum(np.conj(d) * c, es.energies, t)
    return TimeSeries(t, np.clip(np.abs(amp) ** 2, 0.0, 1.0))


def participation_ratio_series(es: EigenSystem, a0: StateLike, times: Iterable[float]) -> TimeSeries:
    """1/IPR of the evolved state a(t) in the site basis."""
    t = _times(times)
    c = es.coefficients(as_amplitudes(a0))
    values = np.empty(t.size)
    cols = max(1, _BLOCK_ENTRIES // max(es.n, 1))
    for start in range(0, t.size, cols):
        block = t[start:start + cols]
        states = es.vectors @ (c[:, None] * np.exp(-1j * np.outer(es.energies, block)))
        probs = np.abs(states) ** 2
        values[start:start + cols] = 1.0 / np.sum(probs ** 2, axis=0)
    log.debug('participation_ratio_series n=%d points=%d', es.n, t.size)
    return TimeSeries(t, values)


__all__ = ['evolve', 'survival_probability', 'cross_probability', 'participation_ratio_series', 'spectral_sum']
