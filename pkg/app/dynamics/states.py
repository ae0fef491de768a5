from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from app.utils.errors import InvalidStateError

NORM_TOL = 1e-10


@dataclass(frozen=True)
class StateVector:
    """Normalized amplitudes over the site basis."""
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1:
            raise InvalidStateError(f"state must be one-dimensional, got shape {amps.shape}")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state is not normalized (norm {norm:.12f})")
        amps.flags.writeable = False
        object.__setattr__(self, 'amplitudes', amps)

    @property
    def n(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def basis(cls, n: int, site: int) -> 'StateVector':
        if not 0 <= site < n:
            raise InvalidStateError(f"site {site} outside [0, {n})")
        amps = np.zeros(n, dtype=complex)
        amps[site] = 1.0
        return cls(amps)

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex]) -> 'StateVector':
        """Normalizes arbitrary non-zero amplitudes into a state."""
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.sqrt(np.sum(np.abs(amps) ** 2))
        if norm == 0.0:
            raise InvalidStateError("cannot normalize the zero vector")
        return cls(amps / norm)

    @classmethod
    def uniform(cls, n: int) -> 'StateVector':
        return cls(np.full(n, 1.0 / np.sqrt(n), dtype=complex))


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError(f"times {times.shape} and values {values.shape} must be equal-length vectors")
        if times.size > 1 and np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return self.times.size

    def running_average(self) -> 'TimeSeries':
        """Time-weighted running mean (1/t) * integral of the series, trapezoidal."""
        if len(self) < 2:
            return self
        dt = np.diff(self.times)
        area = np.concatenate(([0.0], np.cumsum(0.5 * dt * (self.values[1:] + self.values[:-1]))))
        span = self.times - self.times[0]
        avg = np.empty_like(self.values)
        avg[0] = self.values[0]
        avg[1:] = area[1:] / span[1:]
        return TimeSeries(self.times, avg)


StateLike = Union[StateVector, np.ndarray]


def as_amplitudes(state: StateLike) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.amplitudes
    return StateVector(np.asarray(state)).amplitudes


__all__ = ['StateVector', 'TimeSeries', 'as_amplitudes', 'NORM_TOL']
