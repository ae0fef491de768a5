"""
Birthmark-level quantities built on the diagonal ensemble.

- `rmt_factor` is the universal enhancement of the return probability.
- `qb_prediction` combines the RMT baseline with the ratio of short-time
  integrals of the actual and the reference (plain RMT) cross probabilities.
- `evolved_enhancement` checks that states the initial state evolves into
  carry the same enhancement as the initial state itself.
"""
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence
import logging

import numpy as np
from scipy import integrate

from app.dynamics.evolution import cross_probability, evolve
from app.dynamics.infinite_time import infinite_time_joint
from app.dynamics.states import StateLike, TimeSeries, as_amplitudes
from app.spectral.eigen import EigenSystem
from app.spectral.statistics import mean_spacing
from app.utils.errors import CutoffError, InsufficientDataError

log = logging.getLogger(__name__)

POINTS_PER_PERIOD = 16
MIN_POINTS = 65


class SymmetryClass(str, Enum):
    ORTHOGONAL = 'orthogonal'
    UNITARY = 'unitary'

    @classmethod
    def from_ensemble(cls, ensemble: str) -> 'SymmetryClass':
        return cls.UNITARY if ensemble == 'gue' else cls.ORTHOGONAL


def rmt_factor(sc: SymmetryClass) -> float:
    """3 with time-reversal symmetry, 2 without."""
    return 3.0 if SymmetryClass(sc) is SymmetryClass.ORTHOGONAL else 2.0


@dataclass(frozen=True)
class QbPrediction:
    p_rmt: float
    correction: float
    predicted: float
    tau: float
    thouless_time: float
    thouless_estimate: float
    leakage_time: float
    relaxation_time: float
    heisenberg_time: float
    numerator: float
    denominator: float

    def to_dict(self) -> dict:
        return asdict(self)


def leakage_time(es: EigenSystem) -> float:
    """
    Inverse golden-rule leakage rate out of block alpha.

    2*lambda^2*sqrt(N_beta) for scaled coupling, 2*N_c^2/(N_alpha*sqrt(N_beta))
    for a connection corner; inf without a block layout.
    """
    blocks = es.blocks
    if blocks is not None and blocks.coupling_scale is not None:
        rate = 2.0 * blocks.coupling_scale ** 2 * np.sqrt(blocks.n_beta)
    elif blocks is not None and blocks.connection_width is not None:
        rate = 2.0 * blocks.connection_width ** 2 / (blocks.n_alpha * np.sqrt(blocks.n_beta))
    else:
        return float('inf')
    return 1.0 / rate if rate > 0 else float('inf')


def relaxation_time(es: EigenSystem) -> float:
    """
    2*pi over the bandwidth seen from the initial block.

    Without blocks the bandwidth is E_max - E_min. With blocks it is the
    semicircle width 4*sigma, sigma^2 being the local energy variance
    <a|H^2|a> - <a|H|a>^2 averaged over the sites of alpha.
    """
    if es.blocks is None:
        bandwidth = float(es.energies[-1] - es.energies[0]) if es.n > 1 else 0.0
    else:
        weights = np.abs(es.vectors[:es.blocks.n_alpha, :]) ** 2
        first = weights @ es.energies
        second = weights @ es.energies ** 2
        variance = float(np.mean(np.clip(second - first ** 2, 0.0, None)))
        bandwidth = 4.0 * np.sqrt(variance)
    return 2.0 * np.pi / bandwidth if bandwidth > 0 else float('inf')


def thouless_estimate(es: EigenSystem) -> float:
    """
    Lower bound for the short-time cutoff.

    The leakage time when it lies below the Heisenberg time, otherwise the
    relaxation time inside the initial block.
    """
    leak = leakage_time(es)
    if np.isfinite(leak) and leak < 2.0 * np.pi / mean_spacing(es):
        return leak
    return relaxation_time(es)


def _short_time_integral(es: EigenSystem, a: np.ndarray, b: np.ndarray, tau: float) -> float:
    bandwidth = float(es.energies[-1] - es.energies[0]) if es.n > 1 else 0.0
    points = max(MIN_POINTS, int(np.ceil(POINTS_PER_PERIOD * tau * bandwidth / (2.0 * np.pi))) + 1)
    if points % 2 == 0:
        points += 1
    real = not np.iscomplexobj(es.vectors) and not np.any(np.imag(a)) and not np.any(np.imag(b))
    if real:
        # |<b|a(t)>|^2 is even in t for real Hamiltonians and real states
        t = np.linspace(0.0, tau, points)
        return 2.0 * integrate.simpson(cross_probability(es, a, b, t).values, x=t)
    t = np.linspace(-tau, tau, 2 * points - 1)
    return integrate.simpson(cross_probability(es, a, b, t).values, x=t)


def qb_prediction(es: EigenSystem, a: StateLike, b: StateLike, tau: float,
                  reference: Sequence[EigenSystem],
                  thouless_time: Optional[float] = None) -> QbPrediction:
    """
    Short-time corrected prediction of the joint probability P^{ab}.

    Args:
        es: Eigensystem of the system under study.
        a: Initial state.
        b: Target state.
        tau: Cutoff time, strictly between the Thouless and Heisenberg times.
        reference: Plain-RMT eigensystems of the same dimension. Their spectra
            are rescaled to the system's bulk mean level spacing before the
            short-time integral is taken.
        thouless_time: Overrides `thouless_estimate` as the lower bound.

    Returns:
        QbPrediction with predicted = p_rmt * numerator / denominator.

    Raises:
        InsufficientDataError: If the reference ensemble is empty.
        CutoffError: If tau is outside the admissible window or the reference
            integral vanishes.
    """
    if not reference:
        raise InsufficientDataError("reference ensemble is empty")
    a_amps = as_amplitudes(a)
    b_amps = as_amplitudes(b)

    spacing = mean_spacing(es)
    t_heisenberg = 2.0 * np.pi / spacing
    estimate = thouless_estimate(es)
    t_thouless = estimate if thouless_time is None else float(thouless_time)
    if not t_thouless < tau < t_heisenberg:
        raise CutoffError(
            f"cutoff {tau:.4g} outside the admissible window ({t_thouless:.4g}, {t_heisenberg:.4g})"
        )

    numerator = _short_time_integral(es, a_amps, b_amps, tau)
    denominators = []
    baselines = []
    for ref in reference:
        matched = ref.rescaled(spacing / mean_spacing(ref))
        denominators.append(_short_time_integral(matched, a_amps, b_amps, tau))
        baselines.append(infinite_time_joint(ref, a_amps, b_amps))
    denominator = float(np.mean(denominators))
    p_rmt = float(np.mean(baselines))
    if not denominator > 1e-300:
        raise CutoffError("reference short-time integral vanishes; the correction is indeterminate")
    correction = numerator / denominator
    if not correction > 0.0:
        raise CutoffError("short-time integral of the system vanishes; the correction is indeterminate")
    log.info('qb_prediction tau=%.4g t_Th=%.4g t_H=%.4g correction=%.4g', tau, t_thouless, t_heisenberg, correction)
    return QbPrediction(
        p_rmt=p_rmt,
        correction=float(correction),
        predicted=p_rmt * float(correction),
        tau=float(tau),
        thouless_time=float(t_thouless),
        thouless_estimate=float(estimate),
        leakage_time=float(leakage_time(es)),
        relaxation_time=float(relaxation_time(es)),
        heisenberg_time=float(t_heisenberg),
        numerator=float(numerator),
        denominator=denominator,
    )


def evolved_enhancement(es: EigenSystem, a: StateLike, times: Iterable[float]) -> TimeSeries:
    """N * P^{a, a(t)}: infinite-time enhancement of the states a evolves into."""
    t = np.atleast_1d(np.asarray(list(times), dtype=float))
    values = [infinite_time_joint(es, a, evolve(es, a, float(x))) for x in t]
    return TimeSeries(t, np.asarray(values))


__all__ = [
    'SymmetryClass',
    'rmt_factor',
    'QbPrediction',
    'leakage_time',
    'relaxation_time',
    'thouless_estimate',
    'qb_prediction',
    'evolved_enhancement',
]
