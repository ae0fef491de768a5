"""
Split-operator propagation in the stadium and accumulation of the long-time density.

Natural units: hbar = 1, m = 1. One step is

    psi -> exp(-i V dt/2) psi
    psi -> IFFT[ exp(-i k^2 dt/2) FFT[psi] ]
    psi -> exp(-i V dt/2) psi

which is unitary on the grid, so the norm only drifts by round-off.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import time

import numpy as np

from app.dynamics.states import TimeSeries
from app.stadium.geometry import Domain, GridSpec, StadiumSpec, build_domain
from app.stadium.wavepacket import WavepacketSpec, init_wavepacket
from app.utils.errors import PropagationError

log = logging.getLogger(__name__)

PROGRESS_CHUNKS = 10
LEAKAGE_LIMIT = 1e-3


class SplitOperator:
    """Precomputed half-potential and kinetic phases for a fixed domain and step."""

    def __init__(self, domain: Domain, dt: float):
        if not dt > 0:
            raise ValueError(f"time step must be positive, got {dt}")
        self.domain = domain
        self.dt = float(dt)
        KX, KY = domain.wavenumbers()
        self._half_potential = np.exp(-0.5j * domain.potential * self.dt)
        self._kinetic = np.exp(-0.5j * (KX ** 2 + KY ** 2) * self.dt)

    def step(self, psi: np.ndarray, index: Optional[int] = None) -> np.ndarray:
        psi = self._half_potential * psi
        psi = np.fft.ifft2(self._kinetic * np.fft.fft2(psi))
        psi = self._half_potential * psi
        if not np.all(np.isfinite(psi)):
            raise PropagationError(
                f"non-finite amplitudes after a step of dt={self.dt:.4g}; "
                f"lower dt or the wall height", step=index,
            )
        return psi

    def norm(self, psi: np.ndarray) -> float:
        return float(np.sum(np.abs(psi) ** 2) * self.domain.cell_area)


def step(psi: np.ndarray, domain: Domain, dt: float) -> np.ndarray:
    """One symmetric split-operator step."""
    return SplitOperator(domain, dt).step(psi)


@dataclass(frozen=True)
class DensityGrid:
    values: np.ndarray
    mask: np.ndarray
    window: Tuple[float, float]
    x: np.ndarray
    y: np.ndarray
    cell_area: float

    @property
    def mass(self) -> float:
        return float(np.sum(self.values) * self.cell_area)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @classmethod
    def from_accumulator(cls, accumulated: np.ndarray, domain: Domain,
                         window: Tuple[float, float]) -> 'DensityGrid':
        """Restricts an accumulated |psi|^2 to the mask and renormalizes it to unit mass."""
        values = np.where(domain.mask, accumulated, 0.0)
        total = np.sum(values) * domain.cell_area
        if not total > 0:
            raise PropagationError("accumulated density carries no mass inside the stadium")
        values = values / total
        values.setflags(write=False)
        return cls(values, domain.mask, (float(window[0]), float(window[1])), domain.x, domain.y,
                   domain.cell_area)


@dataclass(frozen=True)
class Snapshot:
    time: float
    real_part: np.ndarray


@dataclass
class PropagationResult:
    density: DensityGrid
    density_full: DensityGrid
    inverse_ipr: TimeSeries
    participation: TimeSeries
    leakage: TimeSeries
    norm_drift: float
    steps: int
    dt: float
    domain: Domain
    snapshots: List[Snapshot] = field(default_factory=list)
    checkpoints: Dict[float, DensityGrid] = field(default_factory=dict)

    @property
    def max_leakage(self) -> float:
        return float(np.max(self.leakage.values))


def _time_marks(requested: Sequence[float], dt: float, n_steps: int) -> Dict[int, float]:
    """Maps each requested time to the first step index at or after it."""
    marks = {}
    for t in sorted(set(float(x) for x in requested)):
        index = int(np.ceil(t / dt - 1e-9))
        if 0 <= index <= n_steps:
            marks[index] = t
        else:
            log.warning('requested time %.4g is outside the propagation window, skipped', t)
    return marks


def propagate_and_accumulate(ws: WavepacketSpec, ss: StadiumSpec, gs: GridSpec, t_total: float,
                             t_exclude: float = 0.0, snapshot_times: Sequence[float] = (),
                             checkpoints: Sequence[float] = (),
                             record_every: int = 1) -> PropagationResult:
    """
    Propagates a wavepacket in the stadium and time-averages its density.

    Every step is sampled. The state at step j sits at t = j * dt, j = 0..n_steps
    with n_steps = round(t_total / dt).

    Args:
        ws: Initial wavepacket.
        ss: Stadium geometry.
        gs: Grid and time step.
        t_total: End of the propagation.
        t_exclude: Start of the averaging window for `density`; `density_full`
            always starts at 0.
        snapshot_times: Times at which the real part of psi is stored.
        checkpoints: Times at which a copy of the exclusion-window density is stored.
        record_every: Stride of the 1/IPR, N(t) and leakage series.

    Returns:
        PropagationResult with both densities, the series, snapshots and checkpoints.

    Raises:
        ValueError: If the time window is empty.
        DomainError: If the geometry or the wavepacket is invalid.
        PropagationError: If the field becomes non-finite.
    """
    if not 0.0 <= t_exclude < t_total:
        raise ValueError(f"need 0 <= t_exclude < t_total, got t_exclude={t_exclude}, t_total={t_total}")
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")

    domain = build_domain(ss, gs, sigma=ws.width, kinetic_energy=ws.mean_kinetic_energy)
    psi = init_wavepacket(ws, domain)
    dt = gs.step
    n_steps = max(1, int(round(t_total / dt)))
    first_kept = int(np.ceil(t_exclude / dt - 1e-9))
    dA = domain.cell_area
    inside = domain.mask
    propagator = SplitOperator(domain, dt)
    norm0 = propagator.norm(psi)

    snapshot_marks = _time_marks(snapshot_times, dt, n_steps)
    checkpoint_marks = {k: t for k, t in _time_marks(checkpoints, dt, n_steps).items() if k >= first_kept}

    acc_full = np.zeros(domain.shape)
    acc_window = np.zeros(domain.shape)
    n_window = 0
    times, inv_ipr, participation, leakage = [], [], [], []
    snapshots: List[Snapshot] = []
    saved: Dict[float, DensityGrid] = {}

    log.info('propagate_and_accumulate grid=%dx%d dt=%.4g steps=%d window=[%.4g, %.4g]',
             gs.nx, gs.ny, dt, n_steps, t_exclude, t_total)
    started = time.perf_counter()
    progress_every = max(1, n_steps // PROGRESS_CHUNKS)

    for j in range(n_steps + 1):
        if j > 0:
            psi = propagator.step(psi, index=j)
        density = np.abs(psi) ** 2
        acc_full += density
        if j >= first_kept:
            acc_window += density
            n_window += 1

        if j % record_every == 0 or j == n_steps:
            cells = density[inside] * dA
            mean_cells = acc_full[inside] * dA / (j + 1)
            times.append(j * dt)
            inv_ipr.append(1.0 / np.sum(cells ** 2))
            participation.append(1.0 / np.sum(mean_cells ** 2))
            leakage.append(float(np.sum(density[~inside]) * dA))

        if j in snapshot_marks:
            snapshot = psi.real.copy()
            snapshot.setflags(write=False)
            snapshots.append(Snapshot(j * dt, snapshot))
        if j in checkpoint_marks:
            saved[checkpoint_marks[j]] = DensityGrid.from_accumulator(acc_window, domain, (t_exclude, j * dt))
        if j and j % progress_every == 0:
            log.debug('step %d/%d elapsed=%.1fs', j, n_steps, time.perf_counter() - started)

    drift = abs(propagator.norm(psi) - norm0)
    result = PropagationResult(
        density=DensityGrid.from_accumulator(acc_window, domain, (t_exclude, n_steps * dt)),
        density_full=DensityGrid.from_accumulator(acc_full, domain, (0.0, n_steps * dt)),
        inverse_ipr=TimeSeries(np.asarray(times), np.asarray(inv_ipr)),
        participation=TimeSeries(np.asarray(times), np.asarray(participation)),
        leakage=TimeSeries(np.asarray(times), np.asarray(leakage)),
        norm_drift=float(drift),
        steps=n_steps,
        dt=dt,
        domain=domain,
        snapshots=snapshots,
        checkpoints=saved,
    )
    if result.max_leakage > LEAKAGE_LIMIT:
        log.warning('mass outside the stadium reached %.3g; raise the wall height or refine the grid',
                    result.max_leakage)
    log.info('propagation done in %.1fs, %d samples averaged, norm drift %.3g',
             time.perf_counter() - started, n_window, drift)
    return result


__all__ = [
    'SplitOperator',
    'step',
    'DensityGrid',
    'Snapshot',
    'PropagationResult',
    'propagate_and_accumulate',
]
