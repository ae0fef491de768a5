"""
Experiment kinds.

Each kind turns a validated config into independent work items, runs one
item at a time (`realize`) and reduces the finished items (`reduce`). Work
items are realization stream ids for the random-matrix kinds and launch
indices for the stadium. Nothing in `realize` depends on the other items, so
the service may run them in any order and on any number of workers.
"""
from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, List, Optional, Tuple, Type
import logging

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.birthmark.enhancement import SymmetryClass, evolved_enhancement, qb_prediction, rmt_factor
from app.birthmark.saturation import detect_saturation
from app.dynamics.evolution import participation_ratio_series
from app.dynamics.infinite_time import infinite_time_joint, infinite_time_profile
from app.dynamics.localization import participation_number_direct, participation_number_purity
from app.dynamics.states import StateVector, TimeSeries
from app.rmt.ensembles import Hamiltonian, sample
from app.rmt.models import build_model_a, build_model_b
from app.rmt.streams import RandomStream
from app.schemas.config import ExperimentConfig
from app.services.aggregation import EnsembleAverage, ensemble_average
from app.spectral.eigen import eigensolve
from app.spectral import statistics as spectral
from app.stadium.geometry import GridSpec, StadiumSpec, UnitSystem, build_domain
from app.stadium.metrics import contrast, density_distance, snapshot_correlation, symmetry_error
from app.stadium.propagator import propagate_and_accumulate
from app.stadium.wavepacket import canonical_launches, check_resolution
from app.utils.errors import ConfigError, DomainError, InsufficientDataError

log = logging.getLogger(__name__)

PAIR_TAG = 1
REFERENCE_TAG = 1000


@dataclass
class Realization:
    item: int
    label: str
    scalars: Dict[str, float] = field(default_factory=dict)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    grids: Dict[str, Any] = field(default_factory=dict)
    matrices: Dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class Reduction:
    summary: Dict[str, Any] = field(default_factory=dict)
    statistics: Dict[str, EnsembleAverage] = field(default_factory=dict)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)


def _nan_if_none(value: Optional[float]) -> float:
    return float('nan') if value is None else float(value)


def build_hamiltonian(model: str, params: Any, rs: RandomStream) -> Hamiltonian:
    """Samples the Hamiltonian named by `model` with the sizes held in `params`."""
    if model in ('goe', 'gue'):
        return sample(model, params.n, rs)
    if model in ('model-a', 'a'):
        return build_model_a(params.n_alpha, params.n_beta, params.n_c, rs)
    if model in ('model-b', 'b'):
        return build_model_b(params.n_alpha, params.n_beta, params.lam, rs)
    raise ConfigError(f"unknown model '{model}'", key='parameters.model')


def statistics_table(stats: Dict[str, EnsembleAverage]) -> pd.DataFrame:
    """One row per reduced quantity: mean, standard error and realization count."""
    rows = [{'quantity': name, 'mean': avg.mean, 'stderr': avg.stderr, 'n': avg.n} for name, avg in stats.items()]
    return pd.DataFrame(rows, columns=['quantity', 'mean', 'stderr', 'n'])


def _per_item(realizations: List[Realization], name: str) -> Dict[int, float]:
    return {r.item: r.scalars[name] for r in realizations if np.isfinite(r.scalars.get(name, np.nan))}


class Experiment:
    """Base class: one subclass per experiment kind."""

    kinds: ClassVar[Tuple[str, ...]] = ()

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.params = config.parameters
        self.prepare()

    def prepare(self):
        """Validates anything the schema cannot see before work starts."""

    def items(self) -> List[Tuple[int, str]]:
        return [(s, f'stream-{s}') for s in sorted(self.config.seeds)]

    def stream(self, item: int) -> RandomStream:
        return RandomStream(self.config.seed, item)

    def realize(self, item: int, label: str) -> Realization:
        raise NotImplementedError

    def reduce(self, realizations: List[Realization]) -> Reduction:
        raise NotImplementedError

    def _keep_matrix(self, out: Realization, name: str, h: Hamiltonian):
        if self.config.dump_matrices:
            out.matrices[name] = np.array(h.entries)

    def _scalar_table(self, realizations: List[Realization], key: str = 'stream_id') -> pd.DataFrame:
        rows = []
        for r in sorted(realizations, key=lambda r: r.item):
            rows.append({key: r.item, 'label': r.label, **r.scalars})
        return pd.DataFrame(rows)

    def _stats(self, realizations: List[Realization], names: List[str]) -> Dict[str, EnsembleAverage]:
        stats = {}
        for name in names:
            values = _per_item(realizations, name)
            if values:
                stats[name] = ensemble_average(values)
        return stats


class EnhancementExperiment(Experiment):
    """Infinite-time return vs cross probability over random basis-state pairs."""

    kinds = ('goe-factor', 'gue-factor')

    @property
    def ensemble(self) -> str:
        return 'goe' if self.config.kind == 'goe-factor' else 'gue'

    def realize(self, item: int, label: str) -> Realization:
        p = self.params
        rs = self.stream(item)
        h = sample(self.ensemble, p.n, rs)
        es = eigensolve(h)
        gen = rs.substream(PAIR_TAG).generator()
        a_sites = gen.integers(0, p.n, size=p.pairs)
        b_sites = (a_sites + gen.integers(1, p.n, size=p.pairs)) % p.n
        p_aa, p_ab = [], []
        for a, b in zip(a_sites, b_sites):
            sa = StateVector.basis(p.n, int(a))
            sb = StateVector.basis(p.n, int(b))
            p_aa.append(infinite_time_joint(es, sa, sa))
            p_ab.append(infinite_time_joint(es, sa, sb))
        out = Realization(item, label)
        out.tables['pairs'] = pd.DataFrame({'a': a_sites, 'b': b_sites, 'p_aa': p_aa, 'p_ab': p_ab})
        mean_aa = float(np.mean(p_aa))
        mean_ab = float(np.mean(p_ab))
        out.scalars.update(p_aa=mean_aa, p_ab=mean_ab, ratio=mean_aa / mean_ab)
        if p.evolved_times:
            series = evolved_enhancement(es, StateVector.basis(p.n, int(a_sites[0])), p.evolved_times)
            out.tables['evolved'] = pd.DataFrame({'t': series.times, 'enhancement': series.values})
            out.scalars['evolved'] = float(np.mean(series.values))
        self._keep_matrix(out, 'hamiltonian', h)
        return out

    def reduce(self, realizations: List[Realization]) -> Reduction:
        names = ['p_aa', 'p_ab', 'ratio'] + (['evolved'] if self.params.evolved_times else [])
        stats = self._stats(realizations, names)
        ratio = stats['p_aa'].mean / stats['p_ab'].mean
        sc = SymmetryClass.from_ensemble(self.ensemble)
        summary = {
            'ratio': ratio,
            'ratio_stderr': stats['ratio'].stderr,
            'rmt_factor': rmt_factor(sc),
            'symmetry_class': sc.value,
            'realizations': len(realizations),
        }
        tables = {'realizations': self._scalar_table(realizations), 'statistics': statistics_table(stats)}
        return Reduction(summary, stats, tables)


class _SweepExperiment(Experiment):
    sweep_key: ClassVar[str] = ''
    increasing: ClassVar[bool] = True

    def points(self) -> List[Any]:
        return list(getattr(self.params, self.sweep_key))

    def build(self, value: Any, rs: RandomStream) -> Hamiltonian:
        raise NotImplementedError

    def realize(self, item: int, label: str) -> Realization:
        p = self.params
        out = Realization(item, label)
        rows = []
        for i, value in enumerate(self.points()):
            h = self.build(value, self.stream(item).substream(i))
            es = eigensolve(h)
            a0 = StateVector.basis(h.n, p.initial_site)
            prof = infinite_time_profile(es, a0, exclude_initial_site=p.exclude_initial_site,
                                         initial_site=p.initial_site)
            rows.append({
                'point': i,
                self.sweep_key: value,
                'ratio': prof.ratio,
                'block_alpha': prof.block_alpha,
                'block_beta': prof.block_beta,
                'mixing_fraction': spectral.mixing_fraction(es),
            })
            out.scalars[f'ratio[{self.sweep_key}={value}]'] = prof.ratio
            self._keep_matrix(out, f'hamiltonian_{i}', h)
        out.tables['sweep'] = pd.DataFrame(rows)
        return out

    def reduce(self, realizations: List[Realization]) -> Reduction:
        rows = []
        stats = {}
        for value in self.points():
            name = f'ratio[{self.sweep_key}={value}]'
            avg = ensemble_average({r.item: r.scalars[name] for r in realizations})
            stats[name] = avg
            rows.append({self.sweep_key: value, 'ratio_mean': avg.mean, 'ratio_stderr': avg.stderr, 'n': avg.n})
        table = pd.DataFrame(rows)
        means = table['ratio_mean'].to_numpy()
        steps = np.diff(means)
        monotone = bool(np.all(steps > 0)) if self.increasing else bool(np.all(steps < 0))
        summary = {
            'sweep': self.sweep_key,
            'monotone': monotone,
            'direction': 'increasing' if self.increasing else 'decreasing',
            'super_unity': bool(np.all(means > 1.0)),
            'realizations': len(realizations),
        }
        return Reduction(summary, stats, {'sweep': table})


class ModelASweepExperiment(_SweepExperiment):
    """Enhancement ratio of Model A against the size of block beta."""

    kinds = ('model-a-sweep',)
    sweep_key = 'n_beta'
    increasing = True

    def build(self, value: int, rs: RandomStream) -> Hamiltonian:
        return build_model_a(self.params.n_alpha, value, self.params.n_c, rs)


class ModelBSweepExperiment(_SweepExperiment):
    """Enhancement ratio of Model B against the coupling scale."""

    kinds = ('model-b-sweep',)
    sweep_key = 'lam'
    increasing = False

    def build(self, value: float, rs: RandomStream) -> Hamiltonian:
        return build_model_b(self.params.n_alpha, self.params.n_beta, value, rs)


class SaturationExperiment(Experiment):
    """N(t) and 1/IPR(t) of a block model on a log-spaced grid in units of t_H."""

    kinds = ('saturation',)

    def realize(self, item: int, label: str) -> Realization:
        p = self.params
        h = build_hamiltonian(p.model, p, self.stream(item))
        es = eigensolve(h)
        a0 = StateVector.basis(h.n, p.initial_site)
        t_h = spectral.heisenberg_time(es)
        fractions = np.geomspace(p.t_min_factor, p.t_max_factor, p.points)
        times = fractions * t_h
        route = participation_number_direct if p.route == 'direct' else participation_number_purity
        n_t = np.array([route(es, a0, t) for t in times])
        inv_ipr = participation_ratio_series(es, a0, times)
        running = inv_ipr.running_average()

        t_n = detect_saturation(TimeSeries(times, n_t), p.window_fraction, p.epsilon)
        t_ipr = detect_saturation(running, p.window_fraction, p.epsilon)
        n_at = float(np.interp(t_n, times, n_t)) if t_n is not None else float('nan')

        out = Realization(item, label)
        out.tables['series'] = pd.DataFrame({
            't': times,
            't_over_th': fractions,
            'n_t': n_t,
            'inverse_ipr': inv_ipr.values,
            'inverse_ipr_avg': running.values,
        })
        out.scalars.update(
            heisenberg_time=t_h,
            saturation_time_n=_nan_if_none(t_n),
            saturation_time_ipr=_nan_if_none(t_ipr),
            saturation_th_n=_nan_if_none(t_n) / t_h,
            n_at_saturation=n_at,
            n_max=float(h.n),
            n_fraction=n_at / h.n,
            saturated_n=float(t_n is not None),
            saturated_ipr=float(t_ipr is not None),
        )
        self._keep_matrix(out, 'hamiltonian', h)
        return out

    def reduce(self, realizations: List[Realization]) -> Reduction:
        stats = self._stats(realizations, ['saturation_th_n', 'n_fraction', 'saturated_n', 'saturated_ipr'])
        ordered = sorted(realizations, key=lambda r: r.item)
        first = ordered[0].tables['series']
        stacked = {col: np.vstack([r.tables['series'][col].to_numpy() for r in ordered])
                   for col in ('n_t', 'inverse_ipr', 'inverse_ipr_avg')}
        mean_series = pd.DataFrame({'t_over_th': first['t_over_th']})
        for col, block in stacked.items():
            mean_series[f'{col}_mean'] = block.mean(axis=0)
            if block.shape[0] > 1:
                mean_series[f'{col}_stderr'] = block.std(axis=0, ddof=1) / np.sqrt(block.shape[0])
            else:
                mean_series[f'{col}_stderr'] = 0.0
        summary = {
            'model': self.params.model,
            'route': self.params.route,
            'n_max': int(ordered[0].scalars['n_max']),
            'saturated_fraction_n': stats['saturated_n'].mean,
            'saturated_fraction_ipr': stats['saturated_ipr'].mean,
            'realizations': len(realizations),
        }
        tables = {
            'series_mean': mean_series,
            'realizations': self._scalar_table(realizations),
            'statistics': statistics_table(stats),
        }
        return Reduction(summary, stats, tables)


class StadiumExperiment(Experiment):
    """Long-time density, spatial 1/IPR and N(t) for the canonical stadium launches."""

    kinds = ('stadium',)

    def prepare(self):
        p = self.params
        try:
            self.stadium = StadiumSpec(straight_length=p.straight_length, radius=p.radius,
                                       wall_height=p.wall_height)
            units = UnitSystem() if p.physical_units else None
            self.grid = GridSpec(nx=p.nx, ny=p.ny, extent=p.extent, dt=p.dt, phase_budget=p.phase_budget,
                                 units=units)
        except ValidationError as e:
            first = e.errors()[0]
            key = 'parameters.' + '.'.join(str(x) for x in first.get('loc', ()))
            raise ConfigError(f"invalid stadium parameter '{key}': {first.get('msg')}", key=key) from e
        available = canonical_launches(self.stadium, p.speed, p.width)
        self.launches = {name: available[name] for name in p.launches}
        for name, ws in self.launches.items():
            domain = build_domain(self.stadium, self.grid, sigma=ws.width, kinetic_energy=ws.mean_kinetic_energy)
            if not domain.inside(*ws.center):
                raise DomainError(f"launch '{name}' starts outside the stadium at {ws.center}")
            check_resolution(ws, domain)

    def items(self) -> List[Tuple[int, str]]:
        return list(enumerate(self.params.launches))

    def realize(self, item: int, label: str) -> Realization:
        p = self.params
        ws = self.launches[label]
        result = propagate_and_accumulate(
            ws, self.stadium, self.grid, p.t_total, t_exclude=p.exclude_fraction * p.t_total,
            snapshot_times=p.snapshot_times, checkpoints=p.checkpoints, record_every=p.record_every,
        )
        running = result.inverse_ipr.running_average()
        try:
            t_sat = detect_saturation(running, p.window_fraction, p.epsilon)
        except InsufficientDataError as e:
            log.warning('launch %s: %s', label, e)
            t_sat = None

        out = Realization(item, label)
        series = pd.DataFrame({'t': result.inverse_ipr.times})
        if self.grid.units is not None:
            series['t_fs'] = self.grid.units.to_femtoseconds(series['t'].to_numpy())
        series['inverse_ipr'] = result.inverse_ipr.values
        series['inverse_ipr_avg'] = running.values
        series['participation'] = result.participation.values
        series['leakage'] = result.leakage.values
        out.tables['series'] = series

        out.scalars.update(
            symmetry_error=symmetry_error(result.density),
            contrast=contrast(result.density),
            exclusion_l1=density_distance(result.density, result.density_full),
            saturation_time=_nan_if_none(t_sat),
            saturated_inverse_ipr=float(running.values[-1]),
            norm_drift=result.norm_drift,
            max_leakage=result.max_leakage,
            steps=float(result.steps),
            dt=result.dt,
        )
        out.grids['density'] = result.density
        out.grids['density_full'] = result.density_full
        for k, snap in enumerate(result.snapshots):
            out.grids[f'snapshot_{k}'] = snap
        if result.snapshots:
            try:
                out.scalars['snapshot_correlation'] = snapshot_correlation(result.snapshots[0], result.density)
            except InsufficientDataError as e:
                log.warning('launch %s: %s', label, e)
        if result.checkpoints:
            rows = []
            for k, (t, grid) in enumerate(sorted(result.checkpoints.items())):
                out.grids[f'checkpoint_{k}'] = grid
                rows.append({'t': t, 'l1_to_final': density_distance(grid, result.density)})
            out.tables['checkpoints'] = pd.DataFrame(rows)
        return out

    def reduce(self, realizations: List[Realization]) -> Reduction:
        table = self._scalar_table(realizations, key='launch_index')
        by_name = {r.label: r.scalars for r in realizations}
        summary = {
            'contrast_order': sorted(by_name, key=lambda n: -by_name[n]['contrast']),
            'inverse_ipr_order': sorted(by_name, key=lambda n: by_name[n]['saturated_inverse_ipr']),
            'all_saturated': bool(all(np.isfinite(s['saturation_time']) for s in by_name.values())),
            'max_norm_drift': max(s['norm_drift'] for s in by_name.values()),
            'max_leakage': max(s['max_leakage'] for s in by_name.values()),
            'launches': len(realizations),
        }
        return Reduction(summary, {}, {'launches': table})


class SpectralExperiment(Experiment):
    """Staircase, density of states, unfolded spacings and in-out ratios."""

    kinds = ('spectral-characterization',)

    def realize(self, item: int, label: str) -> Realization:
        p = self.params
        rs = self.stream(item)
        out = Realization(item, label)
        es = None
        if p.model == 'poisson':
            levels = np.sort(rs.uniforms(p.n)) * p.n
        else:
            h = build_hamiltonian(p.model, p, rs)
            es = eigensolve(h)
            levels = es.energies
            self._keep_matrix(out, 'hamiltonian', h)

        energies, counts = spectral.staircase(levels)
        out.tables['staircase'] = pd.DataFrame({'energy': energies, 'count': counts})
        dos = spectral.density_of_states(levels, p.bins)
        out.tables['dos'] = pd.DataFrame({'center': dos.centers, 'density': dos.density, 'width': dos.widths})
        spacings = spectral.level_spacings(levels, p.discard_fraction)
        out.tables['spacings'] = pd.DataFrame({'s': spacings.values})
        out.scalars.update(
            ks_wigner=spectral.ks_distance(spacings, 'wigner'),
            ks_poisson=spectral.ks_distance(spacings, 'poisson'),
            mean_spacing=spectral.mean_spacing(levels),
            heisenberg_time=spectral.heisenberg_time(levels),
        )
        if p.model in ('goe', 'gue'):
            out.scalars['semicircle_deviation'] = spectral.semicircle_deviation(levels, p.n, p.bins)
        if es is not None and es.blocks is not None:
            ratio = spectral.in_out_ratio(es)
            out.tables['in_out'] = pd.DataFrame({'energy': es.energies, 'ratio': ratio})
            out.scalars['mixing_fraction'] = spectral.mixing_fraction(es, threshold=p.mixing_threshold)
            out.scalars['median_in_out'] = float(np.median(ratio))
        return out

    def reduce(self, realizations: List[Realization]) -> Reduction:
        names = sorted({k for r in realizations for k in r.scalars})
        stats = self._stats(realizations, names)
        summary = {name: avg.mean for name, avg in stats.items()}
        summary.update(model=self.params.model, realizations=len(realizations))
        tables = {'realizations': self._scalar_table(realizations), 'statistics': statistics_table(stats)}
        return Reduction(summary, stats, tables)


class QbPredictionExperiment(Experiment):
    """Short-time corrected prediction of P^{ab} against its measured value."""

    kinds = ('qb-prediction',)

    def prepare(self):
        p = self.params
        n = p.n if p.model in ('goe', 'gue') else p.n_alpha + p.n_beta
        for key in ('a_site', 'b_site'):
            site = getattr(p, key)
            if site is not None and site >= n:
                raise ConfigError(f"{key}={site} is outside the {n} sites of the system", key=f'parameters.{key}')

    def realize(self, item: int, label: str) -> Realization:
        p = self.params
        rs = self.stream(item)
        h = build_hamiltonian(p.model, p, rs)
        es = eigensolve(h)
        ensemble = 'gue' if p.model == 'gue' else 'goe'
        reference = [eigensolve(sample(ensemble, h.n, rs.substream(REFERENCE_TAG + k)), verify=False)
                     for k in range(p.reference_size)]
        a = StateVector.basis(h.n, p.a_site)
        b = StateVector.basis(h.n, p.a_site if p.b_site is None else p.b_site)
        tau = p.tau if p.tau is not None else p.tau_fraction * spectral.heisenberg_time(es)
        prediction = qb_prediction(es, a, b, tau, reference, thouless_time=p.thouless_time)
        out = Realization(item, label)
        out.scalars.update(prediction.to_dict())
        out.scalars['measured'] = infinite_time_joint(es, a, b)
        out.scalars['rmt_factor'] = rmt_factor(SymmetryClass.from_ensemble(ensemble))
        self._keep_matrix(out, 'hamiltonian', h)
        return out

    def reduce(self, realizations: List[Realization]) -> Reduction:
        names = ['predicted', 'measured', 'p_rmt', 'correction', 'thouless_time', 'relaxation_time', 'heisenberg_time']
        stats = self._stats(realizations, names)
        summary = {
            'predicted': stats['predicted'].mean,
            'measured': stats['measured'].mean,
            'p_rmt': stats['p_rmt'].mean,
            'correction': stats['correction'].mean,
            'rmt_factor': realizations[0].scalars['rmt_factor'],
            'realizations': len(realizations),
        }
        tables = {'realizations': self._scalar_table(realizations), 'statistics': statistics_table(stats)}
        return Reduction(summary, stats, tables)


EXPERIMENTS: Dict[str, Type[Experiment]] = {
    kind: cls
    for cls in (
        EnhancementExperiment,
        ModelASweepExperiment,
        ModelBSweepExperiment,
        SaturationExperiment,
        StadiumExperiment,
        SpectralExperiment,
        QbPredictionExperiment,
    )
    for kind in cls.kinds
}


def get_experiment(config: ExperimentConfig) -> Experiment:
    return EXPERIMENTS[config.kind](config)


__all__ = [
    'Realization',
    'Reduction',
    'Experiment',
    'EXPERIMENTS',
    'build_hamiltonian',
    'get_experiment',
    'statistics_table',
]
