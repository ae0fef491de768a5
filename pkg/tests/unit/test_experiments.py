"""
Unit tests for app/services (experiment kinds and the run service)

Tests cover:
- run: artifacts, manifest, report and the run id for every experiment kind
- determinism: identical bytes for any worker count, stable run ids
- failure handling: quarantine of partial outputs, stale artifact removal
- parameter checks the schema cannot make (sites, stadium grids)
- acceptance behaviour of the block-model sweeps and the saturation run
"""
import json

import numpy as np
import pandas as pd
import pytest

from app.core.config import Settings, validate_config
from app.services import experiments as experiments_module
from app.services.experiment_service import config_digest, run
from app.utils.binary import load_matrix
from app.utils.errors import ConfigError, CutoffError, DomainError, SolverError

TINY_STADIUM = {
    'nx': 128, 'ny': 128, 'extent': [-4.0, 4.0, -3.0, 3.0], 'phase_budget': 0.5,
    'width': 0.5, 'speed': 8.0, 't_total': 0.05, 'launches': ['bouncing-ball'],
    'snapshot_times': [0.01], 'checkpoints': [0.03], 'record_every': 5,
}


@pytest.fixture
def settings(tmp_path):
    return Settings(_env_file=None, jobs=1, output_root=str(tmp_path / 'runs'))


def _config(tmp_path, kind, parameters, name='out', **top):
    return validate_config({'kind': kind, 'outputs': str(tmp_path / name), 'parameters': parameters, **top})


@pytest.mark.unit
class TestRun:
    """End-to-end runs of small configs."""

    def test_goe_factor(self, tmp_path, settings):
        """A small GOE run writes per-stream tables, an aggregate, a report and the manifest."""
        config = _config(tmp_path, 'goe-factor', {'n': 60, 'pairs': 5, 'evolved_times': [1.0]}, seeds=[0, 1])
        manifest = run(config, settings)
        out = tmp_path / 'out'
        assert manifest.status == 'ok'
        assert manifest.run_id == config_digest(config)
        for rel in ('manifest.json', 'report.md', 'realizations/stream-0/pairs.csv',
                    'realizations/stream-1/evolved.csv', 'aggregate/realizations.csv'):
            assert (out / rel).is_file(), rel
            assert rel in manifest.artifacts
        assert not list(out.glob('.staging-*'))
        assert manifest.summary['rmt_factor'] == 3.0
        assert manifest.statistics['ratio'].n == 2
        on_disk = json.loads((out / 'manifest.json').read_text(encoding='utf-8'))
        assert on_disk['run_id'] == manifest.run_id

    def test_default_output_root(self, tmp_path, settings):
        """Without an outputs key the run lands in <output_root>/<kind>."""
        config = validate_config({'kind': 'gue-factor', 'parameters': {'n': 30, 'pairs': 2}})
        run(config, settings)
        assert (tmp_path / 'runs' / 'gue-factor' / 'manifest.json').is_file()

    def test_model_sweeps(self, tmp_path, settings):
        """Sweeps write one row per point."""
        config = _config(tmp_path, 'model-b-sweep', {'n_alpha': 20, 'n_beta': 40, 'lam': [0.1, 0.5]}, seeds=[0, 1])
        manifest = run(config, settings)
        table = pd.read_csv(tmp_path / 'out' / 'aggregate' / 'sweep.csv')
        assert list(table['lam']) == [0.1, 0.5]
        assert manifest.summary['direction'] == 'decreasing'
        assert 'ratio[lam=0.1]' in manifest.statistics

    def test_saturation(self, tmp_path, settings):
        """The saturation run writes the time grid in units of t_H."""
        config = _config(tmp_path, 'saturation', {'model': 'b', 'n_alpha': 20, 'n_beta': 40, 'lam': 0.3,
                                                  'points': 50, 't_max_factor': 5.0})
        manifest = run(config, settings)
        series = pd.read_csv(tmp_path / 'out' / 'realizations' / 'stream-0' / 'series.csv')
        assert len(series) == 50
        assert series['t_over_th'].iloc[0] == pytest.approx(1e-4)
        assert series['t_over_th'].iloc[-1] == pytest.approx(5.0)
        assert np.all(series['n_t'] >= 1.0 - 1e-9)
        assert manifest.summary['n_max'] == 60

    def test_spectral(self, tmp_path, settings):
        """Spectral characterization of a block model includes in-out ratios."""
        config = _config(tmp_path, 'spectral-characterization',
                         {'model': 'model-b', 'n_alpha': 30, 'n_beta': 70, 'lam': 0.2, 'bins': 10})
        manifest = run(config, settings)
        base = tmp_path / 'out' / 'realizations' / 'stream-0'
        for name in ('staircase', 'dos', 'spacings', 'in_out'):
            assert (base / f'{name}.csv').is_file()
        assert 0.0 <= manifest.summary['mixing_fraction'] <= 1.0

    def test_spectral_poisson(self, tmp_path, settings):
        """Poisson levels need no Hamiltonian."""
        config = _config(tmp_path, 'spectral-characterization', {'model': 'poisson', 'n': 200})
        manifest = run(config, settings)
        assert manifest.summary['ks_poisson'] < manifest.summary['ks_wigner']

    def test_qb_prediction(self, tmp_path, settings):
        """The prediction and the measured value are both reported."""
        config = _config(tmp_path, 'qb-prediction', {'model': 'model-b', 'n_alpha': 20, 'n_beta': 80,
                                                     'lam': 0.3, 'reference_size': 3})
        manifest = run(config, settings)
        assert manifest.summary['predicted'] > 0.0
        assert manifest.summary['measured'] > 0.0

    def test_qb_prediction_model_a_defaults(self, tmp_path, settings):
        """A default Model A run finds a cutoff window and predicts above the RMT factor."""
        config = _config(tmp_path, 'qb-prediction', {'reference_size': 2})
        manifest = run(config, settings)
        assert manifest.status == 'ok'
        assert manifest.summary['predicted'] > manifest.summary['rmt_factor']
        table = pd.read_csv(tmp_path / 'out' / 'aggregate' / 'realizations.csv')
        assert np.all(table['leakage_time'] > table['heisenberg_time'])
        assert np.all(table['thouless_time'] == table['relaxation_time'])

    @pytest.mark.parametrize('kind,parameters', [
        ('goe-factor', {'n': 40, 'pairs': 3}),
        ('gue-factor', {'n': 40, 'pairs': 3}),
        ('spectral-characterization', {'model': 'goe', 'n': 200}),
        ('qb-prediction', {'model': 'goe', 'n': 60, 'reference_size': 2}),
    ])
    def test_statistics_table(self, tmp_path, settings, kind, parameters):
        """Every reduced quantity gets a row of mean, standard error and count."""
        manifest = run(_config(tmp_path, kind, parameters, seeds=[0, 1]), settings)
        table = pd.read_csv(tmp_path / 'out' / 'aggregate' / 'statistics.csv')
        assert list(table.columns) == ['quantity', 'mean', 'stderr', 'n']
        assert set(table['quantity']) == set(manifest.statistics)
        assert np.all(table['n'] == 2)
        assert np.all(np.isfinite(table['stderr']))
        assert 'aggregate/statistics.csv' in manifest.artifacts

    def test_stadium(self, tmp_path, settings):
        """A short stadium run writes densities, snapshots, checkpoints and series."""
        config = _config(tmp_path, 'stadium', TINY_STADIUM)
        manifest = run(config, settings)
        base = tmp_path / 'out' / 'realizations' / 'bouncing-ball'
        for name in ('density.pgm', 'density.json', 'density.qbg', 'density_full.pgm', 'snapshot_0.pgm',
                     'checkpoint_0.pgm', 'series.csv', 'checkpoints.csv'):
            assert (base / name).is_file(), name
        assert manifest.summary['launches'] == 1
        assert manifest.summary['max_norm_drift'] < 1e-10
        assert (tmp_path / 'out' / 'aggregate' / 'launches.csv').is_file()

    def test_dump_matrices(self, tmp_path, settings):
        """dump_matrices writes the sampled Hamiltonian of each stream."""
        config = _config(tmp_path, 'goe-factor', {'n': 20, 'pairs': 2}, dump_matrices=True)
        run(config, settings)
        h = load_matrix(tmp_path / 'out' / 'realizations' / 'stream-0' / 'hamiltonian.qbh')
        assert h.shape == (20, 20)
        assert np.array_equal(h, h.T)


@pytest.mark.unit
class TestDeterminism:
    """Outputs depend on the config only."""

    def test_jobs_do_not_change_bytes(self, tmp_path, settings):
        """One worker and four workers give byte-identical tables."""
        params = {'n': 50, 'pairs': 4}
        serial = run(_config(tmp_path, 'goe-factor', params, name='serial', seeds=[3, 1, 2, 0], jobs=1), settings)
        parallel = run(_config(tmp_path, 'goe-factor', params, name='parallel', seeds=[3, 1, 2, 0], jobs=4), settings)
        assert serial.run_id == parallel.run_id
        assert serial.artifacts == parallel.artifacts
        for rel in serial.artifacts:
            if rel.endswith('.csv'):
                assert (tmp_path / 'serial' / rel).read_bytes() == (tmp_path / 'parallel' / rel).read_bytes(), rel
        assert serial.summary == parallel.summary

    def test_run_id_tracks_config(self, tmp_path):
        """The run id changes with the science and ignores where output goes."""
        base = _config(tmp_path, 'goe-factor', {'n': 50})
        moved = _config(tmp_path, 'goe-factor', {'n': 50}, name='elsewhere', jobs=8)
        other = _config(tmp_path, 'goe-factor', {'n': 51})
        assert config_digest(base) == config_digest(moved)
        assert config_digest(base) != config_digest(other)
        assert len(config_digest(base)) == 12

    def test_rerun_replaces_artifacts(self, tmp_path, settings):
        """A rerun into the same directory removes artifacts the new run does not produce."""
        run(_config(tmp_path, 'goe-factor', {'n': 30, 'pairs': 2}, seeds=[0, 1]), settings)
        assert (tmp_path / 'out' / 'realizations' / 'stream-1' / 'pairs.csv').is_file()
        run(_config(tmp_path, 'goe-factor', {'n': 30, 'pairs': 2}, seeds=[0]), settings)
        assert not (tmp_path / 'out' / 'realizations' / 'stream-1' / 'pairs.csv').exists()
        assert (tmp_path / 'out' / 'realizations' / 'stream-0' / 'pairs.csv').is_file()


@pytest.mark.unit
class TestFailures:
    """Failed runs keep what finished and report the error."""

    def test_quarantine(self, tmp_path, settings, monkeypatch):
        """A failing stream aborts the run; finished streams go to quarantine."""
        original = experiments_module.EnhancementExperiment.realize

        def flaky(self, item, label):
            if item == 1:
                raise SolverError('eigensolver residual too large', residual=1.0)
            return original(self, item, label)

        monkeypatch.setattr(experiments_module.EnhancementExperiment, 'realize', flaky)
        config = _config(tmp_path, 'goe-factor', {'n': 30, 'pairs': 2}, seeds=[0, 1])
        with pytest.raises(SolverError):
            run(config, settings)
        out = tmp_path / 'out'
        assert not (out / 'manifest.json').exists()
        assert not list(out.glob('.staging-*'))
        quarantine = out / 'quarantine' / config_digest(config)
        aborted = json.loads((quarantine / 'manifest.json').read_text(encoding='utf-8'))
        assert aborted['status'] == 'aborted'
        assert 'SolverError' in aborted['error']
        assert (quarantine / 'realizations' / 'stream-0' / 'pairs.csv').is_file()
        assert not (quarantine / 'realizations' / 'stream-1').exists()

    def test_cutoff_outside_window(self, tmp_path, settings):
        """A cutoff beyond the Heisenberg time is a numerical failure."""
        config = _config(tmp_path, 'qb-prediction', {'model': 'goe', 'n': 40, 'tau': 1e6, 'reference_size': 1})
        with pytest.raises(CutoffError):
            run(config, settings)

    def test_site_out_of_range(self, tmp_path, settings):
        """Sites beyond the system size are rejected before any work starts."""
        config = _config(tmp_path, 'qb-prediction', {'model': 'goe', 'n': 40, 'a_site': 40})
        with pytest.raises(ConfigError) as exc:
            run(config, settings)
        assert exc.value.key == 'parameters.a_site'
        assert not (tmp_path / 'out').exists()

    def test_stadium_grid_not_power_of_two(self, tmp_path, settings):
        """Grid sizes are checked when the stadium experiment is prepared."""
        config = _config(tmp_path, 'stadium', {**TINY_STADIUM, 'nx': 100})
        with pytest.raises(ConfigError) as exc:
            run(config, settings)
        assert exc.value.key.startswith('parameters')

    def test_stadium_box_too_small(self, tmp_path, settings):
        """A box that does not hold the stadium is a DomainError."""
        config = _config(tmp_path, 'stadium', {**TINY_STADIUM, 'extent': [-1.0, 1.0, -1.0, 1.0]})
        with pytest.raises(DomainError):
            run(config, settings)


@pytest.mark.integration
class TestBlockModelAcceptance:
    """Ensemble-level behaviour of the block models."""

    def test_model_b_decreasing(self, tmp_path, settings):
        """The enhancement ratio falls as lambda grows and stays above one."""
        config = _config(tmp_path, 'model-b-sweep', {'n_alpha': 100, 'n_beta': 400, 'lam': [0.05, 0.1, 0.2]},
                         seeds=list(range(10)), jobs=4)
        summary = run(config, settings).summary
        assert summary['monotone']
        assert summary['super_unity']

    def test_model_b_full_coupling_control(self, tmp_path, settings):
        """At lambda = 1 the blocks are indistinguishable once the initial site is left out."""
        config = _config(tmp_path, 'model-b-sweep', {'n_alpha': 100, 'n_beta': 400, 'lam': [1.0],
                                                     'exclude_initial_site': True},
                         seeds=list(range(10)), jobs=4)
        manifest = run(config, settings)
        assert manifest.statistics['ratio[lam=1.0]'].mean == pytest.approx(1.0, abs=0.1)

    def test_model_a_increasing(self, tmp_path, settings):
        """A single connection gives a ratio growing with N_beta."""
        config = _config(tmp_path, 'model-a-sweep', {'n_alpha': 100, 'n_c': 1, 'n_beta': [200, 400, 800]},
                         seeds=list(range(10)), jobs=4)
        summary = run(config, settings).summary
        assert summary['monotone']
        assert summary['super_unity']

    @pytest.mark.parametrize('coupling', [{'model': 'a', 'n_c': 1}, {'model': 'b', 'lam': 0.05}])
    def test_weak_coupling_saturates(self, tmp_path, settings, coupling):
        """Both N(t) and the running 1/IPR settle in every realization of a weakly coupled model."""
        config = _config(tmp_path, 'saturation', {**coupling, 'n_alpha': 100, 'n_beta': 400, 'route': 'purity'},
                         seeds=[0, 1, 2], jobs=3)
        manifest = run(config, settings)
        assert manifest.summary['saturated_fraction_n'] == 1.0
        assert manifest.summary['saturated_fraction_ipr'] == 1.0
        table = pd.read_csv(tmp_path / 'out' / 'aggregate' / 'realizations.csv')
        assert np.all(np.isfinite(table['saturation_time_n']))
        assert np.all(np.isfinite(table['saturation_time_ipr']))
        if coupling['model'] == 'a':
            assert manifest.statistics['n_fraction'].mean < 0.9
