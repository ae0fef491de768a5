"""
Unit tests for app/stadium

Tests cover:
- StadiumSpec / GridSpec / build_domain: geometry, validation, mask area
- WavepacketSpec / init_wavepacket: normalization, momentum, resolution checks
- SplitOperator: free-particle spreading and norm conservation
- propagate_and_accumulate: densities, series, snapshots and checkpoints
- metrics: symmetry_error, contrast, density_distance, snapshot_correlation
"""
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from app.core.config import Settings, read_document, validate_config
from app.services.experiment_service import run
from app.stadium.geometry import Domain, GridSpec, StadiumSpec, UnitSystem, build_domain
from app.stadium.metrics import contrast, density_distance, snapshot_correlation, symmetry_error
from app.stadium.propagator import DensityGrid, Snapshot, SplitOperator, propagate_and_accumulate
from app.stadium.wavepacket import (
    LAUNCH_NAMES,
    WavepacketSpec,
    canonical_launches,
    default_speed,
    init_wavepacket,
    mean_momentum,
    position_spread,
)
from app.utils.errors import DomainError, PropagationError

CONFIG_DIR = Path(__file__).resolve().parents[2] / 'configs'

STADIUM = StadiumSpec(straight_length=2.0, radius=1.0)
# sigma = 0.5 R is the smallest packet width this 128 x 128 box resolves with eight cells
SMALL_GRID = GridSpec(nx=128, ny=128, extent=(-4.0, 4.0, -3.0, 3.0), phase_budget=0.5)
SMALL_WIDTH = 0.5
SMALL_SPEED = 8.0


def _toy_grid(values, mask=None):
    values = np.asarray(values, dtype=float)
    nx, ny = values.shape
    x = np.linspace(-0.5, 0.5, nx) if nx > 1 else np.zeros(1)
    y = np.linspace(-0.5, 0.5, ny) if ny > 1 else np.zeros(1)
    mask = np.ones(values.shape, dtype=bool) if mask is None else mask
    return DensityGrid(values, mask, (0.0, 1.0), x, y, 1.0)


@pytest.mark.unit
class TestGeometry:
    """Test stadium shape and grid settings."""

    def test_signed_distance(self):
        """Negative inside, zero on the wall, positive outside."""
        d = STADIUM.signed_distance(np.array([0.0, 2.0, 0.0, 3.0]), np.array([0.0, 0.0, 1.0, 0.0]))
        assert np.allclose(d, [-1.0, 0.0, 0.0, 1.0])

    def test_area_and_circle(self):
        """Area is pi R^2 + 2 R L; L = 0 is a circle."""
        assert STADIUM.area == pytest.approx(np.pi + 4.0)
        assert StadiumSpec(straight_length=0.0, radius=1.0).is_circle

    def test_grid_power_of_two(self):
        """Grid sizes must be powers of two."""
        with pytest.raises(ValidationError):
            GridSpec(nx=100)

    def test_dt_above_budget(self):
        """An explicit step above the phase budget is rejected."""
        with pytest.raises(ValidationError):
            GridSpec(nx=64, ny=64, dt=1.0)

    def test_default_step(self):
        """Without dt the step spends exactly the phase budget on the largest wavenumber."""
        assert SMALL_GRID.step * SMALL_GRID.kinetic_max == pytest.approx(0.5)

    def test_cell_centred_axes(self):
        """Axes are symmetric about the origin for a symmetric box."""
        x, y = SMALL_GRID.axes()
        assert np.allclose(x, -x[::-1])
        assert np.allclose(y, -y[::-1])

    def test_mask_area(self):
        """The mask area matches the stadium area within one cell along the perimeter."""
        gs = GridSpec()
        domain = build_domain(StadiumSpec(straight_length=2.0, radius=1.0, wall_height=100.0), gs)
        area = domain.mask.sum() * gs.cell_area
        perimeter = 2 * np.pi + 4.0
        assert abs(area - STADIUM.area) <= perimeter * max(gs.dx, gs.dy)

    def test_wall_profile(self):
        """Potential is zero inside and reaches V0 two cells outside the wall."""
        domain = build_domain(STADIUM, SMALL_GRID, kinetic_energy=2.0)
        assert domain.wall_height == pytest.approx(2000.0)
        assert domain.potential.max() == pytest.approx(2000.0)
        assert np.all(domain.potential[domain.mask] == 0.0)

    def test_does_not_fit(self):
        """A stadium larger than the box raises DomainError."""
        with pytest.raises(DomainError):
            build_domain(STADIUM, GridSpec(nx=64, ny=64, extent=(-1.0, 1.0, -1.0, 1.0)), kinetic_energy=1.0)

    def test_margin_required(self):
        """The box must leave four packet widths around the stadium."""
        with pytest.raises(DomainError):
            build_domain(STADIUM, SMALL_GRID, sigma=0.6, kinetic_energy=1.0)

    def test_wall_height_needed(self):
        """Without wall height or kinetic energy no wall can be built."""
        with pytest.raises(DomainError):
            build_domain(STADIUM, SMALL_GRID)

    def test_unit_labels(self):
        """The electron / nanometre time unit is a fraction of a femtosecond."""
        assert 5.0 < UnitSystem().time_unit_fs < 15.0


@pytest.mark.unit
class TestWavepacket:
    """Test wavepacket construction."""

    def test_normalized_and_masked(self):
        """The packet has unit norm on the grid and vanishes outside the mask."""
        ws = WavepacketSpec.launch((0.0, 0.0), 90.0, SMALL_SPEED, SMALL_WIDTH)
        domain = build_domain(STADIUM, SMALL_GRID, sigma=ws.width, kinetic_energy=ws.mean_kinetic_energy)
        psi = init_wavepacket(ws, domain)
        assert np.sum(np.abs(psi) ** 2) * domain.cell_area == pytest.approx(1.0)
        assert np.all(psi[~domain.mask] == 0.0)

    def test_mean_momentum(self):
        """The spectral first moment recovers the wavevector."""
        domain = Domain.free(GridSpec(nx=128, ny=128, extent=(-6.0, 6.0, -6.0, 6.0)))
        ws = WavepacketSpec(center=(0.0, 0.0), wavevector=(3.0, -1.0), width=1.0)
        kx, ky = mean_momentum(init_wavepacket(ws, domain), domain)
        assert kx == pytest.approx(3.0, rel=1e-3)
        assert ky == pytest.approx(-1.0, rel=1e-3)

    def test_centre_outside(self):
        """A packet launched outside the stadium is rejected."""
        domain = build_domain(STADIUM, SMALL_GRID, kinetic_energy=1.0)
        with pytest.raises(DomainError):
            init_wavepacket(WavepacketSpec(center=(0.0, 1.5), width=SMALL_WIDTH), domain)

    def test_under_resolved(self):
        """Widths or wavelengths below eight cells are rejected."""
        domain = build_domain(STADIUM, SMALL_GRID, kinetic_energy=1.0)
        with pytest.raises(DomainError):
            init_wavepacket(WavepacketSpec(center=(0.0, 0.0), width=0.2), domain)
        with pytest.raises(DomainError):
            init_wavepacket(WavepacketSpec(center=(0.0, 0.0), wavevector=(40.0, 0.0), width=SMALL_WIDTH), domain)

    def test_canonical_launches(self):
        """Four launches with the reference angles and positions."""
        launches = canonical_launches(STADIUM)
        assert list(launches) == ['bouncing-ball', 'horizontal-scar', 'generic-center', 'generic-offcenter']
        speed = default_speed(STADIUM)
        assert launches['bouncing-ball'].wavevector == pytest.approx((0.0, speed), abs=1e-9)
        assert launches['horizontal-scar'].wavevector == pytest.approx((speed, 0.0))
        assert launches['generic-offcenter'].center == pytest.approx((0.7, 0.3))
        assert launches['generic-center'].width == pytest.approx(0.08)


@pytest.mark.unit
class TestSplitOperator:
    """Test the split-operator step."""

    def test_free_gaussian_spreading(self):
        """Free spreading follows sigma(t) = sigma sqrt(1 + (t / 2 sigma^2)^2)."""
        domain = Domain.free(GridSpec(nx=256, ny=256, extent=(-8.0, 8.0, -8.0, 8.0)))
        sigma = 0.5
        psi = init_wavepacket(WavepacketSpec(center=(0.0, 0.0), width=sigma), domain)
        assert position_spread(psi, domain) == pytest.approx(sigma, rel=1e-6)
        propagator = SplitOperator(domain, 0.1)
        for _ in range(10):
            psi = propagator.step(psi)
        expected = sigma * np.sqrt(1.0 + (1.0 / (2.0 * sigma ** 2)) ** 2)
        assert position_spread(psi, domain) == pytest.approx(expected, rel=1e-4)

    def test_non_finite_field(self):
        """NaN amplitudes raise PropagationError with the step index."""
        domain = Domain.free(GridSpec(nx=8, ny=8))
        psi = np.full((8, 8), np.nan, dtype=complex)
        with pytest.raises(PropagationError) as exc:
            SplitOperator(domain, 0.01).step(psi, index=7)
        assert exc.value.step == 7

    def test_positive_step(self):
        """The time step must be positive."""
        with pytest.raises(ValueError):
            SplitOperator(Domain.free(GridSpec(nx=8, ny=8)), 0.0)


@pytest.mark.integration
class TestNormConservation:
    """Long propagation keeps the norm."""

    def test_norm_drift(self):
        """Norm drift stays below 1e-8 over 1e5 steps."""
        ss = StadiumSpec(straight_length=1.0, radius=0.5, wall_height=200.0)
        gs = GridSpec(nx=32, ny=32, extent=(-1.6, 1.6, -1.6, 1.6))
        domain = build_domain(ss, gs)
        X, Y = domain.mesh()
        psi = np.where(domain.mask, np.exp(-(X ** 2 + Y ** 2) / 0.2 + 2j * X), 0.0)
        propagator = SplitOperator(domain, gs.step)
        psi /= np.sqrt(propagator.norm(psi))
        for j in range(100_000):
            psi = propagator.step(psi, index=j)
        assert abs(propagator.norm(psi) - 1.0) < 1e-8


@pytest.mark.unit
class TestPropagateAndAccumulate:
    """Test the accumulation loop on a small grid."""

    @pytest.fixture(scope='class')
    def result(self):
        ws = WavepacketSpec.launch((0.0, 0.0), 90.0, SMALL_SPEED, SMALL_WIDTH)
        return propagate_and_accumulate(ws, STADIUM, SMALL_GRID, t_total=0.1, t_exclude=0.02,
                                        snapshot_times=[0.0, 0.05], checkpoints=[0.05])

    def test_density_unit_mass(self, result):
        """Both densities carry unit mass inside the mask and nothing outside."""
        for grid in (result.density, result.density_full):
            assert grid.mass == pytest.approx(1.0)
            assert np.all(grid.values[~grid.mask] == 0.0)

    def test_density_read_only(self, result):
        """Density grids are immutable."""
        with pytest.raises(ValueError):
            result.density.values[0, 0] = 1.0

    def test_steps_and_series(self, result):
        """Every step is sampled from t = 0 to t_total."""
        assert result.steps == int(round(0.1 / result.dt))
        assert len(result.inverse_ipr) == result.steps + 1
        assert result.inverse_ipr.times[-1] == pytest.approx(result.steps * result.dt)
        assert result.participation.values[0] == pytest.approx(result.inverse_ipr.values[0])

    def test_unitary(self, result):
        """The norm survives the hard wall and leakage stays small."""
        assert result.norm_drift < 1e-10
        assert 0.0 <= result.max_leakage < 0.05

    def test_snapshots_and_checkpoints(self, result):
        """Snapshots land on the first step at or after each requested time."""
        assert [s.time for s in result.snapshots] == pytest.approx([0.0, 0.05], abs=result.dt)
        assert list(result.checkpoints) == [0.05]
        assert result.checkpoints[0.05].window[0] == pytest.approx(0.02)

    def test_mirror_symmetry_exact(self, result):
        """A vertical launch from the centre stays mirror symmetric in x."""
        v = np.asarray(result.density.values)
        assert np.sum(np.abs(v - v[::-1, :])) / np.sum(v) < 1e-6

    def test_empty_window(self):
        """t_exclude must lie below t_total."""
        ws = WavepacketSpec.launch((0.0, 0.0), 90.0, SMALL_SPEED, SMALL_WIDTH)
        with pytest.raises(ValueError):
            propagate_and_accumulate(ws, STADIUM, SMALL_GRID, t_total=0.1, t_exclude=0.1)

    def test_zero_mass_density(self):
        """An empty accumulator cannot be normalized."""
        domain = build_domain(STADIUM, SMALL_GRID, kinetic_energy=1.0)
        with pytest.raises(PropagationError):
            DensityGrid.from_accumulator(np.zeros(domain.shape), domain, (0.0, 1.0))


@pytest.mark.unit
class TestMetrics:
    """Test density metrics on toy grids."""

    def test_symmetry_error_spike(self):
        """A single corner spike is 1.5 away from its symmetrized version."""
        assert symmetry_error(_toy_grid([[1.0, 0.0], [0.0, 0.0]])) == pytest.approx(1.5)

    def test_symmetry_error_symmetric(self):
        """A fully symmetric grid has zero error."""
        assert symmetry_error(_toy_grid(np.ones((4, 4)))) == 0.0

    def test_symmetry_needs_centred_axes(self):
        """Off-centre axes are rejected."""
        grid = DensityGrid(np.ones((2, 2)), np.ones((2, 2), dtype=bool), (0.0, 1.0),
                           np.array([0.0, 1.0]), np.array([0.0, 1.0]), 1.0)
        with pytest.raises(DomainError):
            symmetry_error(grid)

    def test_contrast(self):
        """Contrast is std / mean over the masked cells."""
        assert contrast(_toy_grid(np.ones((3, 3)))) == 0.0
        assert contrast(_toy_grid([[1.0, 3.0]])) == pytest.approx(0.5)
        mask = np.array([[True, True, False]])
        assert contrast(_toy_grid([[1.0, 1.0, 50.0]], mask)) == 0.0

    def test_density_distance(self):
        """Identical densities are 0 apart, disjoint ones 2."""
        a = _toy_grid([[1.0, 0.0]])
        b = _toy_grid([[0.0, 1.0]])
        assert density_distance(a, a) == 0.0
        assert density_distance(a, b) == pytest.approx(2.0)
        with pytest.raises(DomainError):
            density_distance(a, _toy_grid([[1.0]]))

    def test_snapshot_correlation(self):
        """A density equal to the squared snapshot correlates perfectly."""
        x = np.linspace(-1.0, 1.0, 16)
        X, Y = np.meshgrid(x, x, indexing='ij')
        real = np.cos(3 * X) * np.sin(2 * Y + 0.3)
        grid = DensityGrid(real ** 2, np.ones((16, 16), dtype=bool), (0.0, 1.0), x, x, 1.0)
        assert snapshot_correlation(Snapshot(0.1, real), grid) == pytest.approx(1.0)
        with pytest.raises(DomainError):
            snapshot_correlation(Snapshot(0.1, real), grid, quadrant='middle')


@pytest.mark.integration
class TestStadiumPhenomenology:
    """Long-time densities of the four canonical launches from the shipped desk-scale config."""

    @pytest.fixture(scope='class')
    def outcome(self, tmp_path_factory):
        out = tmp_path_factory.mktemp('stadium')
        document = read_document(CONFIG_DIR / 'stadium.yaml')
        config = validate_config({**document, 'outputs': str(out / 'run')})
        settings = Settings(_env_file=None, output_root=str(out / 'runs'))
        manifest = run(config, settings)
        table = pd.read_csv(out / 'run' / 'aggregate' / 'launches.csv').set_index('label')
        return manifest, table

    def test_runs_all_launches(self, outcome):
        """The shipped config propagates every canonical launch."""
        manifest, table = outcome
        assert manifest.status == 'ok'
        assert sorted(table.index) == sorted(LAUNCH_NAMES)

    def test_long_time_mirror_symmetry(self, outcome):
        """Every long-time density is symmetric under both reflections to 5% in L1."""
        _, table = outcome
        for name in LAUNCH_NAMES:
            assert table.loc[name, 'symmetry_error'] < 0.05, name

    def test_exclusion_window_invariance(self, outcome):
        """Dropping the first sixtieth of the run barely moves the density."""
        _, table = outcome
        assert np.all(table['exclusion_l1'] < 0.05)

    def test_scarred_launches_ordered_first(self, outcome):
        """Bouncing-ball and horizontal-scar lead in contrast and trail in saturated 1/IPR."""
        manifest, _ = outcome
        scarred = {'bouncing-ball', 'horizontal-scar'}
        assert set(manifest.summary['contrast_order'][:2]) == scarred
        assert set(manifest.summary['inverse_ipr_order'][:2]) == scarred

    def test_inverse_ipr_saturates(self, outcome):
        """The running spatial 1/IPR settles for every launch at the run's own window settings."""
        manifest, table = outcome
        assert manifest.summary['all_saturated']
        assert np.all(np.isfinite(table['saturation_time']))

    def test_unitary_over_long_runs(self, outcome):
        """Hundreds of thousands of steps keep the norm to 1e-8."""
        manifest, _ = outcome
        assert manifest.summary['max_norm_drift'] < 1e-8
