"""
Unit tests for app/reporting/manager.py

Tests cover:
- load_template
- render_report for finished and aborted runs
"""
from pathlib import Path

import pytest

from app.core.config import validate_config
from app.reporting.manager import load_template, render_report
from app.schemas.result import EnsembleStat, RunManifest

TEMPLATE = Path(__file__).resolve().parents[2] / 'app' / 'templates' / 'summary_v1.yaml'


@pytest.fixture
def manifest():
    config = validate_config({'kind': 'goe-factor', 'seeds': [0, 1], 'parameters': {'n': 40, 'pairs': 3}})
    return RunManifest(
        run_id='0123456789ab', kind=config.kind, version='test', config=config,
        summary={'ratio': 2.9876543, 'symmetry_class': 'orthogonal'},
        statistics={'ratio': EnsembleStat(mean=2.98, stderr=0.1, n=2)},
        artifacts=['manifest.json', 'report.md'],
    )


@pytest.mark.unit
class TestReportTemplate:
    """Test the YAML template document."""

    def test_load(self):
        """The bundled template has meta and template sections."""
        doc = load_template(TEMPLATE)
        assert doc['meta']['name'] == 'summary_v1'
        assert '{{ manifest.run_id }}' in doc['template']

    def test_missing_template(self, tmp_path, manifest):
        """A document without a template raises ValueError."""
        path = tmp_path / 'empty.yaml'
        path.write_text('meta: {name: empty}\n', encoding='utf-8')
        with pytest.raises(ValueError):
            render_report(path, manifest)


@pytest.mark.unit
class TestRenderReport:
    """Test the rendered markdown."""

    def test_finished_run(self, manifest):
        """Header, parameters, summary, statistics and artifacts are listed."""
        text = render_report(TEMPLATE, manifest)
        assert text.startswith('# goe-factor run 0123456789ab')
        assert 'streams: 0, 1' in text
        assert '| pairs | 3 |' in text
        assert '| ratio | 2.98765 |' in text
        assert '| symmetry_class | orthogonal |' in text
        assert '## Ensemble averages' in text
        assert '- `manifest.json`' in text

    def test_aborted_run(self, manifest):
        """Aborted runs show the error and no summary table."""
        aborted = manifest.model_copy(update={'status': 'aborted', 'error': 'SolverError: residual 3',
                                              'summary': {}, 'statistics': {}})
        text = render_report(TEMPLATE, aborted)
        assert '- status: aborted' in text
        assert 'SolverError: residual 3' in text
        assert 'No summary (run aborted).' in text
        assert '## Ensemble averages' not in text
