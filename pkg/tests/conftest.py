"""
Pytest configuration for the birthmark lab tests.
"""

import sys
from pathlib import Path

import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers", "integration: mark test as integration test (statistical or long propagation, may be slow)"
    )
    config.addinivalue_line(
        "markers", "unit: mark test as unit test (fast)"
    )


@pytest.fixture
def goe_system():
    """Eigensystem of one GOE draw of dimension 200."""
    from app.rmt.ensembles import sample_goe
    from app.rmt.streams import RandomStream
    from app.spectral.eigen import eigensolve

    return eigensolve(sample_goe(200, RandomStream(0, 0)))


@pytest.fixture
def flip_system():
    """Two-level flip Hamiltonian [[0, 1], [1, 0]] with energies -1 and +1."""
    import numpy as np

    from app.rmt.ensembles import Hamiltonian
    from app.spectral.eigen import eigensolve

    return eigensolve(Hamiltonian(np.array([[0.0, 1.0], [1.0, 0.0]])))
