import numpy as np
import pytest

from app.core.linalg import KET_0, KET_1, DensityOperator
from app.core.model import EngineParams, h_cold, thermal_state
from app.core.propagation import PropagationSettings


@pytest.fixture
def params() -> EngineParams:
    """Standard engine operating point."""
    return EngineParams()


@pytest.fixture
def coherence_params() -> EngineParams:
    """Large drive amplitude used by the coherence and coupling sweeps."""
    return EngineParams(omega0=5.0, tau_comp=5.0, tau_exp=2.5, n_meas=100)


@pytest.fixture
def settings() -> PropagationSettings:
    return PropagationSettings()


@pytest.fixture
def cold_gibbs(params) -> DensityOperator:
    return thermal_state(h_cold(params), params.T_c)


@pytest.fixture
def bell_state() -> DensityOperator:
    """(|00> + |11>)/√2."""
    ket = (np.kron(KET_0, KET_0) + np.kron(KET_1, KET_1)) / np.sqrt(2)
    return DensityOperator.pure(ket)


@pytest.fixture
def out_dir(tmp_path) -> str:
    path = tmp_path / "results"
    path.mkdir()
    return str(path)
