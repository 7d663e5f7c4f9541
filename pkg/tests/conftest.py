import numpy as np
import pytest

from ropesim.geometry import RopeSpec


@pytest.fixture
def spec():
    """Rope constants used throughout: 2.8 m, 0.25 kg, 0.30 m hooked section."""
    return RopeSpec(l_rope=2.8, m_rope=0.25, l_hook=0.30, z_atc=0.12, g=9.81)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
