import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from locspoof import ShiftPair, default_scene, pilots, scene_params

T_S = 1.0 / 30.0  # sampling period of the reference scene [us]


@pytest.fixture(scope="session")
def scene():
    return default_scene()


@pytest.fixture(scope="session")
def params(scene):
    return scene_params(scene)


@pytest.fixture(scope="session")
def pilotset(scene):
    return pilots(scene.n_symbols, scene.n_subcarriers, scene.n_tx, seed=1)


@pytest.fixture
def reference_shift():
    return ShiftPair(T_S, 0.25 * np.pi)
