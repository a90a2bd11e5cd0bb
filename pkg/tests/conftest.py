import numpy as np
import pytest
import torch

torch.set_num_threads(1)

from chromasem.colornet import ColorNetConfig, build_colornet, init_colornet
from chromasem.segnet import GridNetConfig, build_gridnet, init_gridnet

# Slim configurations for tests that exercise wiring and plumbing rather
# than capacity. Acceptance tests build the full-size networks themselves.
SMALL_GRID = GridNetConfig(row_depths=(4, 6, 8, 10, 12), num_classes=60)
SMALL_COLOR = ColorNetConfig(encoder_depths=(4, 8, 12, 16, 20))


@pytest.fixture(scope="session")
def small_segmenter():
    return build_gridnet(SMALL_GRID, init_gridnet(SMALL_GRID, seed=7))


@pytest.fixture(scope="session")
def small_colorizer():
    return build_colornet(SMALL_COLOR, init_colornet(SMALL_COLOR, seed=7))


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
