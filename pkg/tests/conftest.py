from __future__ import annotations

import importlib.resources

import numpy as np
import pytest

from vg2s.instance import Instance, parse_orlib
from vg2s.vge import ModelConfig


@pytest.fixture(scope="session")
def two_by_two() -> Instance:
    # J1 = (M1,3)(M2,2), J2 = (M2,2)(M1,4); optimal makespan 7
    return Instance(n=2, m=2, ops=(((0, 3), (1, 2)), ((1, 2), (0, 4))))


@pytest.fixture(scope="session")
def ft06() -> Instance:
    text = importlib.resources.files("vg2s.data").joinpath("ft06.txt").read_text()
    return parse_orlib(text)


@pytest.fixture(scope="session")
def tiny_cfg() -> ModelConfig:
    """Small dimensions so forward passes and finite differences stay cheap."""
    return ModelConfig(
        d_graph=4, d_latent=4, n_heads=2,
        canvas_jobs=2, canvas_machines=2,
        conv_channels=8, conv_channels_min=2,
        glimpse_layers=1, glimpse_heads=2,
        d_glimpse=3, d_logit=3, critic_hidden=4,
    )


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(0)
