"""Shared fixtures: small ensembles that integrate and decode in milliseconds."""
import numpy as np
import pytest

from scldpc import ChannelSpec, EnsembleSpec, ScalingLab
from scldpc.util_deps.ensemble import sample_graph
from scldpc.util_deps.peeling import degree_distribution, peel_steps, transmit_and_initialize
from scldpc.util_deps.scaling_law import published_scaling_params


@pytest.fixture
def small_spec() -> EnsembleSpec:
    """(3,6,8) with M=12: D=10 check positions, 96 variables."""
    return EnsembleSpec(l=3, r=6, L=8, M=12)


@pytest.fixture
def tiny_spec() -> EnsembleSpec:
    return EnsembleSpec(l=3, r=6, L=4, M=6)


@pytest.fixture
def channel() -> ChannelSpec:
    return ChannelSpec(epsilon=0.45)


@pytest.fixture
def lab(tmp_path) -> ScalingLab:
    """ScalingLab isolated from user and project config, cache under tmp_path."""
    config_dir = tmp_path / "config"
    config_dir.mkdir()
    return ScalingLab(
        config_dir=str(config_dir),
        overrides={"cache": {"directory": str(tmp_path / "cache")}, "simulation": {"trials": 20}},
    )


@pytest.fixture
def params_36():
    """Published (3,6) parameters at L=50."""
    return published_scaling_params(3, 6, 50)


ORACLE_SAMPLES = 2000


@pytest.fixture(scope="session")
def oracle_spec() -> EnsembleSpec:
    """(3,6,4) with M=300: four of its six check positions are partly filled."""
    return EnsembleSpec(l=3, r=6, L=4, M=300)


@pytest.fixture(scope="session")
def one_step_samples(oracle_spec):
    """DD counts of sampled graphs at eps=0.45 right after transmission and after one peeling step.

    Returns two arrays of shape (ORACLE_SAMPLES, D, r+1).
    """
    ch = ChannelSpec(epsilon=0.45)
    before, after = [], []
    for seed in range(ORACLE_SAMPLES):
        state = transmit_and_initialize(sample_graph(oracle_spec, seed), ch, seed)
        before.append(degree_distribution(state))
        peel_steps(state, 1)
        after.append(degree_distribution(state))
    return np.asarray(before), np.asarray(after)
