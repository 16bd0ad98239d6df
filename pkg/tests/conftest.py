import numpy as np
import pytest

from driver_attention.data import SequenceStore, SynthConfig, synth_generate, write_dataset
from driver_attention.models import Architecture
from driver_attention.net import NetConfig, init_params

SMALL_SYNTH = SynthConfig(sequences_per_landscape=2, frames=64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def synthetic_sequences():
    """Default-size synthetic dataset held in memory."""
    return synth_generate(SynthConfig(), seed=7)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Six 64-frame sequences written to disk."""
    root = tmp_path_factory.mktemp("dataset")
    write_dataset(root, synth_generate(SMALL_SYNTH, seed=3))
    return root


@pytest.fixture
def small_store(small_dataset):
    return SequenceStore(small_dataset)


def lively_params(net: NetConfig, seed: int = 0):
    """Tiny-scale parameters with positive head biases so the output maps are not all zero."""
    params = init_params(seed, net)
    params["coarse.head.bias"].data[:] = 0.1
    if net.architecture == Architecture.COARSE_FINE:
        params[f"fine.conv{len(net.refine_channels) + 1}.bias"].data[:] = 0.1
    return params


@pytest.fixture
def tiny_net():
    return NetConfig.tiny_config()


@pytest.fixture
def tiny_params(tiny_net):
    return lively_params(tiny_net)
