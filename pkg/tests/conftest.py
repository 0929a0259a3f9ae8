import numpy as np
import pytest

from icbeam import ChannelSet, NetworkDims, generate_channels


def random_precoders(rng, K, M, d, power=None):
    """Unstructured complex precoder stack, optionally scaled per user."""
    V = rng.standard_normal((K, M, d)) + 1j * rng.standard_normal((K, M, d))
    V = np.ascontiguousarray(V, dtype=np.complex128)
    if power is not None:
        for k in range(K):
            V[k] *= np.sqrt(power / np.sum(np.abs(V[k]) ** 2))
    return V


def scalar_channels(h11, h12, h21, h22):
    """K=2 single-antenna grid from four complex link gains."""
    H = np.array([[[[h11]], [[h12]]], [[[h21]], [[h22]]]], dtype=np.complex128)
    return ChannelSet(H, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_net():
    """A medium-coupling K=3 instance used by several suites."""
    dims = NetworkDims(3, 4, 4, 2)
    return dims, generate_channels(dims, 2.0, 314159)
