r"""Interference-channel model: dimensions, Rayleigh draws, CSI mismatch.

The network has K source-destination pairs.  Source i has M antennas and
sends d streams; destination j has N antennas.  The flat-fading link from
source i to destination j is H_ji \in C^{N x M} with i.i.d. CN(0, sigma_h^2)
entries (variance sigma_h^2/2 per real and imaginary part).  Receiver noise
is CN(0, I_N) throughout, so sigma_h^2 carries the SNR.

All randomness is drawn from counter-based Philox generators keyed by
``numpy.random.SeedSequence`` so that trials can be evaluated in any order
(or on different workers) and still reproduce bit for bit.
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int]]


@dataclass(frozen=True)
class NetworkDims:
    """Problem sizes (K pairs, M tx antennas, N rx antennas, d streams)."""

    K: int
    M: int
    N: int
    d: int

    def __post_init__(self):
        for name in ("K", "M", "N", "d"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ValueError(f"{name} must be an integer, got {v!r}")
            if v < 1:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.d > min(self.M, self.N):
            raise ValueError(
                f"d={self.d} exceeds min(M, N)={min(self.M, self.N)}"
            )


@dataclass
class ChannelSet:
    """One realization of the full K x K channel grid.

    ``entries[j, i]`` is H_ji, the N x M matrix from source i to
    destination j.  Direct links sit on the diagonal.
    """

    entries: np.ndarray
    sigma_h_sq: float

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 4 or e.shape[0] != e.shape[1]:
            raise ValueError(
                f"entries must have shape (K, K, N, M), got {e.shape}"
            )
        if not np.iscomplexobj(e):
            raise ValueError("entries must be complex")
        if self.sigma_h_sq < 0:
            raise ValueError(f"sigma_h_sq must be >= 0, got {self.sigma_h_sq}")
        self.entries = np.ascontiguousarray(e, dtype=np.complex128)

    @property
    def K(self) -> int:
        return self.entries.shape[0]

    @property
    def N(self) -> int:
        return self.entries.shape[2]

    @property
    def M(self) -> int:
        return self.entries.shape[3]

    def link(self, dest: int, src: int) -> np.ndarray:
        return self.entries[dest, src]


@dataclass
class MismatchedChannels:
    """A true channel draw together with the estimate the designer sees.

    estimated = true + Delta, Delta i.i.d. CN(0, sigma_delta_sq) per entry,
    independent across all K^2 links.
    """

    true_channels: ChannelSet
    estimated_channels: ChannelSet
    sigma_delta_sq: float

    def __post_init__(self):
        if self.true_channels.entries.shape != self.estimated_channels.entries.shape:
            raise ValueError("true and estimated grids must match in shape")
        if self.sigma_delta_sq < 0:
            raise ValueError(
                f"sigma_delta_sq must be >= 0, got {self.sigma_delta_sq}"
            )


def _generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, (int, np.integer)):
        key = (int(seed),)
    else:
        key = tuple(int(s) for s in seed)
    return np.random.Generator(np.random.Philox(seed=np.random.SeedSequence(key)))


def complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """CN(0, variance) array: variance/2 in each of the real/imag parts."""
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    scale = np.sqrt(variance / 2.0)
    return scale * (
        rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    ).astype(np.complex128)


def generate_channels(
    dims: NetworkDims, sigma_h_sq: float, seed: SeedLike
) -> ChannelSet:
    """Draw one i.i.d. Rayleigh realization of all K^2 links."""
    rng = _generator(seed)
    shape = (dims.K, dims.K, dims.N, dims.M)
    return ChannelSet(complex_gaussian(rng, shape, sigma_h_sq), sigma_h_sq)


def apply_mismatch(
    channels: ChannelSet, sigma_delta_sq: float, seed: SeedLike
) -> MismatchedChannels:
    """Corrupt a true channel set with an independent CN(0, sigma_delta_sq)
    estimation error on every entry of every link."""
    rng = _generator(seed)
    delta = complex_gaussian(rng, channels.entries.shape, sigma_delta_sq)
    est = ChannelSet(channels.entries + delta, channels.sigma_h_sq)
    return MismatchedChannels(channels, est, sigma_delta_sq)


def snr_to_sigma_h(snr_db: float) -> float:
    """Channel variance realizing a target SNR in dB.

    With the simulation normalization P_T = K (so P_k = 1 per user) and unit
    noise floor, SNR = sigma_h^2, i.e. sigma_h^2 = 10^(snr_db/10).
    """
    return float(10.0 ** (snr_db / 10.0))
