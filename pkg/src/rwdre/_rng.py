"""Counter-based random numbers: a pure function of (seed, stream, time, site, index).

SplitMix64 finalisers chained over the key words. Every cell of an
environment gets its own uniforms without any generator state, so cells
can be evaluated in any order, in parallel, and reproduced bit for bit.
"""
from . import _numba_setup  # noqa: F401
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53

STREAM_PROBS = 1
STREAM_OCCUPANCY = 2
STREAM_FLIP = 3


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def cell_key(seed, stream, n, x):
    """64-bit key for time ``n`` and site ``x`` (1-d int64 array)."""
    h = mix64(np.uint64(seed) + _GOLDEN * np.uint64(stream + 1))
    h = mix64(h ^ (np.uint64(n) + _GOLDEN))
    for i in range(x.shape[0]):
        h = mix64(h ^ (np.uint64(x[i]) + _GOLDEN * np.uint64(i + 2)))
    return h


@njit(cache=True, inline="always")
def uniform(key, j):
    """j-th uniform in the open interval (0, 1) attached to ``key``."""
    b = mix64(key + _GOLDEN * np.uint64(j + 1))
    return (float(b >> _S11) + 0.5) * _TWO_M53


@njit(cache=True)
def uniforms(seed, stream, n, x, count):
    key = cell_key(seed, stream, n, x)
    out = np.empty(count)
    for j in range(count):
        out[j] = uniform(key, j)
    return out


def seed64(seed: int) -> int:
    """Reduce any Python int to the unsigned 64-bit seed domain."""
    return int(seed) & 0xFFFFFFFFFFFFFFFF
