"""Counter-based deterministic random streams.

Every draw is a pure function of (seed, query_index, subdomain_ordinal,
sample_ordinal, stream_id, counter), so evaluation order and worker count
never change the numbers. Mixing is the splitmix64 finalizer, which is
plenty for Monte Carlo sampling and cheap enough to inline in hot loops.

The jitted helpers here are shared verbatim by the numba evaluation cores
and by the Python-level :class:`RngStreams` used in tests.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["RngStreams", "stream_key", "uniform_draw", "STREAM_INDEX", "STREAM_ROULETTE"]

STREAM_INDEX = 0  # path-index draws
STREAM_ROULETTE = 1  # Russian roulette draws

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def stream_key(seed, query_index, subdomain_ordinal, sample_ordinal, stream_id):
    """Collapse the stream coordinates into one 64-bit stream key."""
    h = _mix64(np.uint64(seed) + _GAMMA)
    h = _mix64(h ^ (np.uint64(query_index) + _GAMMA))
    h = _mix64(h ^ (np.uint64(subdomain_ordinal) + _GAMMA))
    h = _mix64(h ^ (np.uint64(sample_ordinal) + _GAMMA))
    h = _mix64(h ^ (np.uint64(stream_id) + _GAMMA))
    return h


@njit(cache=True, inline="always")
def uniform_draw(key, counter):
    """counter-th uniform in [0, 1) of the stream identified by key."""
    x = _mix64(key + (np.uint64(counter) + np.uint64(1)) * _GAMMA)
    return float(x >> _S11) * _INV53


class RngStreams:
    """The two independent streams owned by one (query, subdomain, sample).

    index_stream feeds path-index sampling, roulette_stream feeds the
    continuation decisions; both are exposed as stateful cursors over the
    underlying counter-based sequence.
    """

    class _Stream:
        __slots__ = ("key", "counter")

        def __init__(self, key):
            # jitted functions box uint64 results as Python ints; re-wrap so
            # dispatch stays in the unsigned domain
            self.key = np.uint64(key)
            self.counter = 0

        def next_float(self) -> float:
            u = uniform_draw(self.key, np.uint64(self.counter))
            self.counter += 1
            return u

    def __init__(self, seed: int, query_index: int, subdomain_ordinal: int = 0,
                 sample_ordinal: int = 0):
        self.index_stream = self._Stream(
            stream_key(seed, query_index, subdomain_ordinal, sample_ordinal, STREAM_INDEX))
        self.roulette_stream = self._Stream(
            stream_key(seed, query_index, subdomain_ordinal, sample_ordinal, STREAM_ROULETTE))
