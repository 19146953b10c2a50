"""Deterministic, splittable random-number streams.

One stream per Monte Carlo replicate, keyed by ``(seed, stream_id)``
through the counter-based Philox generator. Identical keys reproduce the
identical draw sequence on every platform and under any worker count;
distinct stream ids give statistically independent streams. This is what
makes parallel replication bit-reproducible: workers never share a
stream, and the result of replicate ``i`` depends only on its own key.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1


def _philox(seed: int, stream_id: int) -> np.random.Generator:
    key = np.array([seed & _MASK64, stream_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class RngStream:
    """A value-like handle on one deterministic stream.

    The underlying generator is created lazily and owned exclusively by
    this stream; never share one stream between concurrent workers.
    """

    seed: int
    stream_id: int
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = _philox(self.seed, self.stream_id)
        return self._gen

    def uniform(self, size=None):
        return self.gen.random(size)

    def normal(self, size=None):
        return self.gen.standard_normal(size)

    def exponential(self, size=None):
        return self.gen.standard_exponential(size)


def spawn_stream(seed: int, stream_id: int = 0) -> RngStream:
    """Create the deterministic stream for one replicate."""
    return RngStream(int(seed), int(stream_id))
