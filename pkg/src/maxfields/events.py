"""Poisson event streams driving the maxima constructions.

Magnitudes arrive in decreasing order through the standard Gamma
recursion: with E_i unit exponentials, Gamma_i = Gamma_{i-1} + E_i and
m_i = -log(Gamma_i), so the number of events above any level u is
Poisson with mean exp(-u). The spatial variant pairs each magnitude with
a uniform position on a buffered window W and uses m_i = -log(Gamma_i/|W|),
giving Poisson(|W| exp(-u)) exceedance counts.

The stream is infinite, so a stop rule truncates it: once the current
magnitude plus a high-probability bound on any single event's largest
field contribution falls below the running minimum of the maxima, no
skipped event can matter except with probability at or below the bound's
tail level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class MagnitudeEvent:
    m: float
    index: int


@dataclass(frozen=True)
class SpatialEvent:
    y: tuple[float, ...]
    m: float


@dataclass(frozen=True)
class StopRule:
    """Truncation policy for the infinite event stream.

    contribution_bound: high-probability upper bound on the supremum over
    sites of one event's additive field term.
    max_events: hard safety cap per realization; hitting it is recorded as
    a warning in the realization metadata.
    """

    contribution_bound: float
    max_events: int = 1_000_000

    def __post_init__(self):
        if not np.isfinite(self.contribution_bound) or self.contribution_bound < 0:
            raise ConfigError(f"contribution bound must be finite and >= 0, got {self.contribution_bound}")
        if self.max_events < 1:
            raise ConfigError("max_events must be >= 1")


def should_stop(m: float, z_min: float, rule: StopRule, bound: float | None = None) -> bool:
    """True once no later event can raise the field minimum.

    ``bound`` overrides the rule's static contribution bound; the
    shape-function construction passes a magnitude-dependent one.
    """
    b = rule.contribution_bound if bound is None else bound
    return bool(np.isfinite(z_min) and m + b < z_min)


class MagnitudeStream:
    """Decreasing magnitudes m_i = -log(Gamma_i) from one RNG stream."""

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._gamma = 0.0
        self._index = 0

    @property
    def count(self) -> int:
        return self._index

    def next(self) -> MagnitudeEvent:
        self._gamma += float(self._rng.standard_exponential())
        ev = MagnitudeEvent(m=-np.log(self._gamma), index=self._index)
        self._index += 1
        return ev

    def next_batch(self, size: int) -> np.ndarray:
        """The next ``size`` magnitudes, still strictly decreasing."""
        gammas = self._gamma + np.cumsum(self._rng.standard_exponential(size))
        self._gamma = float(gammas[-1])
        self._index += size
        return -np.log(gammas)


class SpatialEventStream:
    """(position, magnitude) events on a finite axis-aligned window.

    Magnitudes follow m_i = -log(Gamma_i / |W|); positions are uniform on
    the window. With |W| = 1 the magnitude law reduces to MagnitudeStream.
    """

    def __init__(self, rng: np.random.Generator, window_lo, window_hi):
        lo = np.atleast_1d(np.asarray(window_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(window_hi, dtype=float))
        if lo.shape != hi.shape:
            raise ConfigError("window corner shapes differ")
        extent = hi - lo
        volume = float(np.prod(extent))
        if not np.isfinite(volume) or volume <= 0.0:
            raise ConfigError(f"window volume must be finite and > 0, got {volume}")
        self._rng = rng
        self._lo = lo
        self._extent = extent
        self.volume = volume
        self._gamma = 0.0
        self._index = 0

    @property
    def count(self) -> int:
        return self._index

    def next(self) -> SpatialEvent:
        self._gamma += float(self._rng.standard_exponential())
        m = float(np.log(self.volume) - np.log(self._gamma))
        y = self._lo + self._extent * self._rng.random(self._lo.size)
        self._index += 1
        return SpatialEvent(y=tuple(y), m=m)

    def next_batch(self, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Next ``size`` events as (magnitudes, positions (size, dim))."""
        gammas = self._gamma + np.cumsum(self._rng.standard_exponential(size))
        self._gamma = float(gammas[-1])
        self._index += size
        m = np.log(self.volume) - np.log(gammas)
        y = self._lo + self._extent * self._rng.random((size, self._lo.size))
        return m, y
