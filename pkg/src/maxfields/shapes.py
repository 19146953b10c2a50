"""Shape functions for the random-function construction.

Each family is a centred probability density f with standard deviation
exactly ``s`` (Laplace scale s/sqrt(2), uniform half-width s*sqrt(3)), so
log f integrates to a unit-mass field contribution and the families are
directly comparable at equal s. Outside the uniform support the log
density is -inf, a legal field value meaning "no contribution".
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .links import MagnitudeLink, magnitude_scale

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)


class ShapeFamily(str, enum.Enum):
    GAUSS = "gauss"
    LAPLACE = "laplace"
    UNIFORM = "uniform"

    @classmethod
    def parse(cls, name: str) -> "ShapeFamily":
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ConfigError(
                f"unknown shape family {name!r}; choose from "
                f"{[f.value for f in cls]}"
            ) from None


@dataclass(frozen=True)
class ShapeScale:
    """A density scale, optionally tagged with the link that produced it."""

    s: float
    link: MagnitudeLink | None = None

    def __post_init__(self):
        if not np.isfinite(self.s) or self.s <= 0:
            raise ConfigError(f"shape scale must be finite and > 0, got {self.s}")


def scale_from_magnitude(m, link: MagnitudeLink):
    """s = exp(d * (m - c)); the magnitude-to-scale link."""
    return magnitude_scale(m, link)


def log_density(family: ShapeFamily, x, s):
    """log f(x; s) for the centred family with standard deviation s.

    Broadcasts over array offsets and scales. Returns -inf outside the
    uniform support.
    """
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ConfigError("scale must be > 0")
    if family is ShapeFamily.GAUSS:
        out = -np.log(s) - _LOG_SQRT_2PI - (x * x) / (2.0 * s * s)
    elif family is ShapeFamily.LAPLACE:
        beta = s / _SQRT2
        out = -np.log(2.0 * beta) - np.abs(x) / beta
    elif family is ShapeFamily.UNIFORM:
        w = s * _SQRT3
        with np.errstate(divide="ignore"):
            out = np.where(np.abs(x) <= w, -np.log(2.0 * w), -np.inf)
    else:  # pragma: no cover
        raise ConfigError(f"unhandled family {family}")
    return float(out) if out.ndim == 0 else out


def peak_log_density(family: ShapeFamily, s):
    """sup_x log f(x; s), attained at x = 0 for every family."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ConfigError("scale must be > 0")
    out = peak_offset(family) - np.log(s)
    return float(out) if out.ndim == 0 else out


def peak_offset(family: ShapeFamily) -> float:
    """Family constant A with peak log density A - log(s)."""
    if family is ShapeFamily.GAUSS:
        return -_LOG_SQRT_2PI
    if family is ShapeFamily.LAPLACE:
        return -math.log(_SQRT2)
    if family is ShapeFamily.UNIFORM:
        return -math.log(2.0 * _SQRT3)
    raise ConfigError(f"unhandled family {family}")  # pragma: no cover


def support_halfwidth(family: ShapeFamily, s: float) -> float:
    """Half-width of {f > 0}; infinite except for the uniform family."""
    if family is ShapeFamily.UNIFORM:
        return s * _SQRT3
    return math.inf
