"""The magnitude link: how an event's magnitude controls its spatial footprint.

``magnitude_scale(m, link) = exp(d * (m - c))`` is used in two places: as
the correlation length of the stationary Gaussian construction and as the
standard deviation of the shape-function construction. ``d = 0`` switches
the link off, which is exactly the max-stable special case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MagnitudeLink:
    """Offset ``c`` and sensitivity ``d`` of the magnitude-to-scale link."""

    c: float = 0.0
    d: float = 0.0

    @property
    def active(self) -> bool:
        return self.d != 0.0


def magnitude_scale(m, link: MagnitudeLink):
    """exp(d * (m - c)); scalar or elementwise on arrays."""
    return np.exp(link.d * (np.asarray(m, dtype=float) - link.c))
