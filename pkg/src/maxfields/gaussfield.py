"""Stationary Gaussian field with magnitude-dependent exponential correlation.

One event of magnitude m contributes a Gaussian vector over the sites
with variance v, mean -v/2 (which forces E exp(Y) = 1, the normalization
the maxima construction needs for unit Gumbel margins), and correlation
rho(h) = exp(-h / exp(d (m - c))). Because the correlation length depends
on m, every event in principle needs its own covariance factorization;
the cache below quantizes m so nearby magnitudes share one Cholesky root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import ConfigError, FactorizationError
from .geometry import SiteSet
from .links import MagnitudeLink, magnitude_scale

_JITTER_START = 1e-12
_JITTER_MAX = 1e-6
_JITTER_STEP = 10.0


@dataclass(frozen=True)
class GaussConfig:
    """Variance and magnitude link of the Gaussian event field.

    The mean is never user-set: it is -variance/2 by construction, the
    unique Gaussian mean with E exp(Y) = 1.
    """

    variance: float = 1.0
    link: MagnitudeLink = MagnitudeLink()

    def __post_init__(self):
        if not np.isfinite(self.variance) or self.variance <= 0:
            raise ConfigError(f"variance must be finite and > 0, got {self.variance}")

    @property
    def mean(self) -> float:
        return -0.5 * self.variance


def correlation(h, m, link: MagnitudeLink):
    """rho = exp(-h / exp(d (m - c))), in (0, 1], decreasing in h."""
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise ConfigError("distance must be >= 0")
    lam = magnitude_scale(m, link)
    with np.errstate(under="ignore"):
        out = np.exp(-h / lam)
    return float(out) if out.ndim == 0 else out


def build_covariance(sites: SiteSet, m: float, cfg: GaussConfig) -> np.ndarray:
    """Covariance matrix v * rho(dist; m) over the site set."""
    return cfg.variance * correlation(sites.pair_distances, m, cfg.link)


def cholesky_with_jitter(sigma: np.ndarray) -> np.ndarray:
    """Lower-triangular root, escalating diagonal jitter for near-singular
    input (duplicate or near-duplicate sites); fails loudly past 1e-6
    relative jitter."""
    sigma = np.asarray(sigma, dtype=float)
    scale = float(np.mean(np.diag(sigma)))
    jitter = 0.0
    while True:
        try:
            return np.linalg.cholesky(
                sigma if jitter == 0.0 else sigma + jitter * scale * np.eye(sigma.shape[0])
            )
        except np.linalg.LinAlgError:
            jitter = _JITTER_START if jitter == 0.0 else jitter * _JITTER_STEP
            if jitter > _JITTER_MAX:
                raise FactorizationError(
                    f"covariance not factorizable even with relative jitter {_JITTER_MAX}"
                ) from None


class CholeskyCache:
    """Quantized-magnitude cache of covariance roots.

    Events whose magnitudes fall in the same quantization cell (width
    delta_m) share the factorization built at the cell center. delta_m = 0
    disables sharing: every distinct magnitude factorizes afresh. A single
    entry serves all events when the link is inactive or there is only one
    site, since the correlation then never changes.
    """

    def __init__(self, sites: SiteSet, cfg: GaussConfig, delta_m: float = 0.01):
        if delta_m < 0:
            raise ConfigError("delta_m must be >= 0")
        self.sites = sites
        self.cfg = cfg
        self.delta_m = float(delta_m)
        self._static = (not cfg.link.active) or len(sites) == 1
        self._roots: dict[int, np.ndarray] = {}
        self.builds = 0
        self.hits = 0

    def key_of(self, m: float) -> int:
        if self._static or self.delta_m == 0.0:
            return 0
        return int(np.rint(m / self.delta_m))

    def keys_of(self, m: np.ndarray) -> np.ndarray:
        if self._static:
            return np.zeros(m.shape, dtype=np.int64)
        if self.delta_m == 0.0:
            # no sharing: every event gets its own slot
            return np.arange(m.size, dtype=np.int64)
        return np.rint(m / self.delta_m).astype(np.int64)

    def _representative(self, key: int, m_exact: float) -> float:
        if self._static or self.delta_m == 0.0:
            return m_exact
        return key * self.delta_m

    def root(self, key: int, m_exact: float) -> np.ndarray:
        """Root for the quantization cell ``key``; builds on first use.

        Insert-if-absent: concurrent duplicate builds produce identical
        matrices, so the race is benign.
        """
        cached = self._roots.get(key)
        if cached is not None:
            self.hits += 1
            return cached
        L = cholesky_with_jitter(
            build_covariance(self.sites, self._representative(key, m_exact), self.cfg)
        )
        self.builds += 1
        if not (self.delta_m == 0.0 and not self._static):
            self._roots.setdefault(key, L)
        return L

    def __len__(self) -> int:
        return len(self._roots)


def simulate_gaussian_vector(
    sites: SiteSet,
    m: float,
    cfg: GaussConfig,
    rng: np.random.Generator,
    cache: CholeskyCache | None = None,
) -> np.ndarray:
    """One draw of the event field Y over the sites: mean + L @ eps."""
    if cache is None:
        L = cholesky_with_jitter(build_covariance(sites, m, cfg))
    else:
        L = cache.root(cache.key_of(m), m)
    eps = rng.standard_normal(len(sites))
    return cfg.mean + L @ eps


def gaussian_contribution_bound(n_sites: int, variance: float, eps: float = 1e-6) -> float:
    """High-probability bound on the max over sites of one event field.

    Exact 1 - eps quantile of the max of n independent N(-v/2, v)
    variables; by Slepian's inequality this dominates the quantile for
    every nonnegative correlation, so it is a valid worst case at any
    correlation length the link can produce.
    """
    if not 0 < eps < 1:
        raise ConfigError("eps must be in (0, 1)")
    if n_sites < 1 or variance <= 0:
        raise ConfigError("need n_sites >= 1 and variance > 0")
    q = norm.ppf((1.0 - eps) ** (1.0 / n_sites))
    return float(-0.5 * variance + math.sqrt(variance) * q)


def correlation_perturbation_bound(
    h_max: float, link: MagnitudeLink, delta_m: float, m_abs_dev: float
) -> float:
    """Documented worst-case correlation error of the quantized cache:
    h_max * |d| * delta_m * exp(|d| * |m - c|), reported in run metadata."""
    return float(h_max * abs(link.d) * delta_m * math.exp(abs(link.d) * m_abs_dev))
