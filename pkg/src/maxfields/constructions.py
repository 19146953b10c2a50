"""Event-controlled maxima fields and their block maxima.

Two constructions are assembled here from the event streams:

* Gaussian construction: Z(x) = max over events of m + Y_m(x), with Y_m
  the stationary Gaussian event field whose correlation length follows
  the magnitude link. The link switched off (d = 0) is exactly the
  max-stable special case. Margins are unit Gumbel.

* Shape-function construction: Z(x) = max over spatial events (y, m) of
  m + log f(x - y; s(m)) with s = exp(d (m - c)). Margins are Gumbel with
  scale 1 and location -log(1 - d) (family-invariant), which reduces to 0
  in the max-stable case d = 0.

Block maxima Z_k take the componentwise maximum of k independent
realizations; their margins shift the location up by log(k) at scale 1.

Every realization records truncation diagnostics (event count, bound in
force, caps hit) so downstream statistics stay auditable. Replicate i of
a sample draws exclusively from stream (seed, i), which makes samples
bit-reproducible under any worker count and lets disjoint replicate
ranges concatenate into one larger run.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import ConfigError, SimulationRefusal
from .events import MagnitudeStream, SpatialEventStream, StopRule, should_stop
from .gaussfield import (
    CholeskyCache,
    GaussConfig,
    correlation_perturbation_bound,
    gaussian_contribution_bound,
)
from .geometry import SiteSet
from .links import MagnitudeLink
from .rng import spawn_stream
from .shapes import ShapeFamily, peak_offset, scale_from_magnitude

_BATCH = 512
#: Conservative floor on the running field minimum used to size the
#: shape-construction window: P(unit-Gumbel-type margin below -6) < 1e-100.
_STOP_Z_FLOOR = -6.0
#: Buffer must cover this many density standard deviations on each side,
#: bounding the omitted Gauss/Laplace tail mass below 1e-8.
_BUFFER_SDS = 6.0
#: Refuse shape links with 1 - d below this: the stop rule degenerates and
#: the margin location -log(1 - d) diverges as d approaches 1.
_MIN_ONE_MINUS_D = 0.1


@dataclass
class FieldRealization:
    """One realization of the field over the sites, plus diagnostics."""

    z: np.ndarray
    k: int
    meta: dict


@dataclass
class MaximaSample:
    """n replications of Z_k over the sites."""

    rows: np.ndarray
    k: int
    config: dict
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def n_sites(self) -> int:
        return self.rows.shape[1]


class Simulator(Protocol):
    sites: SiteSet

    def simulate_one(self, rng: np.random.Generator) -> tuple[np.ndarray, dict]: ...

    def config_snapshot(self) -> dict: ...


class GaussMaximaSimulator:
    """Maxima field driven by magnitude events with Gaussian footprints."""

    def __init__(
        self,
        sites: SiteSet,
        cfg: GaussConfig,
        rule: StopRule | None = None,
        delta_m: float = 0.01,
        eps: float = 1e-6,
        batch: int = _BATCH,
    ):
        self.sites = sites
        self.cfg = cfg
        self.eps = float(eps)
        if rule is None:
            rule = StopRule(gaussian_contribution_bound(len(sites), cfg.variance, eps))
        self.rule = rule
        self.cache = CholeskyCache(sites, cfg, delta_m)
        self.batch = int(batch)

    def simulate_one(self, rng: np.random.Generator) -> tuple[np.ndarray, dict]:
        p = len(self.sites)
        stream = MagnitudeStream(rng)
        z = np.full(p, -np.inf)
        bound = self.rule.contribution_bound
        mean = self.cfg.mean
        cache = self.cache
        cap_hit = False
        m_last = math.inf
        m_dev = 0.0  # largest |m - c| seen, for the cache error bound
        while True:
            size = min(self.batch, self.rule.max_events - stream.count)
            if size <= 0:
                cap_hit = True
                break
            m = stream.next_batch(size)
            eps_mat = rng.standard_normal((size, p))
            keys = cache.keys_of(m)
            if keys[0] == keys[-1]:
                contrib = eps_mat @ cache.root(int(keys[0]), float(m[0])).T
            else:
                contrib = np.empty_like(eps_mat)
                order = np.argsort(keys, kind="stable")
                sorted_keys = keys[order]
                cuts = np.flatnonzero(np.diff(sorted_keys)) + 1
                for seg in np.split(order, cuts):
                    root = cache.root(int(keys[seg[0]]), float(m[seg[0]]))
                    contrib[seg] = eps_mat[seg] @ root.T
            contrib += m[:, None] + mean
            np.maximum(z, contrib.max(axis=0), out=z)
            m_last = float(m[-1])
            m_dev = max(m_dev, abs(float(m[0]) - self.cfg.link.c), abs(m_last - self.cfg.link.c))
            if should_stop(m_last, float(z.min()), self.rule):
                break
        meta = {
            "construction": "gauss",
            "events": stream.count,
            "cap_hit": cap_hit,
            "bound": bound,
            "last_magnitude": m_last,
            "m_abs_dev": m_dev,
        }
        return z, meta

    def config_snapshot(self) -> dict:
        return {
            "construction": "gauss",
            "variance": self.cfg.variance,
            "mean": self.cfg.mean,
            "link_c": self.cfg.link.c,
            "link_d": self.cfg.link.d,
            "contribution_bound": self.rule.contribution_bound,
            "bound_tail_eps": self.eps,
            "max_events": self.rule.max_events,
            "delta_m": self.cache.delta_m,
            "sites": self.sites.coords.tolist(),
        }

    def extra_meta(self, aggregate: dict) -> dict:
        h_max = float(np.max(self.sites.pair_distances))
        return {
            "cache_entries": len(self.cache),
            "cache_builds": self.cache.builds,
            "correlation_perturbation_bound": correlation_perturbation_bound(
                h_max, self.cfg.link, self.cache.delta_m, aggregate.get("m_abs_dev", 0.0)
            ),
        }


def max_stable_gauss_simulator(
    sites: SiteSet, variance: float = 1.0, **kwargs
) -> GaussMaximaSimulator:
    """The max-stable special case: the magnitude link switched off."""
    return GaussMaximaSimulator(sites, GaussConfig(variance, MagnitudeLink(0.0, 0.0)), **kwargs)


class ShapeMaximaSimulator:
    """Maxima field from shifted shape functions on a buffered 1-d window."""

    def __init__(
        self,
        sites: SiteSet,
        family: ShapeFamily,
        link: MagnitudeLink,
        rule: StopRule | None = None,
        buffer: float | None = None,
        magnitude_ceiling: float | None = None,
        stop_z_floor: float = _STOP_Z_FLOOR,
        batch: int = _BATCH,
    ):
        if sites.dim != 1:
            raise ConfigError("shape-function construction is implemented in one dimension only")
        d = link.d
        if 1.0 - d < _MIN_ONE_MINUS_D:
            raise SimulationRefusal(
                f"link sensitivity d={d} too close to 1: the margin location "
                "-log(1-d) diverges and the event stream cannot be truncated"
            )
        if d > 0 and magnitude_ceiling is None:
            raise SimulationRefusal(
                "d > 0 makes the density scale grow without bound for large "
                "magnitudes; an acceptable simulation needs an explicit "
                "magnitude ceiling (magnitude_ceiling=...)"
            )
        self.sites = sites
        self.family = family
        self.link = link
        self.ceiling = magnitude_ceiling
        self.stop_z_floor = float(stop_z_floor)
        self._peak_offset = peak_offset(family)

        # the largest density scale any event that can still matter may have
        m_floor = (self.stop_z_floor - d * link.c - self._peak_offset) / (1.0 - d)
        if d > 0:
            s_max = float(scale_from_magnitude(magnitude_ceiling, link))
        elif d < 0:
            s_max = float(scale_from_magnitude(m_floor, link))
        else:
            s_max = 1.0
        self.s_max = s_max
        required = _BUFFER_SDS * s_max
        if buffer is None:
            buffer = required
        elif buffer < required:
            raise SimulationRefusal(
                f"window buffer {buffer} smaller than {_BUFFER_SDS} x the largest "
                f"admissible density scale ({required:.3g}); edge effects would "
                "corrupt the margins"
            )
        self.buffer = float(buffer)
        x = sites.coords[:, 0]
        self.window = (float(x.min()) - self.buffer, float(x.max()) + self.buffer)
        self.rule = rule if rule is not None else StopRule(0.0)
        self.batch = int(batch)

    def simulate_one(self, rng: np.random.Generator) -> tuple[np.ndarray, dict]:
        x = self.sites.coords[:, 0]
        stream = SpatialEventStream(rng, self.window[0], self.window[1])
        z = np.full(x.size, -np.inf)
        c, d = self.link.c, self.link.d
        a_off = self._peak_offset
        cap_hit = False
        dropped = 0
        m_last = math.inf
        while True:
            size = min(self.batch, self.rule.max_events - stream.count)
            if size <= 0:
                cap_hit = True
                break
            m, y = stream.next_batch(size)
            y = y[:, 0]
            if self.ceiling is not None and m[0] > self.ceiling:
                keep = m <= self.ceiling
                dropped += int(np.sum(~keep))
                m_kept, y_kept = m[keep], y[keep]
            else:
                m_kept, y_kept = m, y
            if m_kept.size:
                s = np.exp(d * (m_kept - c))
                logf = _log_density_grid(self.family, x, y_kept, s)
                np.maximum(z, (m_kept[:, None] + logf).max(axis=0), out=z)
            m_last = float(m[-1])
            peak_bound = a_off - d * (m_last - c)
            if should_stop(m_last, float(z.min()), self.rule, bound=peak_bound):
                break
        meta = {
            "construction": f"shape-{self.family.value}",
            "events": stream.count,
            "cap_hit": cap_hit,
            "dropped_above_ceiling": dropped,
            "last_magnitude": m_last,
            "window": self.window,
            "s_max": self.s_max,
        }
        return z, meta

    def config_snapshot(self) -> dict:
        return {
            "construction": "shape",
            "family": self.family.value,
            "link_c": self.link.c,
            "link_d": self.link.d,
            "buffer": self.buffer,
            "window": list(self.window),
            "magnitude_ceiling": self.ceiling,
            "stop_z_floor": self.stop_z_floor,
            "max_events": self.rule.max_events,
            "sites": self.sites.coords.tolist(),
        }

    def extra_meta(self, aggregate: dict) -> dict:
        return {"largest_admissible_scale": self.s_max}


def _log_density_grid(
    family: ShapeFamily, x: np.ndarray, y: np.ndarray, s: np.ndarray
) -> np.ndarray:
    """log f(x_j - y_i; s_i) as an (events, sites) array, inlined for speed."""
    u = x[None, :] - y[:, None]
    s = s[:, None]
    if family is ShapeFamily.GAUSS:
        return -np.log(s * math.sqrt(2.0 * math.pi)) - (u * u) / (2.0 * s * s)
    if family is ShapeFamily.LAPLACE:
        beta = s / math.sqrt(2.0)
        return -np.log(2.0 * beta) - np.abs(u) / beta
    w = s * math.sqrt(3.0)
    with np.errstate(divide="ignore"):
        return np.where(np.abs(u) <= w, -np.log(2.0 * w), -np.inf)


def block_maxima(simulator: Simulator, k: int, rng: np.random.Generator) -> FieldRealization:
    """Componentwise maximum of k independent realizations.

    All k draws consume the given stream sequentially, so runs at nested
    block sizes with the same stream are monotonically coupled.
    """
    if k < 1:
        raise ConfigError("block size k must be >= 1")
    z, meta = simulator.simulate_one(rng)
    events = meta["events"]
    cap = meta["cap_hit"]
    dropped = meta.get("dropped_above_ceiling", 0)
    m_dev = meta.get("m_abs_dev", 0.0)
    for _ in range(k - 1):
        z_i, meta_i = simulator.simulate_one(rng)
        np.maximum(z, z_i, out=z)
        events += meta_i["events"]
        cap = cap or meta_i["cap_hit"]
        dropped += meta_i.get("dropped_above_ceiling", 0)
        m_dev = max(m_dev, meta_i.get("m_abs_dev", 0.0))
    meta = dict(meta, events=events, cap_hit=cap, k=k)
    if "dropped_above_ceiling" in meta:
        meta["dropped_above_ceiling"] = dropped
    if "m_abs_dev" in meta:
        meta["m_abs_dev"] = m_dev
    return FieldRealization(z=z, k=k, meta=meta)


def simulate_sample(
    simulator: Simulator,
    k: int,
    n: int,
    seed: int,
    n_workers: int = 1,
    rep_offset: int = 0,
) -> MaximaSample:
    """n independent block-maxima replicates on streams (seed, rep_offset..).

    Deterministic for a fixed seed regardless of n_workers; replicate i
    always lands in row i.
    """
    if n < 1:
        raise ConfigError("sample size n must be >= 1")
    p = len(simulator.sites)
    rows = np.empty((n, p))
    agg = {"events": 0, "cap_hits": 0, "dropped_above_ceiling": 0, "m_abs_dev": 0.0}

    def run_range(lo: int, hi: int) -> None:
        for r in range(lo, hi):
            rng = spawn_stream(seed, rep_offset + r).gen
            real = block_maxima(simulator, k, rng)
            rows[r] = real.z
            agg["events"] += real.meta["events"]
            agg["cap_hits"] += int(real.meta["cap_hit"])
            agg["dropped_above_ceiling"] += real.meta.get("dropped_above_ceiling", 0)
            agg["m_abs_dev"] = max(agg["m_abs_dev"], real.meta.get("m_abs_dev", 0.0))

    n_workers = max(1, int(n_workers))
    if n_workers == 1 or n < 2 * n_workers:
        run_range(0, n)
    else:
        edges = np.linspace(0, n, n_workers + 1).astype(int)
        with concurrent.futures.ThreadPoolExecutor(max_workers=n_workers) as pool:
            futures = [
                pool.submit(run_range, int(lo), int(hi))
                for lo, hi in zip(edges[:-1], edges[1:])
                if hi > lo
            ]
            for fut in futures:
                fut.result()

    meta = dict(agg)
    meta.update(simulator.extra_meta(agg))
    meta["rep_offset"] = rep_offset
    return MaximaSample(
        rows=rows, k=k, config=simulator.config_snapshot(), seed=seed, meta=meta
    )


def write_sample_csv(sample: MaximaSample, path) -> None:
    """CSV with header rep,k,site_0,...,site_{p-1}, one row per replicate."""
    p = sample.n_sites
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rep", "k"] + [f"site_{j}" for j in range(p)])
        for r in range(sample.n):
            writer.writerow(
                [str(r), str(sample.k)] + [f"{v:.17g}" for v in sample.rows[r]]
            )


def read_sample_csv(path) -> MaximaSample:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["rep", "k"]:
            raise ConfigError(f"{path}: expected header rep,k,site_0,...")
        p = len(header) - 2
        rows, ks = [], set()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != p + 2:
                raise ConfigError(f"{path}: row {lineno}: expected {p + 2} columns")
            try:
                ks.add(int(row[1]))
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise ConfigError(f"{path}: row {lineno}: {exc}") from None
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    if len(ks) != 1:
        raise ConfigError(f"{path}: mixed block sizes in one file: {sorted(ks)}")
    return MaximaSample(
        rows=np.asarray(rows), k=ks.pop(), config={}, seed=-1, meta={"source": str(path)}
    )


def write_sample_metadata(sample: MaximaSample, path) -> None:
    doc = {
        "k": sample.k,
        "n": sample.n,
        "seed": sample.seed,
        "config": sample.config,
        "diagnostics": sample.meta,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
