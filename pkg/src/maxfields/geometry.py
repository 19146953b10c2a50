"""Site geometry: evaluation points and their pairwise Euclidean distances."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatchError


@dataclass(frozen=True)
class Site:
    """A point in d-dimensional space (abstract length units)."""

    coords: tuple[float, ...]

    def __post_init__(self):
        if len(self.coords) < 1:
            raise ConfigError("a site needs at least one coordinate")
        if not all(np.isfinite(self.coords)):
            raise ConfigError(f"non-finite site coordinates: {self.coords}")

    @property
    def dim(self) -> int:
        return len(self.coords)


def pairwise_distances(coords: np.ndarray) -> np.ndarray:
    """Full symmetric Euclidean distance matrix for an (n, d) coordinate array."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[0] < 1:
        raise ConfigError("expected a non-empty (n_sites, dim) coordinate array")
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


@dataclass
class SiteSet:
    """Ordered evaluation points plus their precomputed distance matrix."""

    sites: list[Site]
    pair_distances: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.sites:
            raise ConfigError("empty site set")
        dims = {s.dim for s in self.sites}
        if len(dims) > 1:
            raise DimensionMismatchError(f"mixed site dimensions: {sorted(dims)}")
        self.pair_distances = pairwise_distances(self.coords)

    @classmethod
    def from_coords(cls, coords) -> "SiteSet":
        arr = np.atleast_2d(np.asarray(coords, dtype=float))
        if arr.shape[0] == 1 and arr.shape[1] > 1 and np.asarray(coords).ndim == 1:
            # a flat list of scalars means n sites on the line
            arr = arr.T
        return cls([Site(tuple(row)) for row in arr])

    @property
    def coords(self) -> np.ndarray:
        return np.array([s.coords for s in self.sites], dtype=float)

    @property
    def dim(self) -> int:
        return self.sites[0].dim

    def __len__(self) -> int:
        return len(self.sites)

    def distance(self, i: int, j: int) -> float:
        return float(self.pair_distances[i, j])

    def pairs(self) -> list[tuple[int, int]]:
        """All unordered site pairs (i < j)."""
        n = len(self)
        return [(i, j) for i in range(n) for j in range(i + 1, n)]


_COL_RE = re.compile(r"^x(\d+)$")


def load_sites_csv(path) -> SiteSet:
    """Read sites from CSV with header ``x1,...,xd``, one row per site."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty sites file") from None
        header = [h.strip() for h in header]
        matches = [_COL_RE.match(h) for h in header]
        if not all(matches) or [int(m.group(1)) for m in matches] != list(
            range(1, len(header) + 1)
        ):
            raise ConfigError(f"{path}: expected header x1,...,xd, got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ConfigError(f"{path}: row {lineno}: expected {len(header)} columns")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ConfigError(f"{path}: row {lineno}: {exc}") from None
    if not rows:
        raise ConfigError(f"{path}: no site rows")
    return SiteSet.from_coords(np.asarray(rows))


def save_sites_csv(siteset: SiteSet, path) -> None:
    coords = siteset.coords
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i + 1}" for i in range(coords.shape[1])])
        for row in coords:
            writer.writerow([f"{v:.17g}" for v in row])
