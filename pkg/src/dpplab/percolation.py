"""Cluster decomposition of the Boolean model and percolation curves.

Points carry closed Euclidean balls of a given radius; two points are
connected when their balls overlap, i.e. when their distance is at most
twice the radius.  Decomposition uses union-find over grid buckets of
cell size 2 * radius, so only the 3^d neighboring cells are scanned.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .geometry import Configuration, Window


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def join(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]


@dataclass(frozen=True)
class ClusterDecomposition:
    """Connected components of the Boolean model over one configuration."""

    coords: np.ndarray
    radius: float
    labels: np.ndarray  # labels[i] = component id, 0..n_clusters-1

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def sizes(self) -> np.ndarray:
        if not self.labels.size:
            return np.zeros(0, dtype=int)
        return np.bincount(self.labels, minlength=self.n_clusters)

    def members(self, cluster: int) -> np.ndarray:
        return self.coords[self.labels == cluster]

    def largest_fraction(self) -> float:
        """Share of points in the largest cluster; 0 for an empty set."""
        if not self.labels.size:
            return 0.0
        return float(self.sizes().max() / self.n_points)


def decompose(config: Configuration, radius: float) -> ClusterDecomposition:
    """Cluster labels for balls of `radius` (distance <= 2*radius connects)."""
    if radius <= 0 or not np.isfinite(radius):
        raise DomainError(f"radius must be positive and finite, got {radius}")
    coords = config.coords
    n = coords.shape[0]
    if n == 0:
        return ClusterDecomposition(coords, float(radius), np.zeros(0, dtype=int))
    link = 2.0 * radius
    cell = link
    keys = np.floor(coords / cell).astype(np.int64)
    buckets: dict[tuple, list[int]] = {}
    for i, key in enumerate(map(tuple, keys)):
        buckets.setdefault(key, []).append(i)
    uf = _UnionFind(n)
    d = coords.shape[1]
    offsets = (
        [(dx,) for dx in (-1, 0, 1)]
        if d == 1
        else [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)]
    )
    link2 = link * link
    for key, members in buckets.items():
        for off in offsets:
            other = tuple(k + o for k, o in zip(key, off))
            if other not in buckets or other < key:
                continue
            cand = buckets[other]
            for i in members:
                for j in cand:
                    if other == key and j <= i:
                        continue
                    diff = coords[i] - coords[j]
                    if float(diff @ diff) <= link2:
                        uf.join(i, j)
    roots = [uf.find(i) for i in range(n)]
    remap: dict[int, int] = {}
    labels = np.empty(n, dtype=int)
    for i, r in enumerate(roots):
        labels[i] = remap.setdefault(r, len(remap))
    return ClusterDecomposition(coords, float(radius), labels)


def hull_of(added: Configuration, given: Configuration, radius: float) -> Configuration:
    """Points of `given` in Boolean clusters of added+given touching `added`.

    This is the configuration part of the hull W(added, given): the union
    of clusters of the joint Boolean model that contain an added point.
    """
    if len(given) == 0:
        return given
    joint = np.concatenate([added.coords, given.coords], axis=0)
    dec = decompose(Configuration.from_coords(joint), radius)
    # Configuration canonicalizes point order, so match labels by value
    label_at = {tuple(row): lab for row, lab in zip(dec.coords, dec.labels)}
    touched = {label_at[tuple(row)] for row in added.coords}
    mask = np.array([label_at[tuple(row)] in touched for row in given.coords])
    return Configuration.from_coords(given.coords[mask], dimension=given.dimension)


def spanning(config: Configuration, window: Window, radius: float, axis: int = 0) -> bool:
    """True when one cluster's balls touch both opposite faces along `axis`."""
    if len(config) == 0:
        return False
    dec = decompose(config, radius)
    lo = window.lower[axis] + radius
    hi = window.upper[axis] - radius
    if hi < lo:
        # window thinner than one ball: any cluster touches both faces
        return True
    x = config.coords[:, axis]
    touch_lo = np.zeros(dec.n_clusters, dtype=bool)
    touch_hi = np.zeros(dec.n_clusters, dtype=bool)
    np.logical_or.at(touch_lo, dec.labels, x <= lo)
    np.logical_or.at(touch_hi, dec.labels, x >= hi)
    return bool(np.any(touch_lo & touch_hi))


@dataclass(frozen=True)
class CurvePoint:
    window: Window
    reps: int
    mean_largest_fraction: float
    se_largest_fraction: float
    spanning_probability: float
    se_spanning: float


def percolation_curve(
    sample: Callable[[Window, int], Sequence[Configuration]],
    radius: float,
    windows: Sequence[Window],
    reps: int,
) -> list[CurvePoint]:
    """Largest-cluster fraction and spanning probability across windows.

    `sample(window, reps)` must return `reps` configurations; seeding is
    the caller's business so processes can be compared on equal terms.
    """
    out = []
    for window in windows:
        configs = sample(window, reps)
        fractions = np.empty(len(configs))
        spans = np.empty(len(configs), dtype=bool)
        for i, cfg in enumerate(configs):
            dec = decompose(cfg, radius)
            fractions[i] = dec.largest_fraction()
            spans[i] = spanning(cfg, window, radius)
        k = len(configs)
        p = float(spans.mean())
        out.append(
            CurvePoint(
                window=window,
                reps=k,
                mean_largest_fraction=float(fractions.mean()),
                se_largest_fraction=float(fractions.std(ddof=1) / np.sqrt(k)) if k > 1 else 0.0,
                spanning_probability=p,
                se_spanning=float(np.sqrt(max(p * (1 - p), 0.0) / k)),
            )
        )
    return out
