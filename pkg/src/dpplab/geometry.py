"""Points, finite configurations, and rectangular windows.

Configurations are finite simple point sets in dimension 1 or 2, stored
in lexicographic order so that equality, hashing, and CSV round-trips are
canonical.  Windows are closed axis-aligned boxes.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, DuplicatePoint, DomainError

SUPPORTED_DIMENSIONS = (1, 2)


def as_point(value) -> tuple[float, ...]:
    """Coerce a scalar or coordinate sequence to a point tuple."""
    if np.isscalar(value):
        return (float(value),)
    pt = tuple(float(c) for c in value)
    if len(pt) not in SUPPORTED_DIMENSIONS:
        raise DimensionMismatch(f"points must have dimension 1 or 2, got {len(pt)}")
    if not all(np.isfinite(pt)):
        raise DomainError(f"point has non-finite coordinates: {pt}")
    return pt


@dataclass(frozen=True)
class Window:
    """Closed axis-aligned box [lower_1, upper_1] x ... with d in {1, 2}."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = as_point(self.lower)
        hi = as_point(self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi):
            raise DimensionMismatch(f"window corners disagree: {lo} vs {hi}")
        if any(u <= l for l, u in zip(lo, hi)):
            raise DomainError(f"window must have positive side lengths: {lo}..{hi}")

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Window":
        return cls((float(lo),), (float(hi),))

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "Window":
        return cls(tuple(lo), tuple(hi))

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def sides(self) -> tuple[float, ...]:
        return tuple(u - l for l, u in zip(self.lower, self.upper))

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    def contains(self, coords: np.ndarray) -> np.ndarray:
        """Boolean mask of rows of `coords` lying in the closed box."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if coords.shape[1] != self.dimension:
            raise DimensionMismatch(
                f"points of dimension {coords.shape[1]} in window of dimension {self.dimension}"
            )
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.all((coords >= lo) & (coords <= hi), axis=1)

    def contains_point(self, point) -> bool:
        return bool(self.contains(np.asarray(as_point(point))[None, :])[0])

    def pad(self, margin: float) -> "Window":
        return Window(
            tuple(l - margin for l in self.lower),
            tuple(u + margin for u in self.upper),
        )

    def intersects(self, other: "Window") -> bool:
        if other.dimension != self.dimension:
            raise DimensionMismatch("windows of different dimension")
        return all(
            l1 <= u2 and l2 <= u1
            for l1, u1, l2, u2 in zip(self.lower, self.upper, other.lower, other.upper)
        )


def _lexsort(coords: np.ndarray) -> np.ndarray:
    # lexicographic by first coordinate, then second
    keys = tuple(coords[:, k] for k in reversed(range(coords.shape[1])))
    return np.lexsort(keys)


class Configuration:
    """Immutable finite simple configuration, lexicographically sorted."""

    __slots__ = ("_coords",)

    def __init__(self, points: Iterable = (), dimension: int | None = None):
        rows = [as_point(p) for p in points]
        if rows:
            dims = {len(r) for r in rows}
            if len(dims) > 1:
                raise DimensionMismatch(f"mixed point dimensions: {sorted(dims)}")
            d = dims.pop()
            if dimension is not None and dimension != d:
                raise DimensionMismatch(f"points have dimension {d}, expected {dimension}")
            coords = np.asarray(rows, dtype=float)
            coords = coords[_lexsort(coords)]
            same = np.all(coords[1:] == coords[:-1], axis=1) if len(coords) > 1 else ()
            if len(coords) > 1 and np.any(same):
                i = int(np.argmax(same))
                raise DuplicatePoint(f"coincident points at {tuple(coords[i])}")
        else:
            if dimension is None:
                raise DimensionMismatch("empty configuration needs an explicit dimension")
            if dimension not in SUPPORTED_DIMENSIONS:
                raise DimensionMismatch(f"dimension must be 1 or 2, got {dimension}")
            coords = np.empty((0, dimension), dtype=float)
        coords.flags.writeable = False
        object.__setattr__(self, "_coords", coords)

    def __setattr__(self, name, value):
        raise AttributeError("Configuration is immutable")

    @classmethod
    def empty(cls, dimension: int) -> "Configuration":
        return cls((), dimension=dimension)

    @classmethod
    def from_coords(cls, coords: np.ndarray, dimension: int | None = None) -> "Configuration":
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        return cls((tuple(row) for row in coords), dimension=dimension or coords.shape[1])

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def dimension(self) -> int:
        return self._coords.shape[1]

    def __len__(self) -> int:
        return self._coords.shape[0]

    def __iter__(self) -> Iterator[tuple[float, ...]]:
        return (tuple(row) for row in self._coords)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self._coords.shape == other._coords.shape and bool(
            np.all(self._coords == other._coords)
        )

    def __hash__(self) -> int:
        return hash((self._coords.shape, self._coords.tobytes()))

    def __repr__(self) -> str:
        return f"Configuration({[tuple(row) for row in self._coords]!r})"

    def min_separation(self) -> float:
        """Smallest pairwise Euclidean distance (inf for fewer than 2 points)."""
        if len(self) < 2:
            return float("inf")
        diff = self._coords[:, None, :] - self._coords[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=2))
        np.fill_diagonal(dist, np.inf)
        return float(dist.min())


def restrict(config: Configuration, window: Window) -> Configuration:
    """Sub-configuration of points lying in the closed window."""
    if config.dimension != window.dimension:
        raise DimensionMismatch("configuration and window dimensions differ")
    if len(config) == 0:
        return config
    mask = window.contains(config.coords)
    return Configuration.from_coords(config.coords[mask], dimension=config.dimension)


def union(a: Configuration, b: Configuration) -> Configuration:
    """Disjoint union of two configurations; overlap raises DuplicatePoint."""
    if a.dimension != b.dimension:
        raise DimensionMismatch("configurations of different dimension")
    merged = np.concatenate([a.coords, b.coords], axis=0)
    return Configuration.from_coords(merged, dimension=a.dimension)


def count_in(config: Configuration, window: Window) -> int:
    """Number of configuration points inside the closed window."""
    if len(config) == 0:
        if config.dimension != window.dimension:
            raise DimensionMismatch("configuration and window dimensions differ")
        return 0
    return int(np.sum(window.contains(config.coords)))


_HEADERS = {1: ["x"], 2: ["x", "y"]}


def to_csv(config: Configuration) -> str:
    """Serialize one configuration: header row `x` or `x,y`, one point per row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_HEADERS[config.dimension])
    for row in config.coords:
        writer.writerow([f"{c:.17g}" for c in row])
    return buf.getvalue()


def from_csv(text: str) -> Configuration:
    """Parse the serialization produced by `to_csv`."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DomainError("empty CSV: missing header row")
    header = [h.strip() for h in header]
    if header not in (_HEADERS[1], _HEADERS[2]):
        raise DomainError(f"unrecognized configuration header: {header}")
    d = len(header)
    points = []
    for row in reader:
        if not row:
            continue
        if len(row) != d:
            raise DimensionMismatch(f"row {row} does not match header {header}")
        try:
            points.append(tuple(float(c) for c in row))
        except ValueError:
            raise DomainError(f"non-numeric coordinate in row {row}")
    return Configuration(points, dimension=d)


def write_csv(config: Configuration, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_csv(config))


def read_csv(path) -> Configuration:
    with open(path, "r", encoding="utf-8") as fh:
        return from_csv(fh.read())
