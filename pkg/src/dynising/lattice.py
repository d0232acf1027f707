"""Triangular-lattice geometry: coordinates, adjacency, and finite regions.

Sites are pairs of integers (k, m) standing for the point k + m*e^{i pi/3}
in the plane.  Every region here is finite; regions know their bounding box
and expose a dense boolean mask so that simulation kernels can work on flat
arrays.  The row-major index map (k-major, then m) is internal and never
serialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Tuple

import numpy as np

Site = Tuple[int, int]

ORIGIN: Site = (0, 0)

#: The six neighbor offsets, in cyclic (counterclockwise) order around a site.
NEIGHBOR_OFFSETS: tuple[Site, ...] = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))

SQRT3_2 = math.sqrt(3.0) / 2.0


def embed(x: Site) -> tuple[float, float]:
    """Euclidean embedding of a site: (k + m/2, m*sqrt(3)/2)."""
    k, m = x
    return (k + 0.5 * m, SQRT3_2 * m)


def neighbors(x: Site) -> list[Site]:
    """The six lattice neighbors of x, exactly the sites at Euclidean distance 1."""
    k, m = x
    return [(k + dk, m + dm) for dk, dm in NEIGHBOR_OFFSETS]


def are_adjacent(x: Site, y: Site) -> bool:
    return (y[0] - x[0], y[1] - x[1]) in _OFFSET_SET


_OFFSET_SET = frozenset(NEIGHBOR_OFFSETS)


def _cheb(x: Site, center: Site) -> int:
    return max(abs(x[0] - center[0]), abs(x[1] - center[1]))


class Region:
    """A finite set of sites.  Subclasses define membership; this base class
    provides iteration, masks, and set-style helpers shared by all variants."""

    center: Site

    def contains(self, x: Site) -> bool:
        raise NotImplementedError

    def bbox(self) -> tuple[int, int, int, int]:
        """(kmin, kmax, mmin, mmax) of the bounding rhombus."""
        raise NotImplementedError

    def __contains__(self, x: Site) -> bool:
        return self.contains(x)

    def __iter__(self) -> Iterator[Site]:
        kmin, kmax, mmin, mmax = self.bbox()
        for k in range(kmin, kmax + 1):
            for m in range(mmin, mmax + 1):
                if self.contains((k, m)):
                    yield (k, m)

    def sites(self) -> list[Site]:
        return list(self)

    def site_count(self) -> int:
        return int(self.mask().sum())

    def grid_origin(self) -> Site:
        kmin, _, mmin, _ = self.bbox()
        return (kmin, mmin)

    def grid_shape(self) -> tuple[int, int]:
        kmin, kmax, mmin, mmax = self.bbox()
        return (kmax - kmin + 1, mmax - mmin + 1)

    def mask(self) -> np.ndarray:
        """uint8 mask over the bounding box; mask[k - kmin, m - mmin] == 1 iff in region."""
        if getattr(self, "_mask", None) is None:
            kmin, kmax, mmin, mmax = self.bbox()
            mk = np.zeros((kmax - kmin + 1, mmax - mmin + 1), dtype=np.uint8)
            for k in range(kmin, kmax + 1):
                for m in range(mmin, mmax + 1):
                    if self.contains((k, m)):
                        mk[k - kmin, m - mmin] = 1
            self._mask = mk
        return self._mask

    def index_of(self, x: Site) -> tuple[int, int]:
        """Grid index of a site within the bounding box (raises if outside the region)."""
        if not self.contains(x):
            raise ValueError(f"site {x} is not in the region")
        k0, m0 = self.grid_origin()
        return (x[0] - k0, x[1] - m0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Region):
            return NotImplemented
        return set(self) == set(other)

    def __hash__(self):
        return hash(frozenset(self))


@dataclass(eq=False)
class Rhombus(Region):
    """Lambda_n(center): all sites with both coordinate offsets in [-n, n]."""

    center: Site = ORIGIN
    n: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("rhombus size must be >= 0")
        self._mask = None

    def contains(self, x: Site) -> bool:
        return _cheb(x, self.center) <= self.n

    def bbox(self):
        ck, cm = self.center
        return (ck - self.n, ck + self.n, cm - self.n, cm + self.n)

    def mask(self):
        if self._mask is None:
            s = 2 * self.n + 1
            self._mask = np.ones((s, s), dtype=np.uint8)
        return self._mask

    def __repr__(self):
        return f"Rhombus(center={self.center}, n={self.n})"


@dataclass(eq=False)
class ElongatedRhombus(Region):
    """Lambda_{m,n}(center): k-offset in [-m, m], m-offset in [-n, n]."""

    center: Site = ORIGIN
    m: int = 1
    n: int = 1

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError("elongated rhombus sides must be >= 0")
        self._mask = None

    def contains(self, x: Site) -> bool:
        ck, cm = self.center
        return abs(x[0] - ck) <= self.m and abs(x[1] - cm) <= self.n

    def bbox(self):
        ck, cm = self.center
        return (ck - self.m, ck + self.m, cm - self.n, cm + self.n)

    def __repr__(self):
        return f"ElongatedRhombus(center={self.center}, m={self.m}, n={self.n})"


@dataclass(eq=False)
class Annulus(Region):
    """Lambda_n(center) minus Lambda_{m-1}(center), for n >= m >= 1."""

    center: Site = ORIGIN
    m: int = 1
    n: int = 1

    def __post_init__(self):
        if not (self.n >= self.m >= 1):
            raise ValueError("annulus requires n >= m >= 1")
        self._mask = None

    def contains(self, x: Site) -> bool:
        d = _cheb(x, self.center)
        return self.m <= d <= self.n

    def bbox(self):
        ck, cm = self.center
        return (ck - self.n, ck + self.n, cm - self.n, cm + self.n)

    def __repr__(self):
        return f"Annulus(center={self.center}, m={self.m}, n={self.n})"


@dataclass(eq=False)
class HalfPlaneAnnulus(Region):
    """The part of Annulus(center, m, n) in the closed upper half-plane
    through the center (embedding y >= center's y, i.e. m-offset >= 0)."""

    center: Site = ORIGIN
    m: int = 1
    n: int = 1

    def __post_init__(self):
        if not (self.n >= self.m >= 1):
            raise ValueError("half-plane annulus requires n >= m >= 1")
        self._mask = None

    def contains(self, x: Site) -> bool:
        d = _cheb(x, self.center)
        return self.m <= d <= self.n and x[1] >= self.center[1]

    def bbox(self):
        ck, cm = self.center
        return (ck - self.n, ck + self.n, cm, cm + self.n)

    def __repr__(self):
        return f"HalfPlaneAnnulus(center={self.center}, m={self.m}, n={self.n})"


class ExplicitRegion(Region):
    """An arbitrary finite set of sites."""

    def __init__(self, sites: Iterable[Site]):
        self._sites = frozenset((int(k), int(m)) for k, m in sites)
        if not self._sites:
            raise ValueError("explicit region must be nonempty")
        ks = [s[0] for s in self._sites]
        ms = [s[1] for s in self._sites]
        self._bbox = (min(ks), max(ks), min(ms), max(ms))
        self.center = ORIGIN if ORIGIN in self._sites else next(iter(sorted(self._sites)))
        self._mask = None

    def contains(self, x: Site) -> bool:
        return x in self._sites

    def bbox(self):
        return self._bbox

    def sites(self) -> list[Site]:
        return sorted(self._sites)

    def __iter__(self):
        return iter(self.sites())

    def __repr__(self):
        return f"ExplicitRegion({sorted(self._sites)!r})"


def boundary(region: Region) -> set[Site]:
    """Sites of the region with at least one neighbor outside it."""
    out = set()
    for x in region:
        for y in neighbors(x):
            if not region.contains(y):
                out.add(x)
                break
    return out


def exterior_boundary(region: Region) -> set[Site]:
    """Sites outside the region adjacent to at least one site inside it."""
    out = set()
    for x in region:
        for y in neighbors(x):
            if not region.contains(y):
                out.add(y)
    return out


def thicken(region: Region, delta: float) -> Region:
    """Blow up a (possibly elongated) rhombus by 1+delta, taking the ceiling
    of each new half-side."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if isinstance(region, Rhombus):
        return Rhombus(region.center, math.ceil((1.0 + delta) * region.n))
    if isinstance(region, ElongatedRhombus):
        return ElongatedRhombus(
            region.center,
            math.ceil((1.0 + delta) * region.m),
            math.ceil((1.0 + delta) * region.n),
        )
    raise TypeError("thicken applies to Rhombus and ElongatedRhombus only")


def rhombus_ring(center: Site, r: int) -> list[Site]:
    """The boundary ring of Lambda_r(center) walked cyclically (8r sites for
    r >= 1, just [center] for r = 0).  Order: right side upward, top side
    leftward, left side downward, bottom side rightward."""
    if r == 0:
        return [center]
    ck, cm = center
    ring = []
    ring.extend((ck + r, cm + d) for d in range(-r, r + 1))
    ring.extend((ck + d, cm + r) for d in range(r - 1, -r - 1, -1))
    ring.extend((ck - r, cm + d) for d in range(r - 1, -r - 1, -1))
    ring.extend((ck + d, cm - r) for d in range(-r + 1, r))
    return ring


def neighbor_ring(center: Site) -> list[Site]:
    """The six neighbors of a site in cyclic order around it."""
    return neighbors(center)


def parse_region(text: str) -> Region:
    """Parse the CLI/config region literal syntax.

    Forms: ``rhombus:cx,cy,n``  ``elong:cx,cy,m,n``  ``annulus:cx,cy,m,n``
    ``halfann:cx,cy,m,n``.
    """
    try:
        kind, rest = text.split(":", 1)
        nums = [int(v) for v in rest.split(",")]
    except ValueError as exc:
        raise ValueError(f"bad region literal {text!r}") from exc
    kind = kind.strip().lower()
    if kind == "rhombus" and len(nums) == 3:
        return Rhombus((nums[0], nums[1]), nums[2])
    if kind == "elong" and len(nums) == 4:
        return ElongatedRhombus((nums[0], nums[1]), nums[2], nums[3])
    if kind == "annulus" and len(nums) == 4:
        return Annulus((nums[0], nums[1]), nums[2], nums[3])
    if kind == "halfann" and len(nums) == 4:
        return HalfPlaneAnnulus((nums[0], nums[1]), nums[2], nums[3])
    raise ValueError(f"bad region literal {text!r}")
