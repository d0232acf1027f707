"""Static Ising model on finite triangular-lattice regions.

Energies and heat-bath rates with free/plus/minus/mixed boundary conditions,
exact measures by enumeration on small regions, and equilibrium samplers
(exact inversion, Wolff cluster, heat-bath burn-in, and a hybrid default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from . import _kernels as K
from .lattice import Region, Site, exterior_boundary, neighbors

__all__ = [
    "BoundaryCondition",
    "FREE",
    "PLUS",
    "MINUS",
    "ModelParams",
    "SpinConfig",
    "ExactMeasure",
    "beta_c",
    "energy",
    "rate",
    "exact_measure",
    "sample_equilibrium",
    "rate_tables",
]

ENUMERATION_CAP = 20


def beta_c() -> float:
    """The exactly known critical inverse temperature of the triangular
    lattice, ln(3)/4."""
    return math.log(3.0) / 4.0


@dataclass(frozen=True)
class ModelParams:
    """Model parameters; just the inverse temperature (no external field)."""

    beta: float

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")


class BoundaryCondition:
    """Free, all-plus, all-minus, or site-by-site mixed boundary condition.

    Mixed values live in {-1, 0, +1}; a 0 decouples that boundary site.  For
    mixed conditions the keys must cover the exterior boundary of the region
    exactly."""

    def __init__(self, kind: str, values: Optional[Mapping[Site, int]] = None):
        if kind not in ("free", "plus", "minus", "mixed"):
            raise ValueError(f"unknown boundary condition kind {kind!r}")
        if kind == "mixed":
            if values is None:
                raise ValueError("mixed boundary condition needs values")
            bad = [v for v in values.values() if v not in (-1, 0, 1)]
            if bad:
                raise ValueError("mixed boundary values must be in {-1, 0, +1}")
            values = dict(values)
        self.kind = kind
        self.values = values

    def __repr__(self):
        return f"BoundaryCondition({self.kind!r})"

    def validate(self, region: Region) -> None:
        if self.kind == "mixed":
            ext = exterior_boundary(region)
            keys = set(self.values.keys())
            if keys != ext:
                raise ValueError(
                    "mixed boundary condition keys must cover the exterior "
                    f"boundary exactly ({len(keys)} keys vs {len(ext)} sites)"
                )

    def value_at(self, y: Site) -> int:
        if self.kind == "free":
            return 0
        if self.kind == "plus":
            return 1
        if self.kind == "minus":
            return -1
        return int(self.values[y])

    def ext_grids(self, region: Region):
        """(ext, extp, extn): per-cell sum of fixed exterior-neighbor spins,
        and counts of +1 / -1 fixed exterior neighbors."""
        shape = region.grid_shape()
        ext = np.zeros(shape, dtype=np.int8)
        extp = np.zeros(shape, dtype=np.uint8)
        extn = np.zeros(shape, dtype=np.uint8)
        if self.kind == "free":
            return ext, extp, extn
        self.validate(region)
        k0, m0 = region.grid_origin()
        for x in region:
            s = 0
            p = 0
            q = 0
            for y in neighbors(x):
                if not region.contains(y):
                    v = self.value_at(y)
                    s += v
                    if v > 0:
                        p += 1
                    elif v < 0:
                        q += 1
            i, j = x[0] - k0, x[1] - m0
            ext[i, j] = s
            extp[i, j] = p
            extn[i, j] = q
        return ext, extp, extn


FREE = BoundaryCondition("free")
PLUS = BoundaryCondition("plus")
MINUS = BoundaryCondition("minus")


class SpinConfig:
    """A +-1 assignment over a region, stored densely over its bounding box
    (0 marks cells outside the region)."""

    def __init__(self, region: Region, grid: np.ndarray):
        if grid.shape != region.grid_shape():
            raise ValueError("grid shape does not match the region bounding box")
        self.region = region
        self.grid = grid

    @classmethod
    def constant(cls, region: Region, value: int) -> "SpinConfig":
        if value not in (-1, 1):
            raise ValueError("spin value must be +-1")
        grid = np.where(region.mask() > 0, np.int8(value), np.int8(0))
        return cls(region, grid.astype(np.int8))

    @classmethod
    def from_mapping(cls, region: Region, spins: Mapping[Site, int]) -> "SpinConfig":
        cfg = cls.constant(region, 1)
        for x in region:
            cfg.set_spin(x, spins[x])
        return cfg

    def copy(self) -> "SpinConfig":
        return SpinConfig(self.region, self.grid.copy())

    def spin(self, x: Site) -> int:
        i, j = self.region.index_of(x)
        return int(self.grid[i, j])

    def set_spin(self, x: Site, value: int) -> None:
        if value not in (-1, 1):
            raise ValueError("spin value must be +-1")
        i, j = self.region.index_of(x)
        self.grid[i, j] = value

    def with_flip(self, x: Site) -> "SpinConfig":
        out = self.copy()
        i, j = self.region.index_of(x)
        out.grid[i, j] = -out.grid[i, j]
        return out

    def with_value(self, x: Site, value: int) -> "SpinConfig":
        out = self.copy()
        out.set_spin(x, value)
        return out

    def __eq__(self, other):
        if not isinstance(other, SpinConfig):
            return NotImplemented
        return self.region == other.region and np.array_equal(self.grid, other.grid)

    def to_text(self) -> str:
        """Row-major text block: one line per k row, '+'/'-' per in-region
        site and '.' outside, over the bounding box."""
        chars = {1: "+", -1: "-", 0: "."}
        return "\n".join("".join(chars[int(v)] for v in row) for row in self.grid)

    @classmethod
    def from_text(cls, region: Region, text: str) -> "SpinConfig":
        rows = text.strip("\n").split("\n")
        shape = region.grid_shape()
        if len(rows) != shape[0] or any(len(r) != shape[1] for r in rows):
            raise ValueError("text block does not match the region bounding box")
        lut = {"+": 1, "-": -1, ".": 0}
        grid = np.array([[lut[c] for c in row] for row in rows], dtype=np.int8)
        mask = region.mask()
        if np.any((grid != 0) != (mask > 0)):
            raise ValueError("text block does not match the region mask")
        return cls(region, grid)


def rate_tables(beta: float):
    """(ctab, ptab): ctab[eta_x*S + 6] is the heat-bath flip probability,
    ptab[S + 6] the probability the resampled spin is +1, for neighbor sum S."""
    s = np.arange(-6, 7, dtype=np.float64)
    ctab = 1.0 / (1.0 + np.exp(2.0 * beta * s))
    ptab = 1.0 / (1.0 + np.exp(-2.0 * beta * s))
    return ctab, ptab


def _edge_pairs(region: Region):
    """Index pairs (in row-major site order) of the in-region edges, counting
    each edge once via the offsets (1,0), (0,1), (-1,1)."""
    sites = region.sites()
    index = {x: i for i, x in enumerate(sites)}
    pairs = []
    for x in sites:
        for dk, dm in ((1, 0), (0, 1), (-1, 1)):
            y = (x[0] + dk, x[1] + dm)
            if y in index:
                pairs.append((index[x], index[y]))
    return sites, pairs


def energy(cfg: SpinConfig, bc: BoundaryCondition = FREE) -> float:
    """H^xi: minus the sum of in-region edge products, minus the coupling of
    boundary sites to their fixed exterior spins (free drops the second sum)."""
    region = cfg.region
    mask = region.mask().astype(bool)
    g = cfg.grid.astype(np.int64)
    e = 0
    K_, M_ = g.shape
    for dk, dm in ((1, 0), (0, 1), (-1, 1)):
        a_i = slice(max(0, -dk), K_ - max(0, dk))
        a_j = slice(max(0, -dm), M_ - max(0, dm))
        b_i = slice(max(0, dk), K_ + min(0, dk))
        b_j = slice(max(0, dm), M_ + min(0, dm))
        both = mask[a_i, a_j] & mask[b_i, b_j]
        e += int(np.sum(g[a_i, a_j] * g[b_i, b_j] * both))
    h = 0
    if bc.kind != "free":
        ext, _, _ = bc.ext_grids(region)
        h = int(np.sum(g * ext.astype(np.int64)))
    return float(-(e + h))


def rate(cfg: SpinConfig, x: Site, bc: BoundaryCondition = FREE, params: ModelParams = None) -> float:
    """Heat-bath rate c_x = 1 / (1 + exp(2 beta sum_y eta_x eta_y)); fixed
    exterior spins enter the neighbor sum with their boundary value."""
    if params is None:
        raise ValueError("params required")
    if not cfg.region.contains(x):
        raise ValueError(f"site {x} outside the region")
    sx = cfg.spin(x)
    S = 0
    for y in neighbors(x):
        if cfg.region.contains(y):
            S += cfg.spin(y)
        else:
            S += bc.value_at(y)
    return 1.0 / (1.0 + math.exp(2.0 * params.beta * sx * S))


class ExactMeasure:
    """The Boltzmann distribution over all 2^|V| configurations of a small
    region, enumerated as bit states (bit i set means spin +1 at sites[i],
    row-major site order)."""

    def __init__(self, region: Region, bc: BoundaryCondition, params: ModelParams, cap: int = ENUMERATION_CAP):
        nsites = region.site_count()
        if nsites > cap:
            raise ValueError(f"region has {nsites} sites, enumeration cap is {cap}")
        bc.validate(region)
        self.region = region
        self.bc = bc
        self.params = params
        self.sites, pairs = _edge_pairs(region)
        n = len(self.sites)
        states = np.arange(1 << n, dtype=np.int64)
        E = np.zeros(1 << n, dtype=np.float64)
        for a, b in pairs:
            agree = ((states >> a) ^ (states >> b)) & 1
            E -= 1.0 - 2.0 * agree
        if bc.kind != "free":
            for i, x in enumerate(self.sites):
                w = sum(bc.value_at(y) for y in neighbors(x) if not region.contains(y))
                if w != 0:
                    sx = 2.0 * ((states >> i) & 1) - 1.0
                    E -= sx * w
        self.energies = E
        logw = -params.beta * E
        logw -= logw.max()
        w = np.exp(logw)
        self.probs = w / w.sum()
        self._cum = None
        self._site_index = {x: i for i, x in enumerate(self.sites)}

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def state_of(self, cfg: SpinConfig) -> int:
        s = 0
        for i, x in enumerate(self.sites):
            if cfg.spin(x) > 0:
                s |= 1 << i
        return s

    def config_of(self, state: int) -> SpinConfig:
        cfg = SpinConfig.constant(self.region, -1)
        for i, x in enumerate(self.sites):
            if (state >> i) & 1:
                cfg.set_spin(x, 1)
        return cfg

    def prob(self, cfg: SpinConfig) -> float:
        return float(self.probs[self.state_of(cfg)])

    def spin_column(self, x: Site) -> np.ndarray:
        """Vector of the spin at x (+-1) over all states."""
        i = self._site_index[x]
        states = np.arange(1 << self.n_sites, dtype=np.int64)
        return (2.0 * ((states >> i) & 1) - 1.0).astype(np.float64)

    def indicator(self, predicate: Callable[[SpinConfig], bool]) -> np.ndarray:
        """Indicator vector of an event over all states (enumerates configs;
        tiny regions only)."""
        out = np.zeros(1 << self.n_sites, dtype=np.float64)
        for s in range(1 << self.n_sites):
            if predicate(self.config_of(s)):
                out[s] = 1.0
        return out

    def expectation(self, values: np.ndarray) -> float:
        return float(np.dot(self.probs, values))

    def sample_state(self, rng: np.random.Generator) -> int:
        if self._cum is None:
            self._cum = np.cumsum(self.probs)
        u = rng.random()
        return int(np.searchsorted(self._cum, u, side="right"))

    def sample(self, rng: np.random.Generator) -> SpinConfig:
        return self.config_of(self.sample_state(rng))


def exact_measure(region: Region, bc: BoundaryCondition = FREE, params: ModelParams = None,
                  cap: int = ENUMERATION_CAP) -> ExactMeasure:
    if params is None:
        raise ValueError("params required")
    return ExactMeasure(region, bc, params, cap=cap)


def _uniform_config(region: Region, rng: np.random.Generator) -> SpinConfig:
    cfg = SpinConfig.constant(region, 1)
    K.random_spins(cfg.grid, region.mask(), _seed64(rng))
    return cfg


def _seed64(rng: np.random.Generator) -> int:
    return int(rng.integers(0, np.iinfo(np.int64).max, dtype=np.int64))


def sample_equilibrium(region: Region, bc: BoundaryCondition, params: ModelParams,
                       method: str, rng: np.random.Generator, *,
                       cluster_updates: Optional[int] = None,
                       cluster_warmup: int = 100,
                       sweeps: Optional[int] = None,
                       hybrid_sweeps: int = 24,
                       hybrid_updates: Optional[int] = None,
                       measure: Optional[ExactMeasure] = None) -> SpinConfig:
    """Draw an (approximate) equilibrium sample.

    exact   -- perfect sample by table inversion (small regions only)
    cluster -- Wolff cluster updates from a uniform start; default update
               count 10*sqrt(|V|) after 100 warm-up flips
    burnin  -- heat-bath sweeps from a uniform start (default 32 sweeps)
    hybrid  -- heat-bath sweeps followed by Wolff flips; the harness default
    """
    nsites = region.site_count()
    if method == "exact":
        mu = measure if measure is not None else exact_measure(region, bc, params)
        return mu.sample(rng)
    ctab, ptab = rate_tables(params.beta)
    mask = region.mask()
    ext, extp, extn = bc.ext_grids(region)
    padd = 1.0 - math.exp(-2.0 * params.beta)
    cfg = _uniform_config(region, rng)
    if method == "cluster":
        n_up = cluster_updates if cluster_updates is not None else math.ceil(10.0 * math.sqrt(nsites))
        K.wolff_updates(cfg.grid, mask, extp, extn, padd, cluster_warmup + n_up, _seed64(rng))
    elif method == "burnin":
        n_sw = sweeps if sweeps is not None else 32
        K.heat_bath_sweeps(cfg.grid, mask, ext, ptab, n_sw, _seed64(rng))
    elif method == "hybrid":
        K.heat_bath_sweeps(cfg.grid, mask, ext, ptab, hybrid_sweeps, _seed64(rng))
        n_up = hybrid_updates if hybrid_updates is not None else max(100, nsites // 4)
        K.wolff_updates(cfg.grid, mask, extp, extn, padd, n_up, _seed64(rng))
    else:
        raise ValueError(f"unknown equilibrium sampling method {method!r}")
    return cfg
