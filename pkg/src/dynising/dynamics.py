"""Glauber dynamics: ring schedules, trajectory evolution, coupled
trajectories, green/red sets and clusters, the decoupling event, and the
finite-energy/time constants.

A ring schedule is the full randomness of one run besides the initial
configuration: per-site rate-1 Poisson clock times up to a horizon, each with
an attached uniform.  Trajectories are deterministic given (sigma_0, schedule).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Set

import numpy as np

from . import _kernels as K
from .ising import FREE, BoundaryCondition, ModelParams, SpinConfig, rate_tables
from .lattice import Region, Site, neighbors

__all__ = [
    "RingSchedule",
    "PairSample",
    "Constants",
    "make_schedule",
    "simulate",
    "coupled_simulate",
    "green_set",
    "green_cluster",
    "red_set",
    "red_cluster",
    "dec_event",
    "constants",
]


class RingSchedule:
    """Per-site clock-ring times with attached uniforms, stored as one merged
    time-ordered stream (equivalent in law to per-site clocks; the shared
    stream is what makes the coupled trajectories meaningful)."""

    def __init__(self, region: Region, horizon: float,
                 idx_i: np.ndarray, idx_j: np.ndarray,
                 times: np.ndarray, uniforms: np.ndarray):
        self.region = region
        self.horizon = float(horizon)
        self.idx_i = idx_i
        self.idx_j = idx_j
        self.times = times
        self.uniforms = uniforms

    def __len__(self) -> int:
        return int(self.times.size)

    def validate(self) -> None:
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if np.any(self.times < 0) or np.any(self.times > self.horizon):
            raise ValueError("ring times must lie in [0, horizon]")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("rings must be globally time-sorted")
        if np.any((self.uniforms < 0) | (self.uniforms > 1)):
            raise ValueError("uniforms must lie in [0, 1]")
        # strictly increasing per site
        flat = self.idx_i.astype(np.int64) * self.region.grid_shape()[1] + self.idx_j
        order = np.lexsort((self.times, flat))
        ft = flat[order]
        tt = self.times[order]
        same = ft[1:] == ft[:-1]
        if np.any(same & (np.diff(tt) <= 0)):
            raise ValueError("ring times must be strictly increasing per site")

    def ring_counts(self, upto: Optional[float] = None) -> np.ndarray:
        """int64 grid of ring counts per cell up to a cutoff (default horizon)."""
        cut = self.horizon if upto is None else float(upto)
        shape = self.region.grid_shape()
        counts = np.zeros(shape, dtype=np.int64)
        sel = self.times <= cut
        np.add.at(counts, (self.idx_i[sel], self.idx_j[sel]), 1)
        return counts

    def to_text(self) -> str:
        """Line-per-ring replay format: ``site_k site_m time uniform``."""
        k0, m0 = self.region.grid_origin()
        lines = [
            f"{k0 + int(i)} {m0 + int(j)} {float(t)!r} {float(u)!r}"
            for i, j, t, u in zip(self.idx_i, self.idx_j, self.times, self.uniforms)
        ]
        return "\n".join(lines)

    @classmethod
    def from_text(cls, region: Region, horizon: float, text: str) -> "RingSchedule":
        k0, m0 = region.grid_origin()
        ii, jj, tt, uu = [], [], [], []
        for line in text.strip().splitlines():
            if not line.strip():
                continue
            k_s, m_s, t_s, u_s = line.split()
            x = (int(k_s), int(m_s))
            i, j = region.index_of(x)
            ii.append(i)
            jj.append(j)
            tt.append(float(t_s))
            uu.append(float(u_s))
        sched = cls(region, horizon,
                    np.asarray(ii, dtype=np.int32), np.asarray(jj, dtype=np.int32),
                    np.asarray(tt, dtype=np.float64), np.asarray(uu, dtype=np.float64))
        order = np.argsort(sched.times, kind="stable")
        sched.idx_i = sched.idx_i[order]
        sched.idx_j = sched.idx_j[order]
        sched.times = sched.times[order]
        sched.uniforms = sched.uniforms[order]
        sched.validate()
        return sched


@dataclass
class PairSample:
    """(sigma_0, sigma_t) with the schedule optionally retained for green/red
    analysis."""

    sigma0: SpinConfig
    sigmaT: SpinConfig
    t: float
    schedule: Optional[RingSchedule] = None

    def validate(self, bc: BoundaryCondition = FREE, params: Optional[ModelParams] = None) -> None:
        if self.sigma0.region != self.sigmaT.region:
            raise ValueError("pair components live on different regions")
        if self.schedule is not None:
            if params is None:
                raise ValueError("params required to replay the schedule")
            replay = simulate(self.sigma0, self.schedule, bc, params, self.t)
            if replay != self.sigmaT:
                raise ValueError("sigmaT does not match the schedule replay")


def make_schedule(region: Region, horizon: float, rng: np.random.Generator) -> RingSchedule:
    """Independent rate-1 Poisson clocks truncated at the horizon, with i.i.d.
    uniforms attached, merged into a single time-sorted stream."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    mask = region.mask()
    ii, jj = np.nonzero(mask)
    counts = rng.poisson(horizon, size=ii.size)
    total = int(counts.sum())
    site_sel = np.repeat(np.arange(ii.size), counts)
    times = rng.random(total) * horizon
    uniforms = rng.random(total)
    order = np.argsort(times, kind="stable")
    return RingSchedule(
        region, horizon,
        ii[site_sel][order].astype(np.int32), jj[site_sel][order].astype(np.int32),
        times[order], uniforms[order],
    )


_RULES = {"flip": K.RULE_FLIP, "resample": K.RULE_RESAMPLE}


def simulate(sigma0: SpinConfig, sched: RingSchedule, bc: BoundaryCondition = FREE,
             params: ModelParams = None, until: Optional[float] = None,
             rule: str = "flip") -> SpinConfig:
    """Evolve sigma0 under the schedule up to time ``until`` (default the
    horizon), processing rings in global time order.

    rule "flip" is the defining update (flip iff U >= 1 - c_x); "resample" is
    the equivalent-in-law order-preserving form used by the monotone-coupling
    checks."""
    if params is None:
        raise ValueError("params required")
    if sigma0.region != sched.region:
        raise ValueError("configuration and schedule regions differ")
    until = sched.horizon if until is None else float(until)
    if until > sched.horizon:
        raise ValueError("until exceeds the schedule horizon")
    ctab, ptab = rate_tables(params.beta)
    ext, _, _ = bc.ext_grids(sigma0.region)
    out = sigma0.copy()
    K.run_rings(out.grid, sigma0.region.mask(), ext, ctab, ptab,
                sched.idx_i, sched.idx_j, sched.times, sched.uniforms,
                until, _RULES[rule])
    return out


def coupled_simulate(sigma0: SpinConfig, x: Site, sched: RingSchedule,
                     bc: BoundaryCondition = FREE, params: ModelParams = None,
                     until: Optional[float] = None, rule: str = "flip"):
    """(sigma_t, sigma_t^{(x)}): the trajectory from sigma0 and from sigma0
    with the spin at x flipped, both driven by the identical schedule."""
    if params is None:
        raise ValueError("params required")
    if sigma0.region != sched.region:
        raise ValueError("configuration and schedule regions differ")
    until = sched.horizon if until is None else float(until)
    if until > sched.horizon:
        raise ValueError("until exceeds the schedule horizon")
    ctab, ptab = rate_tables(params.beta)
    ext, _, _ = bc.ext_grids(sigma0.region)
    a = sigma0.copy()
    b = sigma0.with_flip(x)
    K.run_rings_coupled(a.grid, b.grid, sigma0.region.mask(), ext, ctab, ptab,
                        sched.idx_i, sched.idx_j, sched.times, sched.uniforms,
                        until, _RULES[rule])
    return a, b


def _sites_from_grid(region: Region, flags: np.ndarray) -> Set[Site]:
    k0, m0 = region.grid_origin()
    ii, jj = np.nonzero(flags)
    return {(k0 + int(i), m0 + int(j)) for i, j in zip(ii, jj)}


def green_grid(sched: RingSchedule, tau_cut: float) -> np.ndarray:
    """uint8 grid marking sites with at least one ring before tau_cut."""
    if tau_cut > sched.horizon:
        raise ValueError("tau_cut exceeds the schedule horizon")
    return (sched.ring_counts(upto=tau_cut) >= 1).astype(np.uint8)


def green_set(sched: RingSchedule, tau_cut: float) -> Set[Site]:
    """Sites whose clock has rung before the cutoff."""
    return _sites_from_grid(sched.region, green_grid(sched, tau_cut))


def _component_union(region: Region, active: np.ndarray, x: Site) -> Set[Site]:
    """Union of the active components of x and of x's neighbors (a site that
    is not active contributes nothing; the empty set means x is not active and
    has no active neighbor)."""
    shape = region.grid_shape()
    seeds = np.zeros(shape, dtype=np.uint8)
    k0, m0 = region.grid_origin()
    for y in [x] + neighbors(x):
        if region.contains(y):
            i, j = y[0] - k0, y[1] - m0
            if active[i, j]:
                seeds[i, j] = 1
    reach = np.zeros(shape, dtype=np.uint8)
    K.bfs_reach(active, seeds, reach)
    return _sites_from_grid(region, reach)


def green_cluster(sched: RingSchedule, tau_cut: float, x: Site) -> Set[Site]:
    """G_x: union of the green components of x and of its neighbors."""
    return _component_union(sched.region, green_grid(sched, tau_cut), x)


def red_grid(sched: RingSchedule, D: Iterable[Site], t: float) -> np.ndarray:
    """Red sites: outside D one ring before t suffices, inside D it takes two
    ("rung more than necessary" for the disagreement pattern D)."""
    if t > sched.horizon:
        raise ValueError("t exceeds the schedule horizon")
    counts = sched.ring_counts(upto=t)
    need = np.ones(sched.region.grid_shape(), dtype=np.int64)
    k0, m0 = sched.region.grid_origin()
    for z in D:
        if sched.region.contains(z):
            need[z[0] - k0, z[1] - m0] = 2
    return ((counts >= need) & (sched.region.mask() > 0)).astype(np.uint8)


def red_set(sched: RingSchedule, D: Iterable[Site], t: float) -> Set[Site]:
    return _sites_from_grid(sched.region, red_grid(sched, set(D), t))


def red_cluster(sched: RingSchedule, D: Iterable[Site], t: float, x: Site) -> Set[Site]:
    """R_x: union of the red components of x and of its neighbors."""
    return _component_union(sched.region, red_grid(sched, set(D), t), x)


def green_cluster_sizes(sched: RingSchedule, tau_cut: float, xs: Iterable[Site]) -> dict:
    """|G_x| for many x at once (labels the green set a single time)."""
    region = sched.region
    active = green_grid(sched, tau_cut)
    labels, nlab = K.label_sign_clusters(np.ones(active.shape, dtype=np.int8), active)
    sizes = np.bincount(labels[labels >= 0].ravel(), minlength=max(nlab, 1))
    k0, m0 = region.grid_origin()
    out = {}
    for x in xs:
        labs = set()
        for y in [x] + neighbors(x):
            if region.contains(y):
                i, j = y[0] - k0, y[1] - m0
                if active[i, j]:
                    labs.add(int(labels[i, j]))
        out[x] = int(sum(sizes[l] for l in labs))
    return out


def dec_event(sched: RingSchedule, S: Iterable[Site], tau_cut: float) -> bool:
    """dec(S): every x in S has |G_x| <= log|S| (natural log)."""
    S = list(S)
    if not S:
        raise ValueError("dec(S) needs a nonempty S")
    bound = math.log(len(S))
    sizes = green_cluster_sizes(sched, tau_cut, S)
    return all(sizes[x] <= bound for x in S)


@dataclass(frozen=True)
class Constants:
    """Rate floor a, finite-energy constant c_fe = a^14/16, time constant
    tau = c_fe^2/(10^6 M), and the animal-counting bound M."""

    a: float
    c_fe: float
    tau: float
    M: float


def constants(params: ModelParams, M: float = 64.0) -> Constants:
    """Build the constants for a given beta and verify the three series bounds
    they are required to satisfy; raises if any is violated."""
    if M < 1:
        raise ValueError("M must be >= 1")
    beta = params.beta
    a = 1.0 / (1.0 + math.exp(12.0 * beta))
    c_fe = a ** 14 / 16.0
    tau = c_fe ** 2 / (1.0e6 * M)
    # sum_k (1/(2 sqrt(c)))^{k+1} M^k tau^k <= 1/sqrt(c)
    r6 = M * tau / (2.0 * math.sqrt(c_fe))
    if r6 >= 1.0 or (1.0 / (2.0 * math.sqrt(c_fe))) / (1.0 - r6) > 1.0 / math.sqrt(c_fe):
        raise ValueError("series bound (geometric, 1/(2 sqrt(c_fe))) violated")
    # sum_{k>=lambda} (16/c)^{k+1} M^k tau^k <= e^{-lambda} for all lambda >= 1
    rho = 16.0 * M * tau / c_fe
    if rho >= 1.0:
        raise ValueError("series bound (16/c_fe ratio >= 1) violated")
    lam1 = (16.0 / c_fe) * rho / (1.0 - rho)
    if lam1 > math.exp(-1.0) or rho > math.exp(-1.0):
        raise ValueError("series bound (exponential tail) violated")
    # sum_k (k+1) (16/c)^{k+1} M^k tau^k (2k+1)^2 <= 100/c
    total = 0.0
    term_base = 16.0 / c_fe
    for k in range(0, 10000):
        term = (k + 1) * term_base * (rho ** k) * (2 * k + 1) ** 2
        total += term
        if term < 1e-30 * total:
            break
    if total > 100.0 / c_fe:
        raise ValueError("series bound (weighted tail) violated")
    return Constants(a=a, c_fe=c_fe, tau=tau, M=float(M))
