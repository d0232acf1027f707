"""Monte Carlo estimation and experiment orchestration.

Estimates static and two-time event probabilities with Wilson intervals,
builds four-arm tables and sensitivity lengths, runs crossing sweeps,
quasi-multiplicativity / derivative / mixing-ratio reports, and executes
TOML experiment configs into reproducible artifact directories.

Determinism contract: trials are split over a fixed number of replicas;
replica i draws from the stream spawned from the master seed at index i, so
results are bit-identical regardless of execution order or thread count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels as K
from . import __version__
from .dynamics import constants, green_cluster_sizes, make_schedule, simulate
from .events import (Arm4, Cross, EventSpec, evaluate_event, outer_scale,
                     parse_event)
from .ising import (FREE, BoundaryCondition, ExactMeasure, ModelParams,
                    SpinConfig, exact_measure, rate_tables, sample_equilibrium)
from .lattice import Region, Rhombus, Site

__all__ = [
    "EstimateRecord",
    "ArmTable",
    "SweepResult",
    "SamplerSettings",
    "wilson_interval",
    "estimate_static",
    "estimate_pair",
    "arm_table",
    "sensitivity_length",
    "cross_sweep",
    "qm_report",
    "derivative_report",
    "mixing_ratio_report",
    "green_tail_estimate",
    "pair_cell_counts",
    "run_experiment",
    "default_threads",
    "CSV_COLUMNS",
]

Z95 = 1.959963984540054


def default_betas() -> tuple[float, float, float]:
    """The experiment convention: beta in {0, 0.5 beta_c, 0.8 beta_c}."""
    from .ising import beta_c
    bc = beta_c()
    return (0.0, 0.5 * bc, 0.8 * bc)

CSV_COLUMNS = ["beta", "n", "m", "k", "t", "event", "trials", "successes",
               "p_hat", "ci_low", "ci_high", "seed"]

DEFAULT_REPLICAS = 16


def default_threads() -> int:
    env = os.environ.get("DYNISING_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson 95% score interval; always contains the point estimate."""
    if trials <= 0:
        raise ValueError("trials must be >= 1")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return (lo, hi)


@dataclass
class EstimateRecord:
    """One Bernoulli estimate with its provenance."""

    event: str
    beta: float
    t: Optional[float]
    n: Optional[int]
    m: Optional[int] = None
    k: Optional[int] = None
    trials: int = 0
    successes: int = 0
    p_hat: float = 0.0
    ci_low: float = 0.0
    ci_high: float = 0.0
    master_seed: int = 0
    replica_count: int = DEFAULT_REPLICAS

    @classmethod
    def from_counts(cls, event, beta, t, n, trials, successes, seed, replicas,
                    m=None, k=None) -> "EstimateRecord":
        lo, hi = wilson_interval(successes, trials)
        return cls(event=str(event), beta=beta, t=t, n=n, m=m, k=k,
                   trials=trials, successes=successes, p_hat=successes / trials,
                   ci_low=lo, ci_high=hi, master_seed=seed, replica_count=replicas)

    def csv_row(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return format(v, ".12g")
            return str(v)
        return [fmt(v) for v in (self.beta, self.n, self.m, self.k, self.t,
                                 self.event, self.trials, self.successes,
                                 self.p_hat, self.ci_low, self.ci_high,
                                 self.master_seed)]

    def to_dict(self) -> dict:
        return {
            "event": self.event, "beta": self.beta, "t": self.t, "n": self.n,
            "m": self.m, "k": self.k, "trials": self.trials,
            "successes": self.successes, "p_hat": self.p_hat,
            "ci_low": self.ci_low, "ci_high": self.ci_high,
            "seed": self.master_seed, "replicas": self.replica_count,
        }


@dataclass(frozen=True)
class SamplerSettings:
    """Equilibrium sampling policy for estimator trials.

    ``auto`` draws a product sample at beta = 0 (exact there) and otherwise
    uses the hybrid sampler (heat-bath sweeps then Wolff cluster flips); the
    explicit methods of sample_equilibrium are also accepted."""

    method: str = "auto"
    hybrid_sweeps: int = 24
    hybrid_updates: Optional[int] = None
    cluster_updates: Optional[int] = None
    cluster_warmup: int = 100
    sweeps: Optional[int] = None


def _draw_equilibrium(region: Region, bc, params, rng, settings: SamplerSettings,
                      measure: Optional[ExactMeasure] = None) -> SpinConfig:
    method = settings.method
    if method == "auto":
        if params.beta == 0.0:
            cfg = SpinConfig.constant(region, 1)
            K.random_spins(cfg.grid, region.mask(),
                           int(rng.integers(0, np.iinfo(np.int64).max)))
            return cfg
        method = "hybrid"
    return sample_equilibrium(
        region, bc, params, method, rng,
        cluster_updates=settings.cluster_updates,
        cluster_warmup=settings.cluster_warmup,
        sweeps=settings.sweeps,
        hybrid_sweeps=settings.hybrid_sweeps,
        hybrid_updates=settings.hybrid_updates,
        measure=measure,
    )


def _split_trials(trials: int, replicas: int) -> list[int]:
    base = trials // replicas
    out = [base] * replicas
    for i in range(trials - base * replicas):
        out[i] += 1
    return [c for c in out if c > 0]


def _run_replicas(worker: Callable[[np.random.Generator, int], object],
                  trials: int, seed: int, threads: Optional[int] = None,
                  replicas: int = DEFAULT_REPLICAS) -> list:
    """Run `worker(rng, n_trials)` over deterministic replica streams; the
    result list is in replica order regardless of scheduling."""
    counts = _split_trials(trials, replicas)
    streams = np.random.SeedSequence(seed).spawn(len(counts))
    threads = threads or default_threads()
    if threads <= 1 or len(counts) <= 1:
        return [worker(np.random.default_rng(ss), c) for ss, c in zip(streams, counts)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futs = [pool.submit(worker, np.random.default_rng(ss), c)
                for ss, c in zip(streams, counts)]
        return [f.result() for f in futs]


# ----------------------------------------------------------------------------
# core estimators
# ----------------------------------------------------------------------------

def _frame_for(events: Sequence[EventSpec], frame_n: Optional[int]) -> Rhombus:
    """Sampling frame Lambda_{2 scale} for centered events; off-center events
    enlarge the frame so their support stays covered with the same margin."""
    if frame_n is None:
        frame_n = max(2 * outer_scale(ev) + max(abs(ev.center[0]), abs(ev.center[1]))
                      for ev in events)
    return Rhombus((0, 0), frame_n)


def _degenerate(ev: EventSpec) -> bool:
    if ev.kind in ("arm1", "arm4", "arm3half", "arm4sep"):
        m, n = ev.params
        return m > n or m < 1
    return False


def _make_evaluator(ev: EventSpec):
    if _degenerate(ev):
        warnings.warn(f"degenerate event scale in {ev.label()}: evaluating as false")
        return lambda cfg: False
    return lambda cfg: evaluate_event(ev, cfg)


def estimate_static(event: EventSpec, beta: float, trials: int, seed: int, *,
                    frame_n: Optional[int] = None,
                    bc: BoundaryCondition = FREE,
                    sampler: SamplerSettings = SamplerSettings(),
                    threads: Optional[int] = None,
                    replicas: int = DEFAULT_REPLICAS) -> EstimateRecord:
    """P(sigma in event) under mu on the frame Lambda_{2 * outer scale}
    (free boundary conditions by default), with a Wilson 95% interval."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    frame = _frame_for([event], frame_n)
    params = ModelParams(beta)
    ev = _make_evaluator(event)
    mu = None
    if sampler.method == "exact":
        mu = exact_measure(frame, bc, params)

    def worker(rng, n_trials):
        succ = 0
        for _ in range(n_trials):
            cfg = _draw_equilibrium(frame, bc, params, rng, sampler, measure=mu)
            if ev(cfg):
                succ += 1
        return succ

    parts = _run_replicas(worker, trials, seed, threads, replicas)
    n_ctx = outer_scale(event)
    m_ctx = event.params[0] if event.kind in ("arm1", "arm4", "arm3half", "arm4sep") else None
    return EstimateRecord.from_counts(event.label(), beta, None, n_ctx, trials,
                                      int(sum(parts)), seed, replicas, m=m_ctx)


def estimate_pair(events0: Sequence[EventSpec], eventsT: Sequence[EventSpec],
                  beta: float, t: float, trials: int, seed: int, *,
                  frame_n: Optional[int] = None,
                  bc: BoundaryCondition = FREE,
                  sampler: SamplerSettings = SamplerSettings(),
                  threads: Optional[int] = None,
                  replicas: int = DEFAULT_REPLICAS,
                  label: Optional[str] = None) -> EstimateRecord:
    """P(all events0 at time 0 and all eventsT at time t) for the Glauber
    dynamics started from equilibrium on the frame.

    The usual modes are events0 == eventsT == [A] (two-time probability),
    eventsT == [] (static), and mixed lists (Prop.-5.3-style quantities)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    all_events = list(events0) + list(eventsT)
    if not all_events:
        raise ValueError("need at least one event")
    frame = _frame_for(all_events, frame_n)
    params = ModelParams(beta)
    evs0 = [_make_evaluator(e) for e in events0]
    evsT = [_make_evaluator(e) for e in eventsT]
    mu = None
    if sampler.method == "exact":
        mu = exact_measure(frame, bc, params)

    def worker(rng, n_trials):
        succ = 0
        for _ in range(n_trials):
            cfg0 = _draw_equilibrium(frame, bc, params, rng, sampler, measure=mu)
            ok = all(ev(cfg0) for ev in evs0)
            if ok and evsT:
                cfgT = cfg0
                if t > 0:
                    sched = make_schedule(frame, t, rng)
                    cfgT = simulate(cfg0, sched, bc, params)
                ok = all(ev(cfgT) for ev in evsT)
            if ok:
                succ += 1
        return succ

    parts = _run_replicas(worker, trials, seed, threads, replicas)
    if label is None:
        l0 = "&".join(e.label() for e in events0)
        lT = "&".join(e.label() for e in eventsT)
        label = f"pair[{l0}|{lT}]"
    n_ctx = max(outer_scale(e) for e in all_events)
    return EstimateRecord.from_counts(label, beta, t, n_ctx, trials,
                                      int(sum(parts)), seed, replicas)


# ----------------------------------------------------------------------------
# arm tables and the sensitivity length
# ----------------------------------------------------------------------------

@dataclass
class ArmTable:
    """Four-arm probabilities alpha_n with intervals; eps_n = 1/(n^2 alpha_n)
    is always recomputed from the stored estimates, never stored."""

    beta: float
    records: list[EstimateRecord] = field(default_factory=list)

    def ns(self) -> list[int]:
        return [r.n for r in self.records]

    def alpha(self, n: int) -> float:
        for r in self.records:
            if r.n == n:
                return r.p_hat
        raise KeyError(n)

    def eps(self, n: int) -> float:
        a = self.alpha(n)
        if a <= 0:
            return math.inf
        return 1.0 / (n * n * a)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "rows": [dict(r.to_dict(), eps=self.eps(r.n) if r.p_hat > 0 else None)
                     for r in self.records],
        }


def arm_table(beta: float, n_list: Sequence[int], trials: int, seed: int, *,
              sampler: SamplerSettings = SamplerSettings(),
              threads: Optional[int] = None,
              replicas: int = DEFAULT_REPLICAS) -> ArmTable:
    """alpha_n = mu_{2n}(A_4(n)) estimates for an ascending list of scales."""
    if list(n_list) != sorted(n_list):
        raise ValueError("n-list must be ascending")
    table = ArmTable(beta=beta)
    for i, n in enumerate(n_list):
        rec = estimate_static(Arm4(1, n), beta, trials, seed + 7919 * i,
                              sampler=sampler, threads=threads, replicas=replicas)
        width = rec.ci_high - rec.ci_low
        if rec.p_hat > 0 and width / (2 * rec.p_hat) > 0.20:
            warnings.warn(f"alpha_{n} relative CI half-width exceeds 20% "
                          f"({width / (2 * rec.p_hat):.1%})")
        table.records.append(rec)
    return table


def sensitivity_length(table: ArmTable, t: float) -> Optional[int]:
    """ell(t) = min tabulated n with n^2 alpha_n >= 1/t; None means the
    length lies beyond the table."""
    if t <= 0:
        raise ValueError("t must be > 0")
    if not table.records:
        raise ValueError("empty arm table")
    for r in table.records:
        if r.n * r.n * r.p_hat >= 1.0 / t:
            return r.n
    return None


# ----------------------------------------------------------------------------
# crossing sweeps
# ----------------------------------------------------------------------------

@dataclass
class SweepResult:
    """Grid of two-time crossing estimates P(sigma, sigma_t in Cross_n)."""

    beta: float
    n_list: list[int]
    times: dict  # n -> list of absolute times
    scaled: Optional[list[float]] = None  # the t/eps_n grid if scaled
    records: dict = field(default_factory=dict)  # (n, t_index) -> EstimateRecord

    def record(self, n: int, ti: int) -> EstimateRecord:
        return self.records[(n, ti)]

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "n_list": self.n_list,
            "scaled": self.scaled,
            "cells": [dict(r.to_dict(), t_index=ti) for (n, ti), r in sorted(self.records.items())],
        }


def cross_sweep(beta: float, n_list: Sequence[int], times: Sequence[float],
                trials: int, seed: int, *,
                scaled: bool = False, table: Optional[ArmTable] = None,
                sampler: SamplerSettings = SamplerSettings(),
                threads: Optional[int] = None,
                replicas: int = DEFAULT_REPLICAS) -> SweepResult:
    """Estimate P(sigma, sigma_t in Cross_n) over a rectangular (n, t) grid;
    with scaled=True the time entries are multiples of the measured eps_n
    resolved through an ArmTable."""
    if scaled and table is None:
        raise ValueError("scaled times require an arm table")
    res = SweepResult(beta=beta, n_list=list(n_list), times={},
                      scaled=list(times) if scaled else None)
    step = 0
    for n in n_list:
        tlist = []
        for s in times:
            tlist.append(s * table.eps(n) if scaled else float(s))
        res.times[n] = tlist
        for ti, t in enumerate(tlist):
            ev = Cross(n)
            rec = estimate_pair([ev], [ev], beta, t, trials, seed + 104729 * step,
                                sampler=sampler, threads=threads, replicas=replicas,
                                label=f"pair[{ev.label()}]")
            rec.n = n
            res.records[(n, ti)] = rec
            step += 1
    return res


# ----------------------------------------------------------------------------
# quasi-multiplicativity
# ----------------------------------------------------------------------------

def _ratio_ci(p1: EstimateRecord, p2: EstimateRecord, p3: EstimateRecord):
    """Conservative interval for p1*p2/p3 from the three Wilson intervals."""
    num_lo = p1.ci_low * p2.ci_low
    num_hi = p1.ci_high * p2.ci_high
    lo = num_lo / p3.ci_high if p3.ci_high > 0 else math.inf
    hi = num_hi / p3.ci_low if p3.ci_low > 0 else math.inf
    return lo, hi


def qm_report(beta: float, t: float, triples: Sequence[tuple[int, int, int]],
              trials: int, seed: int, *,
              sampler: SamplerSettings = SamplerSettings(),
              threads: Optional[int] = None,
              replicas: int = DEFAULT_REPLICAS) -> dict:
    """Quasi-multiplicativity data: for (k, m, n) the estimates of
    pi_{k,m}(t), pi_{m,n}(t), pi_{k,n}(t) and the ratio
    pi_{k,m} pi_{m,n} / pi_{k,n} with a propagated interval.
    Degenerate annuli (equal scales) count as probability one."""
    rows = []
    step = 0

    def pi_est(a, b, s):
        nonlocal step
        step += 1
        if a == b:
            return EstimateRecord(event=f"arm4:m={a},n={b}", beta=beta, t=t, n=b, m=a,
                                  trials=1, successes=1, p_hat=1.0, ci_low=1.0,
                                  ci_high=1.0, master_seed=s, replica_count=replicas)
        ev = Arm4(a, b)
        rec = estimate_pair([ev], [ev], beta, t, trials, s,
                            sampler=sampler, threads=threads, replicas=replicas,
                            label=f"pair[{ev.label()}]")
        rec.m = a
        rec.n = b
        return rec

    for (k, m, n) in triples:
        if not (k <= m <= n):
            raise ValueError("triples must satisfy k <= m <= n")
        r1 = pi_est(k, m, seed + 31 * step)
        r2 = pi_est(m, n, seed + 31 * step)
        r3 = pi_est(k, n, seed + 31 * step)
        ratio = (r1.p_hat * r2.p_hat / r3.p_hat) if r3.p_hat > 0 else math.inf
        lo, hi = _ratio_ci(r1, r2, r3)
        rows.append({
            "k": k, "m": m, "n": n, "t": t,
            "pi_km": r1.to_dict(), "pi_mn": r2.to_dict(), "pi_kn": r3.to_dict(),
            "ratio": ratio, "ratio_lo": lo, "ratio_hi": hi,
        })
    return {"beta": beta, "t": t, "rows": rows}


# ----------------------------------------------------------------------------
# derivative estimators
# ----------------------------------------------------------------------------

def derivative_report(beta: float, n: int, t: float, trials: int, seed: int, *,
                      sampler: SamplerSettings = SamplerSettings(),
                      threads: Optional[int] = None,
                      replicas: int = DEFAULT_REPLICAS,
                      site_sample: Optional[int] = None) -> dict:
    """Three views of -d/dt P(sigma, sigma_t in Cross_n):

    (i)  finite-difference slope of the two-time probability over [0, 2t];
    (ii) the coupled-pair expectation
         (1/2) sum_x E[c_x(sigma) (f(sigma^x)-f(sigma)) (f(sigma_t^{(x)})-f(sigma_t))];
    (iii) the pivotal sum sum_x P(sigma, sigma_t in Piv_x(Cross_n)).

    x runs exhaustively over Lambda_n for n <= 8, otherwise over a uniform
    site subsample with inverse-probability weighting.  Also reports the
    measured constant c in |slope| >= c n^2 pi_n(t)."""
    consts = constants(ModelParams(beta))
    flagged = t > consts.tau
    frame = Rhombus((0, 0), 2 * n)
    params = ModelParams(beta)
    ctab, ptab = rate_tables(beta)
    size = 2 * n + 1
    k0, m0 = frame.grid_origin()
    i0 = -n - k0
    j0 = -n - m0
    mask = frame.mask()
    ext = np.zeros(frame.grid_shape(), dtype=np.int8)
    exhaustive = n <= 8
    nsample = site_sample or max(1, (size * size) // 8)

    def worker(rng, n_trials):
        val_sum = 0.0
        val_sq = 0.0
        piv_joint = 0
        piv0_grid = np.zeros((size, size), dtype=np.uint8)
        pivT_grid = np.zeros((size, size), dtype=np.uint8)
        for _ in range(n_trials):
            cfg0 = _draw_equilibrium(frame, FREE, params, rng, sampler)
            sched = make_schedule(frame, t, rng) if t > 0 else None
            cfgT = simulate(cfg0, sched, FREE, params) if t > 0 else cfg0
            f0 = K.crossing_pivotal_scan(cfg0.grid, i0, j0, size, piv0_grid)
            fT = K.crossing_pivotal_scan(cfgT.grid, i0, j0, size, pivT_grid)
            piv_joint += int(np.sum(piv0_grid & pivT_grid))
            if exhaustive:
                cand = np.argwhere(piv0_grid > 0)
                weight = 1.0
            else:
                sel = rng.choice(size * size, size=nsample, replace=False)
                cand = np.stack([sel // size, sel % size], axis=1)
                cand = cand[piv0_grid[cand[:, 0], cand[:, 1]] > 0]
                weight = (size * size) / nsample
            v = 0.0
            for a, b in cand:
                gi = i0 + int(a)
                gj = j0 + int(b)
                S = int(ext[gi, gj])
                for tt in range(6):
                    ii = gi + int(K.DI[tt])
                    jj = gj + int(K.DJ[tt])
                    if 0 <= ii < mask.shape[0] and 0 <= jj < mask.shape[1]:
                        S += int(cfg0.grid[ii, jj])
                c = ctab[int(cfg0.grid[gi, gj]) * S + 6]
                df0 = (1 - 2 * (1 if f0 else 0))  # f(sigma^x) - f(sigma), x pivotal
                if t > 0:
                    a2 = cfg0.copy()
                    b2 = cfg0.copy()
                    b2.grid[gi, gj] = -b2.grid[gi, gj]
                    K.run_rings_coupled(a2.grid, b2.grid, mask, ext, ctab, ptab,
                                        sched.idx_i, sched.idx_j, sched.times,
                                        sched.uniforms, t, K.RULE_FLIP)
                    fa = K.crossing_lr(a2.grid, i0, j0, size)
                    fb = K.crossing_lr(b2.grid, i0, j0, size)
                    dft = (1 if fb else 0) - (1 if fa else 0)
                else:
                    dft = df0
                v += c * df0 * dft * weight
            val_sum += 0.5 * v
            val_sq += (0.5 * v) ** 2
        return val_sum, val_sq, piv_joint

    parts = _run_replicas(worker, trials, seed, threads, replicas)
    vsum = sum(p[0] for p in parts)
    vsq = sum(p[1] for p in parts)
    pjoint = sum(p[2] for p in parts)
    mean_ii = vsum / trials
    var_ii = max(0.0, vsq / trials - mean_ii ** 2)
    sd_ii = math.sqrt(var_ii / trials)
    # (i) finite-difference slope over [0, 2t]
    ev = Cross(n)
    p_lo = estimate_pair([ev], [ev], beta, 0.0, trials, seed + 1,
                         sampler=sampler, threads=threads, replicas=replicas)
    p_hi = estimate_pair([ev], [ev], beta, 2 * t if t > 0 else 1e-6, trials, seed + 2,
                         sampler=sampler, threads=threads, replicas=replicas)
    dt = (2 * t) if t > 0 else 1e-6
    slope_fd = -(p_hi.p_hat - p_lo.p_hat) / dt
    sd_fd = math.sqrt(p_lo.p_hat * (1 - p_lo.p_hat) / trials
                      + p_hi.p_hat * (1 - p_hi.p_hat) / trials) / dt
    # (iii) pivotal sum
    piv_sum = pjoint / trials
    sd_piv = math.sqrt(max(piv_sum, 1e-12) / trials)
    # pi_n(t) for the measured Lemma-6.10 constant
    arm = Arm4(1, n)
    pi_rec = estimate_pair([arm], [arm], beta, t, trials, seed + 3,
                           sampler=sampler, threads=threads, replicas=replicas)
    denom = n * n * pi_rec.p_hat
    c_measured = mean_ii / denom if denom > 0 else math.inf
    sd_c = sd_ii / denom if denom > 0 else math.inf
    return {
        "beta": beta, "n": n, "t": t, "t_above_tau": flagged, "tau": consts.tau,
        "slope_fd": slope_fd, "slope_fd_sd": sd_fd,
        "coupled_estimate": mean_ii, "coupled_sd": sd_ii,
        "pivotal_sum": piv_sum, "pivotal_sum_sd": sd_piv,
        "ratio_fd_over_coupled": (slope_fd / mean_ii) if mean_ii else math.inf,
        "ratio_coupled_over_pivotal": (mean_ii / piv_sum) if piv_sum else math.inf,
        "pi_n": pi_rec.to_dict(),
        "c_lemma_lower": c_measured, "c_lemma_lower_sd": sd_c,
        "trials": trials, "seed": seed,
    }


# ----------------------------------------------------------------------------
# spatial mixing ratios
# ----------------------------------------------------------------------------

def mixing_ratio_report(beta: float, t: float, eventA: EventSpec, eventB: EventSpec,
                        trials: int, seed: int, *,
                        frame_n: Optional[int] = None,
                        sampler: SamplerSettings = SamplerSettings(),
                        threads: Optional[int] = None,
                        replicas: int = DEFAULT_REPLICAS,
                        check_supports: bool = True) -> dict:
    """Decoupling ratio P(sigma,sigma_t in A) P(.. in B) / P(.. in A and B)
    with a propagated interval.  The events must have disjoint supports (the
    spatial-mixing geometry); overlapping supports raise unless
    check_supports=False."""
    if check_supports:
        from .events import event_support
        sa = event_support(eventA)
        sb = event_support(eventB)
        if sa is not None and sb is not None:
            inter = set(sa) & set(sb)
            if inter:
                raise ValueError(
                    f"mixing events have overlapping supports ({len(inter)} shared sites); "
                    "separate them or pass check_supports=False")
    pa = estimate_pair([eventA], [eventA], beta, t, trials, seed + 11,
                       frame_n=frame_n, sampler=sampler, threads=threads, replicas=replicas)
    pb = estimate_pair([eventB], [eventB], beta, t, trials, seed + 22,
                       frame_n=frame_n, sampler=sampler, threads=threads, replicas=replicas)
    pab = estimate_pair([eventA, eventB], [eventA, eventB], beta, t, trials, seed + 33,
                        frame_n=frame_n, sampler=sampler, threads=threads, replicas=replicas)
    ratio = (pa.p_hat * pb.p_hat / pab.p_hat) if pab.p_hat > 0 else math.inf
    lo, hi = _ratio_ci(pa, pb, pab)
    return {
        "beta": beta, "t": t, "A": eventA.label(), "B": eventB.label(),
        "p_A": pa.to_dict(), "p_B": pb.to_dict(), "p_AB": pab.to_dict(),
        "ratio": ratio, "ratio_lo": lo, "ratio_hi": hi,
    }


def translation_report(beta: float, t: float, m: int, n: int, x: Site,
                       trials: int, seed: int, *,
                       sampler: SamplerSettings = SamplerSettings(),
                       threads: Optional[int] = None,
                       replicas: int = DEFAULT_REPLICAS) -> dict:
    """Quasi-invariance companion: the local four-arm pair probability at
    center x inside Lambda_{2n} against the same event at the origin inside
    Lambda_{2m}."""
    ev_local = Arm4(1, m, center=x)
    big = estimate_pair([ev_local], [ev_local], beta, t, trials, seed + 5,
                        frame_n=2 * n, sampler=sampler, threads=threads, replicas=replicas)
    ev0 = Arm4(1, m)
    small = estimate_pair([ev0], [ev0], beta, t, trials, seed + 6,
                          sampler=sampler, threads=threads, replicas=replicas)
    ratio = big.p_hat / small.p_hat if small.p_hat > 0 else math.inf
    return {
        "beta": beta, "t": t, "m": m, "n": n, "x": list(x),
        "translated": big.to_dict(), "origin": small.to_dict(), "ratio": ratio,
    }


# ----------------------------------------------------------------------------
# schedule-only green tail and small-region pair cells
# ----------------------------------------------------------------------------

def green_tail_estimate(n: int, t: float, lambdas: Sequence[int], trials: int,
                        seed: int, x: Site = (0, 0), *,
                        threads: Optional[int] = None,
                        replicas: int = DEFAULT_REPLICAS) -> dict:
    """P(|G_x| >= lambda) by schedule-only sampling on Lambda_n (no spins
    involved; the green set is a function of the clocks alone)."""
    frame = Rhombus((0, 0), n)
    lambdas = list(lambdas)

    def worker(rng, n_trials):
        counts = np.zeros(len(lambdas), dtype=np.int64)
        for _ in range(n_trials):
            sched = make_schedule(frame, t, rng)
            if len(sched) == 0:
                continue
            size = green_cluster_sizes(sched, t, [x])[x]
            for i, lam in enumerate(lambdas):
                if size >= lam:
                    counts[i] += 1
        return counts

    parts = _run_replicas(worker, trials, seed, threads, replicas)
    totals = np.sum(parts, axis=0)
    rows = []
    for lam, c in zip(lambdas, totals):
        lo, hi = wilson_interval(int(c), trials)
        rows.append({"lambda": lam, "p_hat": int(c) / trials, "ci_low": lo,
                     "ci_high": hi, "bound": math.exp(-lam)})
    return {"n": n, "t": t, "x": list(x), "trials": trials, "rows": rows}


def pair_cell_counts(region: Region, beta: float, t: float, trials: int, seed: int, *,
                     bc: BoundaryCondition = FREE,
                     threads: Optional[int] = None,
                     replicas: int = DEFAULT_REPLICAS):
    """Empirical (state_0, state_t) counts on a small region using the exact
    equilibrium sampler, for comparison against the oracle pair law."""
    params = ModelParams(beta)
    mu = exact_measure(region, bc, params)
    size = 1 << mu.n_sites

    def worker(rng, n_trials):
        counts = np.zeros((size, size), dtype=np.int64)
        for _ in range(n_trials):
            s0 = mu.sample_state(rng)
            cfg0 = mu.config_of(s0)
            if t > 0:
                sched = make_schedule(region, t, rng)
                cfgT = simulate(cfg0, sched, bc, params)
                sT = mu.state_of(cfgT)
            else:
                sT = s0
            counts[s0, sT] += 1
        return counts

    parts = _run_replicas(worker, trials, seed, threads, replicas)
    return np.sum(parts, axis=0)


# ----------------------------------------------------------------------------
# experiment runner
# ----------------------------------------------------------------------------

def _load_toml(path: Path) -> dict:
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


class ConfigError(ValueError):
    pass


def _step_error(idx: int, name: str, msg: str) -> ConfigError:
    return ConfigError(f"step {idx} ({name!r}): {msg}")


def run_experiment(config_path, out_dir, seed: int, *,
                   threads: Optional[int] = None) -> dict:
    """Execute a TOML experiment config into an artifact directory: a fixed-
    schema results.csv, per-step JSON reports, and a manifest.  Re-running
    with the same config and seed reproduces the CSV byte-identically at a
    fixed replica count."""
    config_path = Path(config_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    raw = config_path.read_bytes()
    cfg = _load_toml(config_path)
    exp = cfg.get("experiment", {})
    replicas = int(exp.get("replicas", DEFAULT_REPLICAS))
    steps = cfg.get("step", [])
    t_start = time.time()
    records: list[EstimateRecord] = []
    reports = []
    tables: dict[str, ArmTable] = {}

    for idx, st in enumerate(steps):
        if "kind" not in st:
            raise _step_error(idx, st.get("name", "?"), "missing 'kind'")
        kind = st["kind"]
        name = st.get("name", f"step{idx}")
        sseed = seed + 1009 * idx
        common = dict(threads=threads, replicas=replicas)
        sampler = SamplerSettings(
            method=st.get("sampler", "auto"),
            hybrid_sweeps=int(st.get("sweeps", 24)),
        )
        try:
            if kind == "constants":
                c = constants(ModelParams(float(st["beta"])), float(st.get("M", 64)))
                reports.append({"step": name, "kind": kind, "beta": st["beta"],
                                "a": c.a, "c_fe": c.c_fe, "tau": c.tau, "M": c.M})
            elif kind == "static":
                ev = parse_event(st["event"])
                rec = estimate_static(ev, float(st["beta"]), int(st["trials"]), sseed,
                                      frame_n=st.get("frame_n"), sampler=sampler, **common)
                records.append(rec)
                reports.append({"step": name, "kind": kind, **rec.to_dict()})
            elif kind == "pair":
                ev0 = [parse_event(e) for e in st.get("events0", [st.get("event")])]
                evT = [parse_event(e) for e in st.get("eventsT", [st.get("event")])]
                rec = estimate_pair(ev0, evT, float(st["beta"]), float(st["t"]),
                                    int(st["trials"]), sseed,
                                    frame_n=st.get("frame_n"), sampler=sampler, **common)
                records.append(rec)
                reports.append({"step": name, "kind": kind, **rec.to_dict()})
            elif kind == "arm-table":
                tab = arm_table(float(st["beta"]), list(st["n"]), int(st["trials"]),
                                sseed, sampler=sampler, **common)
                tables[name] = tab
                records.extend(tab.records)
                reports.append({"step": name, "kind": kind, **tab.to_dict()})
            elif kind == "sweep":
                scaled = "scaled_times" in st
                times = st.get("scaled_times", st.get("times"))
                table = tables.get(st.get("table", "")) if scaled else None
                if scaled and table is None:
                    raise _step_error(idx, name, "scaled_times needs a prior arm-table step named by 'table'")
                sw = cross_sweep(float(st["beta"]), list(st["n"]), list(times),
                                 int(st["trials"]), sseed, scaled=scaled, table=table,
                                 sampler=sampler, **common)
                records.extend(sw.records.values())
                reports.append({"step": name, "kind": kind, **sw.to_dict()})
            elif kind == "qm":
                triples = [tuple(tr) for tr in st["triples"]]
                rep = qm_report(float(st["beta"]), float(st["t"]), triples,
                                int(st["trials"]), sseed, sampler=sampler, **common)
                for row in rep["rows"]:
                    for key in ("pi_km", "pi_mn", "pi_kn"):
                        d = row[key]
                        records.append(EstimateRecord(
                            event=d["event"], beta=d["beta"], t=d["t"], n=d["n"],
                            m=d["m"], k=d["k"], trials=d["trials"],
                            successes=d["successes"], p_hat=d["p_hat"],
                            ci_low=d["ci_low"], ci_high=d["ci_high"],
                            master_seed=d["seed"], replica_count=d["replicas"]))
                reports.append({"step": name, "kind": kind, **rep})
            elif kind == "deriv":
                rep = derivative_report(float(st["beta"]), int(st["n"]), float(st["t"]),
                                        int(st["trials"]), sseed, sampler=sampler, **common)
                reports.append({"step": name, "kind": kind, **rep})
            elif kind == "mixing":
                rep = mixing_ratio_report(float(st["beta"]), float(st["t"]),
                                          parse_event(st["eventA"]), parse_event(st["eventB"]),
                                          int(st["trials"]), sseed,
                                          frame_n=st.get("frame_n"), sampler=sampler, **common)
                reports.append({"step": name, "kind": kind, **rep})
            else:
                raise _step_error(idx, name, f"unknown kind {kind!r}")
        except KeyError as exc:
            raise _step_error(idx, name, f"missing key {exc}") from exc

    csv_path = out_dir / "results.csv"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in records:
        w.writerow(rec.csv_row())
    csv_path.write_text(buf.getvalue())
    (out_dir / "report.json").write_text(json.dumps(reports, indent=2, default=float) + "\n")
    manifest = {
        "name": exp.get("name", config_path.stem),
        "seed": seed,
        "replicas": replicas,
        "code_version": __version__,
        "config_sha256": hashlib.sha256(raw).hexdigest(),
        "wall_time_s": time.time() - t_start,
        "steps": [st.get("name", f"step{i}") for i, st in enumerate(steps)],
        "csv": str(csv_path),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
