"""Exact computation on tiny regions: the generator matrix, the pair law of
(sigma_0, sigma_t) via uniformization, and exact verification of the
generator-level identities (reversibility, the differential formula with the
coupled process, dynamical FKG, finite energy, correlation shape, the
Cauchy-Schwarz trick, and the failure of the pair spatial Markov property).

States are bit patterns over the region's row-major site order (bit set means
spin +1).  All checks return structured reports that serialize to JSON.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .dynamics import Constants
from .ising import FREE, BoundaryCondition, ModelParams, exact_measure
from .lattice import ExplicitRegion, Region, neighbors

__all__ = [
    "GeneratorMatrix",
    "PairLaw",
    "OracleReport",
    "build_generator",
    "pair_law",
    "check_differential_formula",
    "check_dynamical_fkg",
    "check_finite_energy",
    "check_pair_not_markov",
    "check_correlation_shape",
    "check_cauchy_schwarz",
    "build_increasing_catalog",
    "compare_pair_counts",
]

GENERATOR_CAP = 12
COUPLED_CAP = 10


@dataclass
class OracleReport:
    """One structured check result: name, parameters, worst slack (negative
    means a violation), pass/fail, and free-form details."""

    name: str
    params: dict
    worst_slack: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "params": self.params,
            "worst_slack": self.worst_slack,
            "passed": bool(self.passed),
            "details": self.details,
        }


class GeneratorMatrix:
    """Dense rate matrix Q with Q[s, s^x] = c_x(s) and diagonal minus the row
    sum, together with the exact measure it is reversible for."""

    def __init__(self, region: Region, bc: BoundaryCondition, params: ModelParams, cap: int = GENERATOR_CAP):
        nsites = region.site_count()
        if nsites > cap:
            raise ValueError(f"region has {nsites} sites, generator cap is {cap}")
        self.measure = exact_measure(region, bc, params, cap=cap)
        self.region = region
        self.bc = bc
        self.params = params
        n = self.measure.n_sites
        self.n_sites = n
        size = 1 << n
        states = np.arange(size, dtype=np.int64)
        sites = self.measure.sites
        siteset = {x: i for i, x in enumerate(sites)}
        beta = params.beta
        rates = np.empty((size, n), dtype=np.float64)
        for i, x in enumerate(sites):
            S = np.zeros(size, dtype=np.float64)
            for y in neighbors(x):
                if y in siteset:
                    S += 2.0 * ((states >> siteset[y]) & 1) - 1.0
                elif bc.kind != "free":
                    S += bc.value_at(y)
            sx = 2.0 * ((states >> i) & 1) - 1.0
            rates[:, i] = 1.0 / (1.0 + np.exp(2.0 * beta * sx * S))
        self.flip_rates = rates
        Q = np.zeros((size, size), dtype=np.float64)
        for i in range(n):
            Q[states, states ^ (1 << i)] = rates[:, i]
        Q[states, states] = -rates.sum(axis=1)
        self.Q = Q
        self._verify()

    def _verify(self):
        mu = self.measure.probs
        size = mu.size
        states = np.arange(size, dtype=np.int64)
        if np.max(np.abs(self.Q.sum(axis=1))) > 1e-12 * self.n_sites:
            raise AssertionError("generator rows do not sum to zero")
        off = self.Q.copy()
        off[states, states] = 0.0
        if off.min() < 0:
            raise AssertionError("negative off-diagonal rate")
        for i in range(self.n_sites):
            flip = states ^ (1 << i)
            lhs = mu * self.flip_rates[:, i]
            rhs = mu[flip] * self.flip_rates[flip, i]
            if np.max(np.abs(lhs - rhs)) > 1e-12:
                raise AssertionError("detailed balance violated at construction")

    @property
    def uniformization_rate(self) -> float:
        return float(np.max(-np.diag(self.Q)))

    def transition_matrix(self, t: float) -> np.ndarray:
        """e^{tQ} by uniformization (nonnegative series in the jump kernel)
        with scaling-and-squaring for large qt.  The series order is forced
        past the site count so far-off-diagonal entries keep full relative
        accuracy even at astronomically small t."""
        return _expm_markov(self.Q, t, self.n_sites)

    def apply_semigroup(self, t: float, g: np.ndarray) -> np.ndarray:
        """P_t g = e^{tQ} g by vector uniformization."""
        return _expm_apply_dense(self.Q, t, np.asarray(g, dtype=np.float64), self.n_sites)


def _expm_markov(Q: np.ndarray, t: float, reach: int) -> np.ndarray:
    size = Q.shape[0]
    eye = np.eye(size)
    if t < 0:
        raise ValueError("t must be >= 0")
    q = float(np.max(-np.diag(Q)))
    if t == 0.0 or q == 0.0:
        return eye.copy()
    s = 0
    tt = t
    while q * tt > 1.0:
        tt *= 0.5
        s += 1
    P = eye + Q / q
    qt = q * tt
    w = math.exp(-qt)
    out = w * eye
    term = eye
    kmax = max(reach + 8, 40)
    for k in range(1, kmax + 1):
        term = term @ P
        w *= qt / k
        out += w * term
        if k >= reach + 4 and w < 1e-18:
            break
    for _ in range(s):
        out = out @ out
    return out


def _expm_apply_dense(Q: np.ndarray, t: float, v: np.ndarray, reach: int) -> np.ndarray:
    return _expm_apply(lambda u: Q @ u, float(np.max(-np.diag(Q))), t, v, reach)


def _expm_apply(Qdot: Callable[[np.ndarray], np.ndarray], q: float, t: float,
                v: np.ndarray, reach: int) -> np.ndarray:
    """e^{tQ} v by vector uniformization with the jump kernel P = I + Q/q."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0 or q == 0.0:
        return v.copy()
    qt = q * t
    w = math.exp(-qt)
    acc = w * v
    term = v.copy()
    kmax = int(qt + 12.0 * math.sqrt(qt + 1.0)) + reach + 24
    for k in range(1, kmax + 1):
        term = term + Qdot(term) / q
        w *= qt / k
        if w > 0.0:
            acc += w * term
        if k > qt and k >= reach + 4 and w < 1e-20:
            break
    return acc


def spectral_gap_estimate(gen: "GeneratorMatrix", iters: int = 200) -> float:
    """Crude spectral-gap estimate by power iteration on the mu-symmetrized
    jump kernel (used to pick the 'infinite' time in relaxation examples)."""
    q = gen.uniformization_rate
    if q == 0.0:
        return 1.0
    mu = gen.measure.probs
    root = np.sqrt(mu)
    S = root[:, None] * (np.eye(mu.size) + gen.Q / q) / root[None, :]
    # shift so the spectrum is nonnegative: power iteration then finds the
    # second-largest eigenvalue of S rather than the most negative one
    H = 0.5 * (S + np.eye(mu.size))
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(mu.size)
    v -= root * (root @ v)
    lam = 0.0
    for _ in range(iters):
        v = H @ v
        v -= root * (root @ v)  # deflate the stationary mode
        norm = np.linalg.norm(v)
        if norm == 0.0:
            return q
        lam = norm
        v /= norm
    return q * (1.0 - (2.0 * lam - 1.0))


class PairLaw:
    """Joint table P[eta, psi] = mu(eta) * e^{tQ}[eta, psi]; symmetric by
    reversibility, with marginals equal to mu."""

    def __init__(self, gen: GeneratorMatrix, t: float):
        if t < 0:
            raise ValueError("t must be >= 0")
        self.gen = gen
        self.t = float(t)
        self.table = gen.measure.probs[:, None] * gen.transition_matrix(t)
        self.validate()

    def validate(self):
        tot = float(self.table.sum())
        if abs(tot - 1.0) > 1e-10:
            raise AssertionError(f"pair law mass {tot} deviates from 1")
        asym = float(np.max(np.abs(self.table - self.table.T)))
        if asym > 1e-10:
            raise AssertionError(f"pair law asymmetry {asym}")
        mu = self.gen.measure.probs
        em = max(
            float(np.max(np.abs(self.table.sum(axis=1) - mu))),
            float(np.max(np.abs(self.table.sum(axis=0) - mu))),
        )
        if em > 1e-10:
            raise AssertionError(f"pair law marginal deviation {em}")

    def joint_prob(self, f0: np.ndarray, f1: np.ndarray) -> float:
        """P(f0(sigma) = 1, f1(sigma_t) = 1) for indicator vectors."""
        return float(f0 @ self.table @ f1)


def build_generator(region: Region, bc: BoundaryCondition = FREE, params: ModelParams = None,
                    cap: int = GENERATOR_CAP) -> GeneratorMatrix:
    if params is None:
        raise ValueError("params required")
    return GeneratorMatrix(region, bc, params, cap=cap)


def pair_law(gen: GeneratorMatrix, t: float) -> PairLaw:
    return PairLaw(gen, t)


# ----------------------------------------------------------------------------
# the coupled product-space generator
# ----------------------------------------------------------------------------

def coupled_generator(gen: GeneratorMatrix):
    """Generator of the pair process ((sigma_t, sigma_t^{(x)}) for any common
    start): ordered state-pairs, one shared ring decision per site.  At a ring
    on site y the two coordinates flip together with probability
    min(c_y(a), c_y(b)) and singly with the excess rates, which is exactly the
    shared-uniform flip rule."""
    n = gen.n_sites
    if n > COUPLED_CAP:
        raise ValueError(f"coupled generator cap is {COUPLED_CAP} sites")
    size = 1 << n
    psize = size * size
    idx = np.arange(psize, dtype=np.int64)
    a = idx >> n
    b = idx & (size - 1)
    rows = []
    cols = []
    data = []
    diag = np.zeros(psize, dtype=np.float64)
    for x in range(n):
        bit = 1 << x
        cA = gen.flip_rates[a, x]
        cB = gen.flip_rates[b, x]
        m = np.minimum(cA, cB)
        ea = cA - m
        eb = cB - m
        diag -= np.maximum(cA, cB)
        for rate, col in (
            (m, ((a ^ bit) << n) | (b ^ bit)),
            (ea, ((a ^ bit) << n) | b),
            (eb, (a << n) | (b ^ bit)),
        ):
            nz = rate > 0.0
            if np.any(nz):
                rows.append(idx[nz].astype(np.int64))
                cols.append(col[nz].astype(np.int64))
                data.append(rate[nz])
    rows.append(idx)
    cols.append(idx)
    data.append(diag)
    Qp = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(psize, psize),
    )
    qmax = float(np.max(-diag))
    return Qp, qmax


def check_differential_formula(gen: GeneratorMatrix, f: np.ndarray, g: np.ndarray, t: float,
                               tol: float = 1e-8) -> OracleReport:
    """|LHS - RHS| for -d/dt E[f(sigma) g(sigma_t)]: the exact derivative via
    Q against the coupled-pair expectation
    (1/2) sum_x E[c_x(sigma) (f(sigma^x)-f(sigma)) (g(sigma_t^{(x)})-g(sigma_t))]."""
    n = gen.n_sites
    size = 1 << n
    mu = gen.measure.probs
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    ptg = gen.apply_semigroup(t, g)
    lhs = -float(np.sum(mu * f * (gen.Q @ ptg)))
    Qp, qmax = coupled_generator(gen)
    G = (g[None, :] - g[:, None]).ravel()  # G[(a,b)] = g(b) - g(a), index a<<n | b
    V = _expm_apply(lambda u: Qp @ u, qmax, t, G, 2 * n)
    states = np.arange(size, dtype=np.int64)
    rhs = 0.0
    rhs_factored = 0.0
    for x in range(n):
        bit = 1 << x
        flip = states ^ bit
        w = mu * gen.flip_rates[:, x] * (f[flip] - f)
        rhs += 0.5 * float(np.sum(w * V[(states << n) | flip]))
        rhs_factored += 0.5 * float(np.sum(w * (ptg[flip] - ptg)))
    resid = abs(lhs - rhs)
    coupling_resid = abs(rhs - rhs_factored)
    return OracleReport(
        name="differential_formula",
        params={"t": t, "beta": gen.params.beta, "sites": n},
        worst_slack=tol - resid,
        passed=resid <= tol,
        details={"lhs": lhs, "rhs": rhs, "residual": resid,
                 "coupling_vs_factored": coupling_resid},
    )


# ----------------------------------------------------------------------------
# increasing-function catalogs and FKG
# ----------------------------------------------------------------------------

def build_increasing_catalog(gen: GeneratorMatrix) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """Fixed catalog of increasing product-form functions on state pairs:
    entries (name, f0, f1) stand for F(eta, psi) = f0(eta) * f1(psi) with f0,
    f1 increasing and nonnegative."""
    mu = gen.measure
    size = 1 << mu.n_sites
    ones = np.ones(size)
    catalog = []
    for i, x in enumerate(mu.sites):
        ind = (mu.spin_column(x) + 1.0) / 2.0
        catalog.append((f"spin+@{x}|t0", ind, ones))
        catalog.append((f"spin+@{x}|t1", ones, ind))
        catalog.append((f"spin+@{x}|both", ind, ind))
    k = min(3, mu.n_sites)
    sub = np.ones(size)
    for x in mu.sites[:k]:
        sub = sub * (mu.spin_column(x) + 1.0) / 2.0
    catalog.append(("allplus_subset|t0", sub, ones))
    catalog.append(("allplus_subset|both", sub, sub))
    return catalog


def check_dynamical_fkg(gen: GeneratorMatrix, t: float,
                        catalog: Optional[Sequence] = None,
                        tol: float = 1e-12) -> OracleReport:
    """min over catalog pairs of E[F G] - E[F] E[G] for increasing F, G of the
    pair (sigma, sigma_t); must be >= -tol."""
    if catalog is None:
        catalog = build_increasing_catalog(gen)
    law = pair_law(gen, t)
    T = law.table
    worst = math.inf
    worst_pair = None
    for i in range(len(catalog)):
        for j in range(i, len(catalog)):
            nf, f0, f1 = catalog[i]
            ng, g0, g1 = catalog[j]
            eF = float(f0 @ T @ f1)
            eG = float(g0 @ T @ g1)
            eFG = float((f0 * g0) @ T @ (f1 * g1))
            cov = eFG - eF * eG
            if cov < worst:
                worst = cov
                worst_pair = (nf, ng)
    return OracleReport(
        name="dynamical_fkg",
        params={"t": t, "beta": gen.params.beta, "sites": gen.n_sites,
                "catalog_size": len(catalog)},
        worst_slack=worst + tol,
        passed=worst >= -tol,
        details={"min_covariance": worst, "worst_pair": worst_pair},
    )


# ----------------------------------------------------------------------------
# finite energy
# ----------------------------------------------------------------------------

def check_finite_energy(gen: GeneratorMatrix, consts: Constants, t: float) -> OracleReport:
    """Exhaustive verification over all (eta, psi, x, s) of the one-site
    modification bounds on the pair law:

      P(sigma=eta, sigma_t=psi^x) >= sqrt(c_fe) * t^delta * P(sigma=eta, sigma_t=psi)
      with delta = psi(x) eta(x), and the synchronized form
      P(sigma=eta^{x<-s}, sigma_t=psi^{x<-s}) >= c_fe * P(sigma=eta, sigma_t=psi)."""
    if t > consts.tau:
        raise ValueError("finite-energy checks require t <= tau")
    n = gen.n_sites
    if n > 7:
        raise ValueError("exhaustive finite-energy check caps at 7 sites")
    size = 1 << n
    T = pair_law(gen, t).table
    states = np.arange(size, dtype=np.int64)
    sqrt_c = math.sqrt(consts.c_fe)
    violations = 0
    worst = math.inf
    guard = 1e-9
    for x in range(n):
        bit = 1 << x
        flip = states ^ bit
        # delta = psi(x) eta(x): +1 when bits agree, -1 otherwise
        eta_bit = ((states[:, None] >> x) & 1)
        psi_bit = ((states[None, :] >> x) & 1)
        agree = eta_bit == psi_bit
        factor = np.where(agree, sqrt_c * t, (sqrt_c / t) if t > 0 else np.inf)
        lhs = T[:, flip]
        rhs = factor * T
        if t == 0.0:
            rhs = np.where(agree, 0.0, np.inf)  # t^{+1} = 0; t^{-1} undefined
            bad = (lhs < rhs) & agree
        else:
            bad = lhs < rhs * (1.0 - guard)
        violations += int(np.sum(bad))
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(rhs > 0, lhs / rhs, np.inf)
        worst = min(worst, float(np.min(ratio)))
        # synchronized modification, both values of s
        for sval in (0, 1):
            seta = np.where(((states >> x) & 1) == sval, states, flip)[:, None]
            spsi = np.where(((states >> x) & 1) == sval, states, flip)[None, :]
            lhs2 = T[seta, spsi]
            bad2 = lhs2 < consts.c_fe * T * (1.0 - guard)
            violations += int(np.sum(bad2))
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio2 = np.where(T > 0, lhs2 / (consts.c_fe * T), np.inf)
            worst = min(worst, float(np.min(ratio2)))
    return OracleReport(
        name="finite_energy",
        params={"t": t, "beta": gen.params.beta, "sites": n,
                "c_fe": consts.c_fe, "tau": consts.tau},
        worst_slack=worst - 1.0,
        passed=violations == 0,
        details={"violations": violations, "worst_ratio": worst,
                 "checks": 2 * size * size * n + size * size * n},
    )


# ----------------------------------------------------------------------------
# failure of the pair spatial Markov property
# ----------------------------------------------------------------------------

def _three_path_region() -> Region:
    return ExplicitRegion([(-1, 0), (0, 0), (1, 0)])


def check_pair_not_markov(beta: float = 3.0, t: float = 0.01) -> OracleReport:
    """On the 3-vertex path x-y-z, conditioning the pair on the middle vertex
    does not screen off the far vertex: with the y-pair fixed to (+1, -1),
    changing the z-pair from (-1, -1) to (+1, +1) strictly lowers the
    conditional probability of the x-pair (+1, +1)."""
    region = _three_path_region()
    gen = build_generator(region, FREE, ModelParams(beta))
    T = pair_law(gen, t).table
    ix, iy, iz = 0, 1, 2  # row-major site order: (-1,0), (0,0), (1,0)
    states = np.arange(8, dtype=np.int64)

    def pairmask(site, v0, v1):
        a = ((states[:, None] >> site) & 1) == (1 if v0 > 0 else 0)
        b = ((states[None, :] >> site) & 1) == (1 if v1 > 0 else 0)
        return a & b

    y_cond = pairmask(iy, 1, -1)
    x_event = pairmask(ix, 1, 1)
    lhs_den = float(T[y_cond & pairmask(iz, -1, -1)].sum())
    lhs_num = float(T[y_cond & pairmask(iz, -1, -1) & x_event].sum())
    rhs_den = float(T[y_cond & pairmask(iz, 1, 1)].sum())
    rhs_num = float(T[y_cond & pairmask(iz, 1, 1) & x_event].sum())
    lhs = lhs_num / lhs_den if lhs_den > 0 else float("nan")
    rhs = rhs_num / rhs_den if rhs_den > 0 else float("nan")
    margin = lhs - rhs
    return OracleReport(
        name="pair_not_markov",
        params={"beta": beta, "t": t},
        worst_slack=margin,
        passed=bool(margin > 0),
        details={"conditional_far_minus": lhs, "conditional_far_plus": rhs,
                 "margin": margin},
    )


# ----------------------------------------------------------------------------
# correlation shape and the Cauchy-Schwarz trick
# ----------------------------------------------------------------------------

def check_correlation_shape(gen: GeneratorMatrix, f: np.ndarray, tgrid: Sequence[float],
                            tol: float = 1e-12) -> OracleReport:
    """rho(t) = E[f(sigma) f(sigma_t)] on the grid: bounded below by
    (int f dmu)^2, non-increasing, and convex (divided differences)."""
    f = np.asarray(f, dtype=np.float64)
    mu = gen.measure.probs
    tgrid = sorted(float(t) for t in tgrid)
    rho = []
    for t in tgrid:
        rho.append(float(np.sum(mu * f * gen.apply_semigroup(t, f))))
    mean_sq = float(np.sum(mu * f)) ** 2
    lower = min(r - mean_sq for r in rho)
    mono = min(rho[i] - rho[i + 1] for i in range(len(rho) - 1)) if len(rho) > 1 else 0.0
    convex = 0.0
    if len(rho) > 2:
        slopes = [(rho[i + 1] - rho[i]) / (tgrid[i + 1] - tgrid[i]) for i in range(len(rho) - 1)]
        convex = min(slopes[i + 1] - slopes[i] for i in range(len(slopes) - 1))
    worst = min(lower, mono, convex)
    return OracleReport(
        name="correlation_shape",
        params={"beta": gen.params.beta, "sites": gen.n_sites, "grid": tgrid},
        worst_slack=worst + tol,
        passed=worst >= -tol,
        details={"rho": rho, "mean_squared": mean_sq,
                 "min_lower_slack": lower, "min_monotone_slack": mono,
                 "min_convexity_slack": convex},
    )


def check_cauchy_schwarz(gen: GeneratorMatrix, t: float,
                         catalog: Sequence[tuple[str, np.ndarray, np.ndarray]],
                         tol: float = 1e-12) -> OracleReport:
    """P(sigma in A, sigma_t in B) <= max(P(sigma, sigma_t in A),
    P(sigma, sigma_t in B)) for catalog pairs of indicator vectors."""
    T = pair_law(gen, t).table
    worst = math.inf
    worst_name = None
    for name, A, B in catalog:
        cross = float(A @ T @ B)
        diag = max(float(A @ T @ A), float(B @ T @ B))
        slack = diag - cross
        if slack < worst:
            worst = slack
            worst_name = name
    return OracleReport(
        name="cauchy_schwarz_trick",
        params={"t": t, "beta": gen.params.beta, "sites": gen.n_sites},
        worst_slack=worst + tol,
        passed=worst >= -tol,
        details={"worst_pair": worst_name},
    )


def compare_pair_counts(law: PairLaw, counts: np.ndarray, min_expected: float = 10.0):
    """Compare empirical pair-cell counts to the exact pair law: per-cell
    z-scores for cells with expected count >= min_expected.  Returns
    (max |z|, number of compared cells)."""
    trials = float(counts.sum())
    expected = law.table * trials
    sel = expected >= min_expected
    if not np.any(sel):
        return 0.0, 0
    p = law.table[sel]
    sd = np.sqrt(trials * p * (1.0 - p))
    z = (counts[sel] - expected[sel]) / sd
    return float(np.max(np.abs(z))), int(sel.sum())
