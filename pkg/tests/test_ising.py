import itertools
import math

import numpy as np
import pytest

from conftest import SMALL_REGIONS, sigma3
from dynising.ising import (FREE, MINUS, PLUS, BoundaryCondition, ExactMeasure,
                            ModelParams, SpinConfig, beta_c, energy,
                            exact_measure, rate, sample_equilibrium)
from dynising.lattice import (ExplicitRegion, Rhombus, embed,
                              exterior_boundary, neighbors)


def brute_edge_count(region):
    """Independent edge count from the Euclidean embedding."""
    sites = region.sites()
    cnt = 0
    for i, a in enumerate(sites):
        for b in sites[i + 1:]:
            if abs(math.dist(embed(a), embed(b)) - 1.0) < 1e-9:
                cnt += 1
    return cnt


def test_energy_all_plus_lambda1():
    r = Rhombus((0, 0), 1)
    cfg = SpinConfig.constant(r, 1)
    assert energy(cfg, FREE) == -brute_edge_count(r) == -16


def test_energy_single_site_plus_bc():
    r = ExplicitRegion([(0, 0)])
    cfg = SpinConfig.constant(r, 1)
    assert energy(cfg, PLUS) == -6
    assert energy(cfg, FREE) == 0
    assert energy(cfg.with_flip((0, 0)), PLUS) == 6


def test_energy_flip_identity(rng):
    # flipping one spin changes H by 2 * eta(x) * (local field), exhaustively
    r = Rhombus((0, 0), 1)
    for _ in range(20):
        g = rng.choice(np.array([-1, 1], dtype=np.int8), size=(3, 3))
        cfg = SpinConfig(r, g.copy())
        for x in r:
            field = sum(cfg.spin(y) for y in neighbors(x) if r.contains(y))
            dh = energy(cfg.with_flip(x), FREE) - energy(cfg, FREE)
            assert dh == 2 * cfg.spin(x) * field


def test_mixed_bc_validation():
    r = ExplicitRegion([(0, 0)])
    with pytest.raises(ValueError):
        BoundaryCondition("mixed", {(1, 0): 1}).validate(r)
    full = {y: 0 for y in exterior_boundary(r)}
    BoundaryCondition("mixed", full).validate(r)
    with pytest.raises(ValueError):
        BoundaryCondition("mixed", {(1, 0): 2})
    # a fully-zero mixed bc behaves like free
    cfg = SpinConfig.constant(r, 1)
    assert energy(cfg, BoundaryCondition("mixed", full)) == energy(cfg, FREE)


def test_rate_values():
    r = Rhombus((0, 0), 1)
    cfg = SpinConfig.constant(r, 1)
    cfg2 = cfg.copy()
    # balance the center's neighborhood: 3 up, 3 down
    for y in [(1, 0), (0, 1), (-1, 1)]:
        cfg2.set_spin(y, -1)
    assert rate(cfg2, (0, 0), FREE, ModelParams(0.7)) == pytest.approx(0.5)
    assert rate(cfg, (0, 0), FREE, ModelParams(0.15)) == pytest.approx(1 / (1 + math.exp(1.8)))
    with pytest.raises(ValueError):
        rate(cfg, (5, 5), FREE, ModelParams(0.15))


def test_rate_detailed_balance_exhaustive():
    betas = [0.1, 0.3, 1.0]
    for name, region in SMALL_REGIONS.items():
        ext = exterior_boundary(region)
        mixed = BoundaryCondition("mixed", {y: [-1, 0, 1][i % 3] for i, y in enumerate(sorted(ext))})
        for bc in (FREE, PLUS, MINUS, mixed):
            for beta in betas:
                p = ModelParams(beta)
                mu = exact_measure(region, bc, p)
                for s in range(1 << mu.n_sites):
                    cfg = mu.config_of(s)
                    for x in region:
                        lhs = mu.prob(cfg) * rate(cfg, x, bc, p)
                        flip = cfg.with_flip(x)
                        rhs = mu.prob(flip) * rate(flip, x, bc, p)
                        assert lhs == pytest.approx(rhs, abs=1e-14)


def test_exact_measure_single_site():
    mu = exact_measure(ExplicitRegion([(0, 0)]), FREE, ModelParams(0.7))
    assert mu.probs == pytest.approx([0.5, 0.5])


def test_exact_measure_beta_to_zero_uniform():
    r = SMALL_REGIONS["hex7"]
    mu = exact_measure(r, FREE, ModelParams(1e-12))
    assert np.max(np.abs(mu.probs - 1 / 128)) < 1e-9


def test_exact_measure_two_site_value():
    # independent 4-state enumeration: H(++) = H(--) = -1, H(+-) = H(-+) = +1
    beta = 0.5
    w_agree = math.exp(beta)
    w_dis = math.exp(-beta)
    expected = w_agree / (2 * w_agree + 2 * w_dis)
    assert expected == pytest.approx(0.36552928931500245)
    r = ExplicitRegion([(0, 0), (1, 0)])
    mu = exact_measure(r, FREE, ModelParams(beta))
    cfg = SpinConfig.constant(r, 1)
    assert mu.prob(cfg) == pytest.approx(expected, abs=1e-14)
    assert mu.probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_exact_measure_cap():
    with pytest.raises(ValueError):
        exact_measure(Rhombus((0, 0), 2), FREE, ModelParams(0.3))  # 25 sites


def increasing_catalog(mu):
    """(name, indicator vector) for a few increasing events."""
    size = 1 << mu.n_sites
    out = [("allplus", np.array([1.0 if s == size - 1 else 0.0 for s in range(size)]))]
    for x in mu.sites[:3]:
        out.append((f"spin+{x}", (mu.spin_column(x) + 1) / 2))
    sub = np.ones(size)
    for x in mu.sites[: min(3, mu.n_sites)]:
        sub = sub * (mu.spin_column(x) + 1) / 2
    out.append(("subset", sub))
    return out


def test_fkg_exact():
    for name in ("path3", "plus5", "rhombus9"):
        mu = exact_measure(SMALL_REGIONS[name], FREE, ModelParams(0.4))
        cat = increasing_catalog(mu)
        for _, f in cat:
            for _, g in cat:
                cov = mu.expectation(f * g) - mu.expectation(f) * mu.expectation(g)
                assert cov >= -1e-12


def test_mon_exact():
    for name in ("pair", "plus5", "rhombus9"):
        region = SMALL_REGIONS[name]
        p = ModelParams(0.5)
        mus = {bc.kind: exact_measure(region, bc, p) for bc in (PLUS, FREE, MINUS)}
        for _, f in increasing_catalog(mus["free"]):
            e_plus = mus["plus"].expectation(f)
            e_free = mus["free"].expectation(f)
            e_minus = mus["minus"].expectation(f)
            assert e_plus >= e_free - 1e-12
            assert e_free >= e_minus - 1e-12


def test_smp_exact():
    # conditional law of W given the complement equals the Ising measure on W
    # with the induced boundary condition
    region = SMALL_REGIONS["hex7"]
    W = ExplicitRegion([(0, 0), (1, 0)])
    rest = [x for x in region if not W.contains(x)]
    p = ModelParams(0.6)
    for bc in (FREE, PLUS):
        mu = exact_measure(region, bc, p)
        for assign in itertools.product((-1, 1), repeat=len(rest)):
            eta = dict(zip(rest, assign))
            # conditional distribution over W-configs
            joint = {}
            total = 0.0
            for wa in itertools.product((-1, 1), repeat=W.site_count()):
                cfg = SpinConfig.constant(region, 1)
                for x, s in eta.items():
                    cfg.set_spin(x, s)
                for x, s in zip(W.sites(), wa):
                    cfg.set_spin(x, s)
                pr = mu.prob(cfg)
                joint[wa] = pr
                total += pr
            # induced boundary condition on W
            psi = {}
            for y in exterior_boundary(W):
                if region.contains(y):
                    psi[y] = eta[y] if y in eta else None
                    assert psi[y] is not None
                else:
                    psi[y] = bc.value_at(y)
            muW = exact_measure(W, BoundaryCondition("mixed", psi), p)
            for wa in joint:
                cfgW = SpinConfig.constant(W, 1)
                for x, s in zip(W.sites(), wa):
                    cfgW.set_spin(x, s)
                assert joint[wa] / total == pytest.approx(muW.prob(cfgW), abs=1e-12)


def test_beta_c_value():
    assert beta_c() == pytest.approx(math.log(3) / 4)
    assert 0 < beta_c() < 1


def test_beta_c_magnetization_diagnostic(rng):
    # <eta(o)>^+ decays toward 0 below beta_c and stays away from 0 above it;
    # cluster sampling with the ghost boundary orders the supercritical side
    r = Rhombus((0, 0), 24)
    vals = {}
    for fac in (0.9, 1.2):
        p = ModelParams(fac * beta_c())
        acc = 0.0
        ntr = 150
        for _ in range(ntr):
            cfg = sample_equilibrium(r, PLUS, p, "cluster", rng, cluster_updates=800)
            acc += cfg.spin((0, 0))
        vals[fac] = acc / ntr
    assert vals[0.9] < 0.25
    assert vals[1.2] > 0.6


def test_sampler_exact_single_site(rng):
    r = ExplicitRegion([(0, 0)])
    mu = exact_measure(r, FREE, ModelParams(0.9))
    hits = sum(mu.sample(rng).spin((0, 0)) > 0 for _ in range(10 ** 5))
    assert abs(hits / 10 ** 5 - 0.5) < 0.005


@pytest.mark.parametrize("method", ["cluster", "burnin"])
def test_sampler_beta0_product(rng, method):
    r = Rhombus((0, 0), 4)
    p = ModelParams(0.0)
    n = 4000
    s_center = np.empty(n)
    s_other = np.empty(n)
    for i in range(n):
        cfg = sample_equilibrium(r, FREE, p, method, rng)
        s_center[i] = cfg.spin((0, 0))
        s_other[i] = cfg.spin((2, -1))
    assert abs(s_center.mean()) < sigma3(0.5, n) * 2
    assert abs(s_other.mean()) < sigma3(0.5, n) * 2
    corr = np.mean(s_center * s_other)
    assert abs(corr) < sigma3(0.5, n) * 2


def test_cluster_sampler_matches_exact_tv(rng):
    # Validated against the exact measure.  At beta = 0.5 the measure is
    # concentrated enough that the 0.02 TV budget at 1e5 draws leaves room
    # above the pure-sampling-noise floor (at small beta the floor alone
    # exceeds 0.02 over 512 states).
    r = Rhombus((0, 0), 1)
    p = ModelParams(0.5)
    mu = exact_measure(r, FREE, p)
    counts = np.zeros(512)
    n = 10 ** 5
    for _ in range(n):
        cfg = sample_equilibrium(r, FREE, p, "cluster", rng)
        counts[mu.state_of(cfg)] += 1
    tv = 0.5 * np.abs(counts / n - mu.probs).sum()
    assert tv < 0.02


def test_wolff_plus_bc_matches_exact(rng):
    r = Rhombus((0, 0), 1)
    p = ModelParams(0.4)
    mu = exact_measure(r, PLUS, p)
    counts = np.zeros(512)
    n = 30000
    for _ in range(n):
        cfg = sample_equilibrium(r, PLUS, p, "cluster", rng)
        counts[mu.state_of(cfg)] += 1
    tv = 0.5 * np.abs(counts / n - mu.probs).sum()
    assert tv < 0.03


def test_unknown_method(rng):
    with pytest.raises(ValueError):
        sample_equilibrium(Rhombus((0, 0), 1), FREE, ModelParams(0.1), "bogus", rng)


def test_spin_config_text_roundtrip():
    r = Rhombus((0, 0), 1)
    cfg = SpinConfig.constant(r, 1)
    cfg.set_spin((0, -1), -1)
    txt = cfg.to_text()
    back = SpinConfig.from_text(r, txt)
    assert back == cfg
    # annulus has masked cells
    from dynising.lattice import Annulus
    a = Annulus((0, 0), 1, 2)
    cfg2 = SpinConfig.constant(a, -1)
    assert SpinConfig.from_text(a, cfg2.to_text()) == cfg2


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(-0.1)
    ModelParams(0.0)


GOLDEN_TEXT = """\
+-+
-+-
+--"""


def test_golden_text_block():
    # frozen row-major text block on Lambda_1: rows are k = -1, 0, 1
    r = Rhombus((0, 0), 1)
    cfg = SpinConfig.from_text(r, GOLDEN_TEXT)
    assert cfg.spin((-1, -1)) == 1
    assert cfg.spin((-1, 0)) == -1
    assert cfg.spin((0, 0)) == 1
    assert cfg.spin((1, 1)) == -1
    assert cfg.to_text() == GOLDEN_TEXT
    assert energy(cfg, FREE) == 4.0  # by hand: 10 disagreeing, 6 agreeing edges


def test_hybrid_sampler_budget_stationarity():
    # doubling the hybrid budget does not move the crossing estimate beyond
    # combined 3 sigma (equilibration adequacy at the production beta)
    from dynising.events import Cross
    from dynising.harness import SamplerSettings, estimate_static
    beta = 0.8 * beta_c()
    n_tr = 10 ** 4
    a = estimate_static(Cross(8), beta, n_tr, seed=901,
                        sampler=SamplerSettings(hybrid_sweeps=24))
    b = estimate_static(Cross(8), beta, n_tr, seed=902,
                        sampler=SamplerSettings(hybrid_sweeps=96,
                                                hybrid_updates=33 * 33))
    comb = 3 * math.sqrt(2 * 0.25 / n_tr)
    assert abs(a.p_hat - b.p_hat) < comb
