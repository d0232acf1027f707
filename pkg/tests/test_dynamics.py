import math

import numpy as np
import pytest

from conftest import SMALL_REGIONS, sigma3
from dynising import oracle as O
from dynising.dynamics import (Constants, RingSchedule, constants,
                               coupled_simulate, dec_event, green_cluster,
                               green_cluster_sizes, green_set, make_schedule,
                               red_cluster, red_set, simulate)
from dynising.ising import FREE, ModelParams, SpinConfig, exact_measure, sample_equilibrium
from dynising.lattice import ExplicitRegion, Rhombus


def test_schedule_horizon_zero(rng):
    r = Rhombus((0, 0), 2)
    s = make_schedule(r, 0.0, rng)
    assert len(s) == 0
    s.validate()


def test_schedule_poisson_statistics(rng):
    r = Rhombus((0, 0), 1)
    horizon = 2.0
    n = 20000
    total = 0
    voids = 0
    for _ in range(n):
        s = make_schedule(r, 0.5, rng)
        voids += int((s.ring_counts()[1, 1] == 0))
    for _ in range(n):
        s = make_schedule(r, horizon, rng)
        total += len(s)
    mean_per_site = total / (n * 9)
    assert abs(mean_per_site - horizon) < 3 * math.sqrt(horizon / (n * 9))
    # void probability at t = 0.5
    assert abs(voids / n - math.exp(-0.5)) < sigma3(math.exp(-0.5), n)


def test_simulate_empty_schedule_identity(rng):
    r = Rhombus((0, 0), 3)
    cfg = sample_equilibrium(r, FREE, ModelParams(0.2), "burnin", rng, sweeps=4)
    s = make_schedule(r, 0.0, rng)
    assert simulate(cfg, s, FREE, ModelParams(0.2)) == cfg


def test_simulate_beta0_flip_probability(rng):
    r = Rhombus((0, 0), 2)
    cfg = SpinConfig.constant(r, 1)
    p = ModelParams(0.0)
    n = 30000
    flips = 0
    for _ in range(n):
        s = make_schedule(r, 1.0, rng)
        flips += simulate(cfg, s, FREE, p, 1.0).spin((0, 0)) != 1
    expected = (1 - math.exp(-1)) / 2
    assert abs(flips / n - expected) < sigma3(expected, n)


def test_simulate_deterministic(rng):
    r = Rhombus((0, 0), 3)
    cfg = sample_equilibrium(r, FREE, ModelParams(0.25), "burnin", rng, sweeps=4)
    s = make_schedule(r, 1.5, rng)
    a = simulate(cfg, s, FREE, ModelParams(0.25))
    b = simulate(cfg, s, FREE, ModelParams(0.25))
    assert np.array_equal(a.grid, b.grid)


def test_simulate_until_beyond_horizon(rng):
    r = Rhombus((0, 0), 1)
    s = make_schedule(r, 1.0, rng)
    with pytest.raises(ValueError):
        simulate(SpinConfig.constant(r, 1), s, FREE, ModelParams(0.1), 2.0)


def test_single_site_against_pair_law(rng):
    region = ExplicitRegion([(0, 0)])
    p = ModelParams(0.9)
    gen = O.build_generator(region, FREE, p)
    law = O.pair_law(gen, 0.7)
    stay = law.table[1, 1] / 0.5
    cfg = SpinConfig.constant(region, 1)
    n = 30000
    hits = 0
    for _ in range(n):
        s = make_schedule(region, 0.7, rng)
        hits += simulate(cfg, s, FREE, p, 0.7).spin((0, 0)) == 1
    assert abs(hits / n - stay) < sigma3(stay, n)


def test_coupled_empty_and_never_rings(rng):
    r = Rhombus((0, 0), 2)
    cfg = SpinConfig.constant(r, 1)
    s0 = make_schedule(r, 0.0, rng)
    a, b = coupled_simulate(cfg, (0, 0), s0, FREE, ModelParams(0.3))
    assert a == cfg and b == cfg.with_flip((0, 0))
    # beta = 0, remove any rings at x: outputs still differ at x
    p = ModelParams(0.0)
    for _ in range(50):
        s = make_schedule(r, 0.5, rng)
        keep = ~((s.idx_i == 2) & (s.idx_j == 2))
        s2 = RingSchedule(r, s.horizon, s.idx_i[keep], s.idx_j[keep],
                         s.times[keep], s.uniforms[keep])
        a, b = coupled_simulate(cfg, (0, 0), s2, FREE, p)
        assert a.spin((0, 0)) != b.spin((0, 0))


@pytest.mark.parametrize("cut", [0.05, 7.6e-44])
def test_coupled_confined_to_green_cluster(rng, cut):
    r = Rhombus((0, 0), 4)
    p = ModelParams(0.25)
    for _ in range(300):
        cfg = sample_equilibrium(r, FREE, p, "burnin", rng, sweeps=6)
        s = make_schedule(r, cut, rng)
        a, b = coupled_simulate(cfg, (0, 0), s, FREE, p, cut)
        allowed = green_cluster(s, cut, (0, 0)) | {(0, 0)}
        diff = {x for x in r if a.spin(x) != b.spin(x)}
        assert diff <= allowed


def test_green_red_definitions(rng):
    r = Rhombus((0, 0), 2)
    empty = RingSchedule(r, 1.0, np.empty(0, np.int32), np.empty(0, np.int32),
                        np.empty(0), np.empty(0))
    assert green_set(empty, 1.0) == set()
    assert green_cluster(empty, 1.0, (0, 0)) == set()
    assert red_set(empty, set(), 1.0) == set()

    def sched_with(rings):
        ii = np.array([k + 2 for k, _ in rings], np.int32)
        jj = np.array([m + 2 for _, m in rings], np.int32)
        tt = np.linspace(0.1, 0.2, len(rings))
        return RingSchedule(r, 1.0, ii, jj, tt, np.full(len(rings), 0.5))

    only_x = sched_with([(0, 0)])
    assert green_set(only_x, 1.0) == {(0, 0)}
    assert green_cluster(only_x, 1.0, (0, 0)) == {(0, 0)}
    only_nbr = sched_with([(1, 0)])
    assert green_cluster(only_nbr, 1.0, (0, 0)) == {(1, 0)}
    # red set: z in D needs two rings, z outside D needs one
    twice = sched_with([(0, 0), (0, 0), (1, 0)])
    assert red_set(twice, {(0, 0)}, 1.0) == {(0, 0), (1, 0)}
    once = sched_with([(0, 0), (1, 0)])
    assert red_set(once, {(0, 0)}, 1.0) == {(1, 0)}
    assert red_cluster(once, {(0, 0)}, 1.0, (1, 0)) == {(1, 0)}


def test_green_cluster_sizes_matches_bfs(rng):
    r = Rhombus((0, 0), 4)
    for _ in range(50):
        s = make_schedule(r, 0.4, rng)
        sizes = green_cluster_sizes(s, 0.4, list(r))
        for x in [(0, 0), (2, -1), (-3, 3)]:
            assert sizes[x] == len(green_cluster(s, 0.4, x))


def test_dec_event(rng):
    r = Rhombus((0, 0), 2)
    empty = RingSchedule(r, 1.0, np.empty(0, np.int32), np.empty(0, np.int32),
                        np.empty(0), np.empty(0))
    assert dec_event(empty, list(r), 1.0)
    with pytest.raises(ValueError):
        dec_event(empty, [], 1.0)
    # |S| = 1 requires an empty green cluster around that site
    ii = np.array([2], np.int32)
    jj = np.array([2], np.int32)
    ring_x = RingSchedule(r, 1.0, ii, jj, np.array([0.3]), np.array([0.5]))
    assert not dec_event(ring_x, [(0, 0)], 1.0)
    # a full rung neighborhood violates |G_x| <= log 9
    rings = [(0, 0)] + [(1, 0), (-1, 0), (0, 1)]
    ii = np.array([k + 2 for k, _ in rings], np.int32)
    jj = np.array([m + 2 for _, m in rings], np.int32)
    s9 = RingSchedule(r, 1.0, ii, jj, np.linspace(0.1, 0.2, 4), np.full(4, 0.5))
    assert not dec_event(s9, list(Rhombus((0, 0), 1)), 1.0)


def test_constants_values_and_bounds():
    c0 = constants(ModelParams(0.0), 64)
    assert c0.a == pytest.approx(0.5)
    assert c0.c_fe == pytest.approx(0.5 ** 14 / 16)
    assert c0.c_fe == pytest.approx(3.814697265625e-06)
    assert c0.tau == pytest.approx(c0.c_fe ** 2 / (1e6 * 64))
    assert constants(ModelParams(0.1)).a > constants(ModelParams(0.3)).a
    with pytest.raises(ValueError):
        constants(ModelParams(0.3), M=0.5)
    # the geometric bound of the first series check, evaluated directly
    c = constants(ModelParams(0.3), 64)
    r6 = 64 * c.tau / (2 * math.sqrt(c.c_fe))
    total = (1 / (2 * math.sqrt(c.c_fe))) / (1 - r6)
    assert total <= 1 / math.sqrt(c.c_fe)
    # exponential-tail bound at a few integer lambdas
    rho = 16 * 64 * c.tau / c.c_fe
    for lam in (1, 2, 5):
        assert (16 / c.c_fe) * rho ** lam / (1 - rho) <= math.exp(-lam)


def test_green_tail_bound_at_tau(rng):
    # P(|G_x| >= lambda) <= e^-lambda at the paper cutoff (trivial there:
    # tau is astronomically small so the green set is a.s. empty)
    p = ModelParams(0.3)
    c = constants(p)
    r = Rhombus((0, 0), 4)
    n = 2000
    exceed = np.zeros(3)
    for _ in range(n):
        s = make_schedule(r, c.tau, rng)
        gx = len(green_cluster(s, c.tau, (0, 0))) if len(s) else 0
        for i, lam in enumerate((1, 2, 3)):
            exceed[i] += gx >= lam
    for i, lam in enumerate((1, 2, 3)):
        assert exceed[i] / n <= math.exp(-lam) + sigma3(math.exp(-lam), n)


def test_monotone_coupling_resample_rule(rng):
    r = Rhombus((0, 0), 4)
    p = ModelParams(0.25)
    for _ in range(1000):
        g1 = rng.choice(np.array([-1, 1], dtype=np.int8), size=(9, 9))
        g2 = np.maximum(g1, rng.choice(np.array([-1, 1], dtype=np.int8), size=(9, 9)))
        s = make_schedule(r, 0.4, rng)
        a = simulate(SpinConfig(r, g1.copy()), s, FREE, p, rule="resample")
        b = simulate(SpinConfig(r, g2.copy()), s, FREE, p, rule="resample")
        assert not np.any(a.grid > b.grid)


def test_reversibility_sample_level(rng):
    # P(sigma in A, sigma_t in B) vs P(sigma in B, sigma_t in A) on a small
    # region, validated exactly by the symmetric pair law, sampled at 3 sigma
    region = SMALL_REGIONS["plus5"]
    p = ModelParams(0.4)
    t = 0.6
    mu = exact_measure(region, FREE, p)

    def a_ind(cfg):
        return cfg.spin((0, 0)) > 0

    def b_ind(cfg):
        return cfg.spin((1, 0)) > 0 and cfg.spin((0, 1)) > 0

    n = 20000
    ab = 0
    ba = 0
    for _ in range(n):
        cfg0 = mu.sample(rng)
        s = make_schedule(region, t, rng)
        cfgt = simulate(cfg0, s, FREE, p, t)
        ab += a_ind(cfg0) and b_ind(cfgt)
        ba += b_ind(cfg0) and a_ind(cfgt)
    gen = O.build_generator(region, FREE, p)
    law = O.pair_law(gen, t)
    fa = mu.indicator(a_ind)
    fb = mu.indicator(b_ind)
    exact = law.joint_prob(fa, fb)
    assert law.joint_prob(fb, fa) == pytest.approx(exact, abs=1e-10)
    assert abs(ab / n - exact) < sigma3(exact, n)
    assert abs(ba / n - exact) < sigma3(exact, n)


def test_schedule_text_roundtrip(rng):
    r = Rhombus((0, 0), 2)
    s = make_schedule(r, 0.8, rng)
    back = RingSchedule.from_text(r, s.horizon, s.to_text())
    assert np.array_equal(back.idx_i, s.idx_i)
    assert np.array_equal(back.idx_j, s.idx_j)
    assert np.array_equal(back.times, s.times)
    assert np.array_equal(back.uniforms, s.uniforms)


def test_schedule_validation():
    r = Rhombus((0, 0), 1)
    bad = RingSchedule(r, 1.0, np.array([1], np.int32), np.array([1], np.int32),
                      np.array([2.0]), np.array([0.5]))
    with pytest.raises(ValueError):
        bad.validate()
    bad2 = RingSchedule(r, 1.0, np.array([1, 1], np.int32), np.array([1, 1], np.int32),
                       np.array([0.5, 0.5]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        bad2.validate()


def test_pair_sample_validate(rng):
    from dynising.dynamics import PairSample
    r = Rhombus((0, 0), 2)
    p = ModelParams(0.3)
    cfg0 = sample_equilibrium(r, FREE, p, "burnin", rng, sweeps=4)
    sched = make_schedule(r, 0.7, rng)
    cfgt = simulate(cfg0, sched, FREE, p, 0.7)
    PairSample(cfg0, cfgt, 0.7, sched).validate(FREE, p)
    PairSample(cfg0, cfgt, 0.7).validate()  # no schedule retained: nothing to replay
    with pytest.raises(ValueError):
        PairSample(cfg0, simulate(cfg0, sched, FREE, p, 0.7).with_flip((1, 1)), 0.7, sched).validate(FREE, p)
