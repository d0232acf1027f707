"""Glauber dynamics: ring schedules, trajectories, coupled runs, and the
green/red set machinery with the finite-energy constants.

Run:  python demos/02_glauber_dynamics.py
"""

import numpy as np

from dynising.dynamics import (constants, coupled_simulate, dec_event,
                               green_cluster, green_set, make_schedule,
                               red_set, simulate)
from dynising.ising import FREE, ModelParams, beta_c, sample_equilibrium
from dynising.lattice import Rhombus

rng = np.random.default_rng(2)
region = Rhombus((0, 0), 8)
p = ModelParams(0.8 * beta_c())

print("== constants ==")
c = constants(p, M=64)
print(f"a = {c.a:.5f}, c_fe = {c.c_fe:.3e}, tau = {c.tau:.3e} (M = {c.M:g})")

print("\n== one trajectory ==")
sigma0 = sample_equilibrium(region, FREE, p, "hybrid", rng)
sched = make_schedule(region, 1.0, rng)
print(f"schedule: {len(sched)} rings on {region.site_count()} sites, horizon 1")
sigma1 = simulate(sigma0, sched, FREE, p)
changed = int(np.sum(sigma0.grid != sigma1.grid))
print(f"{changed} spins differ between time 0 and time 1")

print("\n== coupled trajectories ==")
a, b = coupled_simulate(sigma0, (0, 0), sched, FREE, p, until=0.25)
diff = {x for x in region if a.spin(x) != b.spin(x)}
gx = green_cluster(sched, 0.25, (0, 0))
print(f"disagreement set after t=0.25 has {len(diff)} sites, "
      f"confined to the green cluster of the origin plus itself "
      f"({len(gx)} green sites): {diff <= (gx | {(0, 0)})}")

print("\n== green and red sets ==")
cut = 0.05
g = green_set(sched, cut)
print(f"green sites (rung before {cut}): {len(g)}")
D = {(0, 0), (1, 0)}
r = red_set(sched, D, cut)
print(f"red sites for a 2-site disagreement pattern: {len(r)}")
S = [x for x in region if max(abs(x[0]), abs(x[1])) == 4]
print("decoupling event dec(boundary of Lambda_4) at cut tau:",
      dec_event(make_schedule(region, c.tau, rng), S, c.tau))
