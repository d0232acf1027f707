"""Tour of the triangular lattice and the static Ising model.

Run:  python demos/01_lattice_and_static_model.py
"""

import numpy as np

from dynising.ising import (FREE, PLUS, ModelParams, SpinConfig, beta_c,
                            energy, exact_measure, rate, sample_equilibrium)
from dynising.lattice import (Annulus, Rhombus, boundary, embed,
                              exterior_boundary, neighbors, thicken)

print("== the lattice ==")
print("neighbors of the origin:", neighbors((0, 0)))
print("embedding of (0, 1):", embed((0, 1)))
r = Rhombus((0, 0), 2)
print(f"Lambda_2 has {r.site_count()} sites; boundary has {len(boundary(r))},"
      f" exterior boundary {len(exterior_boundary(r))}")
print("thickened by 30%:", thicken(r, 0.3))
print("annulus Lambda_4 \\ Lambda_1:", Annulus((0, 0), 2, 4).site_count(), "sites")

print("\n== energies and rates ==")
lam1 = Rhombus((0, 0), 1)
allplus = SpinConfig.constant(lam1, 1)
print("H(all plus) on Lambda_1, free bc:", energy(allplus, FREE))
print("H(all plus) on Lambda_1, plus bc:", energy(allplus, PLUS))
p = ModelParams(0.15)
print("heat-bath rate at the center with all neighbors aligned:",
      rate(allplus, (0, 0), FREE, p))

print("\n== exact measures on tiny regions ==")
mu = exact_measure(lam1, FREE, ModelParams(0.3))
print("most likely configuration weight:", mu.probs.max())
print("probability mass sums to", mu.probs.sum())

print("\n== equilibrium sampling ==")
rng = np.random.default_rng(1)
big = Rhombus((0, 0), 16)
cfg = sample_equilibrium(big, FREE, ModelParams(0.8 * beta_c()), "hybrid", rng)
mag = cfg.grid[cfg.grid != 0].mean()
print(f"one sample on Lambda_16 at 0.8 beta_c: magnetization {mag:+.4f},"
      f" energy {energy(cfg):.0f}")
print("critical coupling beta_c =", beta_c())
