import math

import numpy as np
import pytest

from dynising.ising import SpinConfig
from dynising.lattice import ExplicitRegion, Rhombus, embed

Z3 = 3.0


def sigma3(p, n):
    """3 sigma for a Bernoulli(p) mean over n trials."""
    return Z3 * math.sqrt(max(p * (1 - p), 1e-12) / n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)


def quadrant_config(frame_n):
    """Quadrant coloring: + in the first and third embedded-angle quadrants."""
    fr = Rhombus((0, 0), frame_n)
    cfg = SpinConfig.constant(fr, 1)
    for k in range(-frame_n, frame_n + 1):
        for m in range(-frame_n, frame_n + 1):
            x, y = embed((k, m))
            ang = math.atan2(y, x) % (2 * math.pi)
            s = 1 if (ang < math.pi / 2 or (math.pi <= ang < 3 * math.pi / 2)) else -1
            cfg.set_spin((k, m), s)
    return cfg


def half_plane_config(frame_n):
    """+ on embedded x <= 0, - on x > 0."""
    fr = Rhombus((0, 0), frame_n)
    cfg = SpinConfig.constant(fr, 1)
    for k in range(-frame_n, frame_n + 1):
        for m in range(-frame_n, frame_n + 1):
            if embed((k, m))[0] > 0:
                cfg.set_spin((k, m), -1)
    return cfg


SMALL_REGIONS = {
    "single": ExplicitRegion([(0, 0)]),
    "pair": ExplicitRegion([(0, 0), (1, 0)]),
    "path3": ExplicitRegion([(-1, 0), (0, 0), (1, 0)]),
    "plus5": ExplicitRegion([(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]),
    "hex7": ExplicitRegion([(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)]),
    "rhombus9": Rhombus((0, 0), 1),
}
