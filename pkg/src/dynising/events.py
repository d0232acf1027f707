"""Static percolation-event predicates on spin configurations: crossings,
k-arm events, separated/boundary-regular variants, pivotality, and interface
counting.

Alternating-arm detectors are two-stage.  The fast gate counts interfaces on
the dual hexagonal lattice: k interfaces crossing the annulus (with the
rhombus-corner faces sealed) yield k alternating crossing arms via their side
paths, so a large count certifies the event immediately.  The converse fails
for inner scales m >= 2 -- an arm starting at a ring corner can be wrapped by
the opposite sign squeezing through the corner diagonal, leaving fewer
crossing interfaces than arms -- so when the gate is inconclusive the
detector completes with the definition itself: a Menger/max-flow search for
pairwise vertex-disjoint monochrome crossing paths from cyclically ordered
alternating starting cells.  (A cyclic scan over inner-boundary cluster
labels is NOT equivalent either: one cluster whose connection hugs the inner
ring can carry two disjoint arms of the same sign.)  An independent
brute-force oracle backs AC validation, running the disjoint-path search on
scipy's max-flow instead of the in-house kernel.

Scale conventions: all fractional scale parameters (n/10, n/20, 16*delta*n,
n/2) round down.  For m = 1 the four arms start at the six neighbors of the
center and the center's own spin is ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from . import _kernels as K
from .ising import SpinConfig
from .lattice import NEIGHBOR_OFFSETS, Site, rhombus_ring

__all__ = [
    "EventSpec",
    "Cross",
    "CrossRect",
    "Arm1",
    "Arm4",
    "Arm3Half",
    "Arm4Sep",
    "SepDelta",
    "Pivotal",
    "Raw",
    "crossing",
    "crossing_rect",
    "one_arm",
    "four_arm",
    "three_arm_half",
    "four_arm_sep",
    "sep_delta",
    "pivotal",
    "interfaces",
    "four_arm_disjoint_paths",
    "evaluate_event",
    "outer_scale",
    "parse_event",
    "register_raw_event",
]


# ----------------------------------------------------------------------------
# grid helpers
# ----------------------------------------------------------------------------

_CHEB_CACHE: Dict[int, np.ndarray] = {}


def _cheb_grid(n: int) -> np.ndarray:
    """Chebyshev distance to the center over a (2n+1)^2 box."""
    if n not in _CHEB_CACHE:
        d = np.abs(np.arange(-n, n + 1))
        _CHEB_CACHE[n] = np.maximum(d[:, None], d[None, :])
    return _CHEB_CACHE[n]


def _subgrid(cfg: SpinConfig, center: Site, n: int) -> np.ndarray:
    """View of the spin grid over the Lambda_n(center) box; raises if the
    configuration's region does not cover it."""
    k0, m0 = cfg.region.grid_origin()
    i0 = center[0] - n - k0
    j0 = center[1] - n - m0
    Kg, Mg = cfg.grid.shape
    if i0 < 0 or j0 < 0 or i0 + 2 * n + 1 > Kg or j0 + 2 * n + 1 > Mg:
        raise ValueError(f"region too small for Lambda_{n}({center})")
    sub = cfg.grid[i0 : i0 + 2 * n + 1, j0 : j0 + 2 * n + 1]
    if np.any(sub == 0):
        raise ValueError(f"region does not cover Lambda_{n}({center})")
    return sub


def _ring_rel(n: int, m: int) -> list[tuple[int, int]]:
    """Inner-ring cell indices (relative to the Lambda_n box) in cyclic order:
    the six neighbors for m = 1, the boundary ring of Lambda_m otherwise."""
    if m == 1:
        return [(n + dk, n + dm) for dk, dm in NEIGHBOR_OFFSETS]
    return [(n + k, n + mm) for k, mm in rhombus_ring((0, 0), m)]


def _padded_sub(cfg: SpinConfig, center: Site, n: int) -> np.ndarray:
    """The Lambda_n(center) box with one ring of zero padding, so the
    interface walker never leaves the array."""
    sub = _subgrid(cfg, center, n)
    P = np.zeros((2 * n + 3, 2 * n + 3), dtype=np.int8)
    P[1:-1, 1:-1] = sub
    return P


_ZONE_CACHE: Dict[tuple, tuple] = {}

_DIR_INDEX = {(1, 0): 0, (0, 1): 1, (-1, 1): 2, (-1, 0): 3, (0, -1): 4, (1, -1): 5}


def _sever_edge(cut: np.ndarray, n: int, a: Site, b: Site) -> None:
    t_ab = _DIR_INDEX[(b[0] - a[0], b[1] - a[1])]
    t_ba = _DIR_INDEX[(a[0] - b[0], a[1] - b[1])]
    ai, aj = a[0] + n + 1, a[1] + n + 1
    bi, bj = b[0] + n + 1, b[1] + n + 1
    if 0 <= ai < cut.shape[0] and 0 <= aj < cut.shape[1]:
        cut[ai, aj, t_ab] = 1
    if 0 <= bi < cut.shape[0] and 0 <= bj < cut.shape[1]:
        cut[bi, bj, t_ba] = 1


def _sever_gap(cut: np.ndarray, n: int, ck: int, cm: int, r: int) -> None:
    """Seal the two (r, r)-diagonal corners of the ring of Lambda_r(ck, cm).

    The corner cell (r, r) of the ring has no neighbor inside Lambda_{r-1},
    so an interface can wrap around a corner-started arm through the lattice
    face {(r, r-1), (r-1, r), (r, r)} without touching the hole.  Severing
    all three edge-states of that face amounts to inserting a virtual hole
    vertex inside it: any walk reaching the face exits on the inner side, and
    its side paths still start on the ring, restoring the exact equivalence
    between crossing interfaces and alternating arms.  Coordinates relative
    to the padded Lambda_n box."""
    for sgn in (1, -1):
        A = (ck + sgn * r, cm + sgn * (r - 1))
        B = (ck + sgn * (r - 1), cm + sgn * r)
        C = (ck + sgn * r, cm + sgn * r)
        _sever_edge(cut, n, A, B)
        _sever_edge(cut, n, A, C)
        _sever_edge(cut, n, B, C)


def _annulus_zone(m: int, n: int):
    """Padded (zone, cut) grids for the annulus Lambda_n minus Lambda_{m-1}:
    side A is the inner hole, side B everything beyond Lambda_n."""
    key = ("ann", m, n)
    if key not in _ZONE_CACHE:
        cheb = _cheb_grid(n)
        zone = np.full((2 * n + 3, 2 * n + 3), K.ZONE_SIDE_B, dtype=np.int8)
        lo = m if m >= 2 else 1
        inner = zone[1:-1, 1:-1]
        inner[(cheb >= lo) & (cheb <= n)] = K.ZONE_REGION
        inner[cheb <= lo - 1] = K.ZONE_SIDE_A
        cut = np.zeros((2 * n + 3, 2 * n + 3, 6), dtype=np.uint8)
        if m >= 2:
            _sever_gap(cut, n, 0, 0, m)
        _ZONE_CACHE[key] = (zone, cut)
    return _ZONE_CACHE[key]


def _half_annulus_zone(m: int, n: int):
    """Padded (zone, cut) grids for the closed upper-half-plane part of the
    annulus: side A the hole, side B beyond Lambda_n, wall the lower
    half-plane."""
    key = ("half", m, n)
    if key not in _ZONE_CACHE:
        cheb = _cheb_grid(n)
        dm = np.arange(-n, n + 1)[None, :]
        zone = np.full((2 * n + 3, 2 * n + 3), K.ZONE_SIDE_B, dtype=np.int8)
        zone[:, : n + 1] = K.ZONE_WALL  # padded columns with m-offset < 0
        inner = zone[1:-1, 1:-1]
        upper = np.broadcast_to(dm >= 0, cheb.shape)
        inner[upper & (cheb >= m) & (cheb <= n)] = K.ZONE_REGION
        inner[upper & (cheb <= m - 1)] = K.ZONE_SIDE_A
        inner[~upper] = K.ZONE_WALL
        cut = np.zeros((2 * n + 3, 2 * n + 3, 6), dtype=np.uint8)
        if m >= 2:
            _sever_gap(cut, n, 0, 0, m)
        _ZONE_CACHE[key] = (zone, cut)
    return _ZONE_CACHE[key]


# ----------------------------------------------------------------------------
# predicates
# ----------------------------------------------------------------------------

def crossing(cfg: SpinConfig, n: int, center: Site = (0, 0)) -> bool:
    """Left-right +1 crossing of Lambda_n(center): a +1 path inside the
    rhombus from its side {k = ck - n} to {k = ck + n}."""
    if n < 0:
        raise ValueError("n must be >= 0")
    _subgrid(cfg, center, n)
    k0, m0 = cfg.region.grid_origin()
    i0 = center[0] - n - k0
    j0 = center[1] - n - m0
    return bool(K.crossing_lr(cfg.grid, i0, j0, 2 * n + 1))


def crossing_rect(cfg: SpinConfig, m: int, n: int, center: Site = (0, 0)) -> bool:
    """Left-right +1 crossing of the elongated rhombus Lambda_{m,n}(center)
    (k-range +-m, m-range +-n)."""
    k0, m0 = cfg.region.grid_origin()
    i0 = center[0] - m - k0
    j0 = center[1] - n - m0
    Kg, Mg = cfg.grid.shape
    if i0 < 0 or j0 < 0 or i0 + 2 * m + 1 > Kg or j0 + 2 * n + 1 > Mg:
        raise ValueError("region too small for the elongated rhombus")
    return bool(K.crossing_rect(cfg.grid, i0, j0, 2 * m + 1, 2 * n + 1))


def one_arm(cfg: SpinConfig, m: int, n: int, center: Site = (0, 0)) -> bool:
    """A +1 path from the boundary ring of Lambda_m to that of Lambda_n,
    inside Lambda_n."""
    if not (n >= m >= 1):
        raise ValueError("one_arm needs n >= m >= 1")
    sub = _subgrid(cfg, center, n)
    cheb = _cheb_grid(n)
    allowed = (sub == 1).astype(np.uint8)
    seeds = (allowed > 0) & (cheb == m)
    reach = np.zeros_like(allowed)
    K.bfs_reach(allowed, seeds.astype(np.uint8), reach)
    return bool(np.any(reach[cheb == n]))


def _reach_to(allowed: np.ndarray, targets: np.ndarray) -> np.ndarray:
    reach = np.zeros_like(allowed)
    K.bfs_reach(allowed, (targets & (allowed > 0)).astype(np.uint8), reach)
    return reach


def _menger_pair(allowed, a, b, sinks) -> bool:
    return bool(K.two_disjoint_paths(allowed, a[0], a[1], b[0], b[1], sinks))


def _scipy_pair(allowed, a, b, sinks) -> bool:
    """Independent two-vertex-disjoint-paths check via scipy max-flow on the
    vertex-split graph (reference implementation for oracle tests)."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_flow

    Kg, Mg = allowed.shape
    N = Kg * Mg
    ii, jj = np.nonzero(allowed)
    cells = ii * Mg + jj
    rows = [2 + 2 * cells, ]
    cols = [2 + 2 * cells + 1, ]
    caps = [np.ones(cells.size, dtype=np.int32), ]
    sk = sinks[ii, jj] > 0
    rows.append(2 + 2 * cells[sk] + 1)
    cols.append(np.ones(int(sk.sum()), dtype=np.int64))
    caps.append(np.ones(int(sk.sum()), dtype=np.int32))
    for t in range(6):
        ni = ii + int(K.DI[t])
        nj = jj + int(K.DJ[t])
        ok = (ni >= 0) & (ni < Kg) & (nj >= 0) & (nj < Mg)
        ok[ok] &= allowed[ni[ok], nj[ok]] > 0
        rows.append(2 + 2 * cells[ok] + 1)
        cols.append(2 + 2 * (ni[ok] * Mg + nj[ok]))
        caps.append(np.full(int(ok.sum()), 4, dtype=np.int32))
    rows.append(np.array([0, 0], dtype=np.int64))
    cols.append(np.array([2 + 2 * (a[0] * Mg + a[1]), 2 + 2 * (b[0] * Mg + b[1])], dtype=np.int64))
    caps.append(np.ones(2, dtype=np.int32))
    g = csr_matrix(
        (np.concatenate(caps), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 + 2 * N, 2 + 2 * N),
    )
    return maximum_flow(g, 0, 1).flow_value == 2


def _four_arm_search(cfg: SpinConfig, m: int, n: int, center: Site, pairflow) -> bool:
    """The definitional four-arm search: cyclically ordered alternating
    starting cells on the inner ring, each pair of same-sign starts joined to
    the outer ring by two vertex-disjoint paths."""
    sub = _subgrid(cfg, center, n)
    cheb = _cheb_grid(n)
    lo = m if m >= 2 else 1
    annulus = (cheb >= lo) & (cheb <= n)
    ring = _ring_rel(n, m)
    allowed = {}
    reach = {}
    sinks = (cheb == n).astype(np.uint8)
    for s in (1, -1):
        al = (annulus & (sub == s)).astype(np.uint8)
        allowed[s] = al
        reach[s] = _reach_to(al, cheb == n)
    live = []
    for r, (i, j) in enumerate(ring):
        s = int(sub[i, j])
        if s != 0 and reach[s][i, j]:
            live.append((r, s, i, j))
    if sum(1 for e in live if e[1] == 1) < 2 or sum(1 for e in live if e[1] == -1) < 2:
        return False
    memo: Dict[tuple, bool] = {}

    def flow(s, a, b):
        key = (s, a[2], a[3], b[2], b[3])
        if key not in memo:
            memo[key] = pairflow(allowed[s], (a[2], a[3]), (b[2], b[3]), sinks)
        return memo[key]

    L = len(live)
    for q1 in range(L):
        for q2 in range(q1 + 1, L):
            if live[q2][1] == live[q1][1]:
                continue
            for q3 in range(q2 + 1, L):
                if live[q3][1] != live[q1][1]:
                    continue
                if not flow(live[q1][1], live[q1], live[q3]):
                    continue
                for q4 in range(q3 + 1, L):
                    if live[q4][1] != live[q2][1]:
                        continue
                    if flow(live[q2][1], live[q2], live[q4]):
                        return True
    return False


def four_arm(cfg: SpinConfig, m: int, n: int, center: Site = (0, 0)) -> bool:
    """Four arms of alternating signs from the inner ring to the ring of
    Lambda_n, inside the annulus Lambda_n minus Lambda_{m-1}; for m = 1 the
    arms start at the six neighbors of the center and the center's spin is
    ignored.  Fast interface gate, exact disjoint-path completion."""
    if not (n >= m >= 1):
        raise ValueError("four_arm needs n >= m >= 1")
    if interfaces(cfg, m, n, center) >= 4:
        return True
    return _four_arm_search(cfg, m, n, center, _menger_pair)


def _three_arm_search(cfg: SpinConfig, m: int, n: int, center: Site) -> bool:
    """Definitional completion for the half-plane three-arm event: ordered
    boundary-arc starts p1 < p2 < p3 with alternating signs, the outer two
    joined to the outer ring by vertex-disjoint paths, the middle one live."""
    sub = _subgrid(cfg, center, n)
    cheb = _cheb_grid(n)
    upper = np.zeros_like(cheb, dtype=bool)
    upper[:, n:] = True
    region = (cheb >= m) & (cheb <= n) & upper
    sinks = ((cheb == n) & upper).astype(np.uint8)
    allowed = {}
    reach = {}
    for s in (1, -1):
        al = (region & (sub == s)).astype(np.uint8)
        allowed[s] = al
        reach[s] = _reach_to(al, (cheb == n) & upper)
    if m == 1:
        arc = [(n + k, n + mm) for k, mm in rhombus_ring((0, 0), 1) if mm >= 0]
    else:
        arc = [(i, j) for (i, j) in _ring_rel(n, m) if j >= n]
    live = []
    for r, (i, j) in enumerate(arc):
        s = int(sub[i, j])
        if s != 0 and reach[s][i, j]:
            live.append((r, s, i, j))
    memo: Dict[tuple, bool] = {}

    def flow(s, a, b):
        key = (s, a[2], a[3], b[2], b[3])
        if key not in memo:
            memo[key] = _menger_pair(allowed[s], (a[2], a[3]), (b[2], b[3]), sinks)
        return memo[key]

    L = len(live)
    for q1 in range(L):
        for q2 in range(q1 + 1, L):
            if live[q2][1] == live[q1][1]:
                continue
            for q3 in range(q2 + 1, L):
                if live[q3][1] != live[q1][1]:
                    continue
                if flow(live[q1][1], live[q1], live[q3]):
                    return True
    return False


def three_arm_half(cfg: SpinConfig, m: int, n: int, center: Site = (0, 0)) -> bool:
    """Three arms of alternating sign (+,-,+ or -,+,-) from the boundary ring
    of Lambda_m to that of Lambda_n inside the closed upper-half-plane part of
    the annulus: two crossing dual interfaces certify it, otherwise the
    disjoint-path completion decides."""
    if not (n >= m >= 1):
        raise ValueError("three_arm_half needs n >= m >= 1")
    P = _padded_sub(cfg, center, n)
    zone, cut = _half_annulus_zone(m, n)
    if int(K.count_zone_interfaces(P, zone, cut)) >= 2:
        return True
    return _three_arm_search(cfg, m, n, center)


def four_arm_sep(cfg: SpinConfig, m: int, n: int, center: Site = (0, 0)) -> bool:
    """The landing-constrained four-arm event: for each side midpoint x_i of
    Lambda_n (left, bottom, right, top with signs +,-,+,-), an arm of that
    sign from the inner ring to Lambda_{n/20}(x_i) on the boundary, avoiding
    the rhombi Lambda_{n/10}(x_j) of the other three midpoints; conjoined with
    the plain four-arm event."""
    if n < 100:
        raise ValueError("four_arm_sep needs n >= 100")
    if not (n >= 4 * m >= 4):
        raise ValueError("four_arm_sep needs n >= 4m, m >= 1")
    sub = _subgrid(cfg, center, n)
    cheb = _cheb_grid(n)
    lo = m if m >= 2 else 1
    annulus = (cheb >= lo) & (cheb <= n)
    r10 = n // 10
    r20 = n // 20
    mids = [(-n, 0), (0, -n), (n, 0), (0, n)]
    signs = [1, -1, 1, -1]
    idx = np.arange(-n, n + 1)
    boxes = []
    for (xk, xm) in mids:
        dk = np.abs(idx[:, None] - xk)
        dm = np.abs(idx[None, :] - xm)
        boxes.append(np.maximum(dk, dm))
    ring = _ring_rel(n, m)
    for i in range(4):
        allowed = annulus & (sub == signs[i])
        for j in range(4):
            if j != i:
                allowed = allowed & (boxes[j] > r10)
        allowed = allowed.astype(np.uint8)
        seeds = np.zeros_like(allowed)
        for (a, b) in ring:
            if allowed[a, b]:
                seeds[a, b] = 1
        reach = np.zeros_like(allowed)
        K.bfs_reach(allowed, seeds, reach)
        targets = (cheb == n) & (boxes[i] <= r20) & (reach > 0)
        if not np.any(targets):
            return False
    return four_arm(cfg, m, n, center)


def sep_delta(cfg: SpinConfig, n: int, delta: float, center: Site = (0, 0)) -> bool:
    """Boundary regularity: no boundary site x of Lambda_n admits three arms
    of alternating sign from the ring of Lambda_{16 delta n}(x) to the ring of
    Lambda_{n/2}, inside Lambda_n (equivalently, fewer than two dual
    interfaces cross the quad between the box at x and the half-scale
    rhombus, for every x)."""
    if not (0 < delta < 0.01):
        raise ValueError("sep_delta needs delta in (0, 1/100)")
    if n < 1.0 / delta:
        raise ValueError("sep_delta needs n >= 1/delta")
    P = _padded_sub(cfg, center, n)
    r = int(16 * delta * n)
    n2 = n // 2
    pidx = np.arange(-n - 1, n + 2)
    cheb_o = np.maximum(np.abs(pidx)[:, None], np.abs(pidx)[None, :])
    base = np.full(P.shape, K.ZONE_WALL, dtype=np.int8)
    base[(cheb_o >= n2) & (cheb_o <= n)] = K.ZONE_REGION
    base[cheb_o <= n2 - 1] = K.ZONE_SIDE_B
    base_cut = np.zeros(P.shape + (6,), dtype=np.uint8)
    _sever_gap(base_cut, n, 0, 0, n2)  # target-ring corners of Lambda_{n/2}
    for (xk, xm) in rhombus_ring((0, 0), n):
        boxd = np.maximum(np.abs(pidx[:, None] - xk), np.abs(pidx[None, :] - xm))
        zone = base.copy()
        zone[boxd <= r - 1] = K.ZONE_SIDE_A
        cut = base_cut.copy()
        _sever_gap(cut, n, xk, xm, r)  # box-ring corners of Lambda_r(x)
        if int(K.count_zone_interfaces(P, zone, cut)) >= 2:
            return False
        if _sep_three_arm_search(cfg, n, n2, r, (xk, xm), center):
            return False
    return True


def _sep_three_arm_search(cfg: SpinConfig, n: int, n2: int, r: int, x: Site,
                          center: Site) -> bool:
    """Disjoint-path completion of the boundary three-arm check of sep_delta:
    arc starts on the ring of Lambda_r(x) clipped to Lambda_n, targets the
    ring of Lambda_{n2}, region between them inside Lambda_n."""
    sub = _subgrid(cfg, center, n)
    idx = np.arange(-n, n + 1)
    cheb_o = np.maximum(np.abs(idx)[:, None], np.abs(idx)[None, :])
    boxd = np.maximum(np.abs(idx[:, None] - x[0]), np.abs(idx[None, :] - x[1]))
    region = (cheb_o >= n2) & (cheb_o <= n) & (boxd >= r)
    targets = cheb_o == n2
    sinks = (targets & region).astype(np.uint8)
    allowed = {}
    reach = {}
    for s in (1, -1):
        al = (region & (sub == s)).astype(np.uint8)
        allowed[s] = al
        reach[s] = _reach_to(al, targets)
    ring = [(x[0] + a, x[1] + b) for a, b in rhombus_ring((0, 0), r)]
    keep = [max(abs(a), abs(b)) <= n for a, b in ring]
    if all(keep):
        arc = ring
    else:
        L = len(ring)
        start = next(t for t in range(L) if not keep[t] and keep[(t + 1) % L])
        arc = []
        t = (start + 1) % L
        while keep[t]:
            arc.append(ring[t])
            t = (t + 1) % L
    live = []
    for rpos, (a, b) in enumerate(arc):
        i, j = n + a, n + b
        s = int(sub[i, j])
        if s != 0 and region[i, j] and reach[s][i, j]:
            live.append((rpos, s, i, j))
    for q1 in range(len(live)):
        for q2 in range(q1 + 1, len(live)):
            if live[q2][1] == live[q1][1]:
                continue
            for q3 in range(q2 + 1, len(live)):
                if live[q3][1] != live[q1][1]:
                    continue
                if _menger_pair(allowed[live[q1][1]], (live[q1][2], live[q1][3]),
                                (live[q3][2], live[q3][3]), sinks):
                    return True
    return False


def pivotal(cfg: SpinConfig, x: Site, inner: "EventSpec") -> bool:
    """Single-site pivotality is exactly a flip test: evaluate the inner event
    on cfg and on cfg with the spin at x flipped."""
    base = evaluate_event(inner, cfg)
    flipped = evaluate_event(inner, cfg.with_flip(x))
    return bool(base != flipped)


def interfaces(cfg: SpinConfig, m: int, n: int, center: Site = (0, 0)) -> int:
    """Number of +/- interfaces on the dual hexagonal lattice crossing the
    annulus Lambda_n minus Lambda_{m-1} (from the inner hole to the outside),
    traced by interface walking."""
    if not (n >= m >= 1):
        raise ValueError("interfaces needs n >= m >= 1")
    P = _padded_sub(cfg, center, n)
    zone, cut = _annulus_zone(m, n)
    return int(K.count_zone_interfaces(P, zone, cut))


def four_arm_disjoint_paths(cfg: SpinConfig, m: int, n: int, center: Site = (0, 0)) -> bool:
    """Brute-force reference for the four-arm event: the same definitional
    search for four pairwise vertex-disjoint alternating crossing arms, but
    with every disjoint-path decision made by scipy's max-flow on the
    vertex-split sign-restricted site graph (independent of the in-house
    Menger kernel and of the interface gate)."""
    if not (n >= m >= 1):
        raise ValueError("four_arm needs n >= m >= 1")
    return _four_arm_search(cfg, m, n, center, _scipy_pair)


# ----------------------------------------------------------------------------
# event specifications
# ----------------------------------------------------------------------------

_RAW_REGISTRY: Dict[str, tuple[Callable[[SpinConfig], bool], int]] = {}


def register_raw_event(name: str, fn: Callable[[SpinConfig], bool], scale: int = 1) -> None:
    _RAW_REGISTRY[name] = (fn, scale)


@dataclass(frozen=True)
class EventSpec:
    """A static percolation event: kind plus parameters, centered at a
    configurable center (default the origin)."""

    kind: str
    params: tuple = ()
    center: Site = (0, 0)
    inner: Optional["EventSpec"] = None

    def label(self) -> str:
        if self.kind == "piv":
            return f"piv:x={self.params[0]},{self.params[1]};{self.inner.label()}"
        if self.kind == "raw":
            return f"raw:{self.params[0]}"
        keys = _PARAM_KEYS[self.kind]
        body = ",".join(f"{k}={v}" for k, v in zip(keys, self.params))
        return f"{self.kind}:{body}"

    def __str__(self):
        return self.label()


_PARAM_KEYS = {
    "cross": ("n",),
    "crossrect": ("m", "n"),
    "arm1": ("m", "n"),
    "arm4": ("m", "n"),
    "arm3half": ("m", "n"),
    "arm4sep": ("m", "n"),
    "sepdelta": ("n", "delta"),
}


def Cross(n: int, center: Site = (0, 0)) -> EventSpec:
    return EventSpec("cross", (int(n),), center)


def CrossRect(m: int, n: int, center: Site = (0, 0)) -> EventSpec:
    return EventSpec("crossrect", (int(m), int(n)), center)


def Arm1(m: int, n: int, center: Site = (0, 0)) -> EventSpec:
    return EventSpec("arm1", (int(m), int(n)), center)


def Arm4(m: int, n: int, center: Site = (0, 0)) -> EventSpec:
    return EventSpec("arm4", (int(m), int(n)), center)


def Arm3Half(m: int, n: int, center: Site = (0, 0)) -> EventSpec:
    return EventSpec("arm3half", (int(m), int(n)), center)


def Arm4Sep(m: int, n: int, center: Site = (0, 0)) -> EventSpec:
    if n < 100:
        raise ValueError("Arm4Sep needs n >= 100")
    return EventSpec("arm4sep", (int(m), int(n)), center)


def SepDelta(n: int, delta: float, center: Site = (0, 0)) -> EventSpec:
    if not (0 < delta < 0.01):
        raise ValueError("SepDelta needs delta in (0, 1/100)")
    if n < 1.0 / delta:
        raise ValueError("SepDelta needs n >= 1/delta")
    return EventSpec("sepdelta", (int(n), float(delta)), center)


def Pivotal(x: Site, inner: EventSpec) -> EventSpec:
    return EventSpec("piv", (int(x[0]), int(x[1])), inner.center, inner)


def Raw(name: str) -> EventSpec:
    if name not in _RAW_REGISTRY:
        raise ValueError(f"unknown raw event {name!r}")
    return EventSpec("raw", (name,))


def evaluate_event(spec: EventSpec, cfg: SpinConfig) -> bool:
    k = spec.kind
    p = spec.params
    if k == "cross":
        return crossing(cfg, p[0], spec.center)
    if k == "crossrect":
        return crossing_rect(cfg, p[0], p[1], spec.center)
    if k == "arm1":
        return one_arm(cfg, p[0], p[1], spec.center)
    if k == "arm4":
        return four_arm(cfg, p[0], p[1], spec.center)
    if k == "arm3half":
        return three_arm_half(cfg, p[0], p[1], spec.center)
    if k == "arm4sep":
        return four_arm_sep(cfg, p[0], p[1], spec.center)
    if k == "sepdelta":
        return sep_delta(cfg, p[0], p[1], spec.center)
    if k == "piv":
        return pivotal(cfg, (p[0], p[1]), spec.inner)
    if k == "raw":
        return bool(_RAW_REGISTRY[p[0]][0](cfg))
    raise ValueError(f"unknown event kind {k!r}")


def event_support(spec: EventSpec):
    """The region the event's indicator depends on (None when unknown, e.g.
    raw registry events)."""
    from .lattice import Annulus, ElongatedRhombus, Rhombus

    from .lattice import HalfPlaneAnnulus

    k = spec.kind
    p = spec.params
    if k == "cross":
        return Rhombus(spec.center, p[0])
    if k == "crossrect":
        return ElongatedRhombus(spec.center, p[0], p[1])
    if k in ("arm1", "arm4", "arm4sep"):
        # arm indicators depend on the annulus only: any path dipping inside
        # the hole can be trimmed at its last exit
        m, n = p
        lo = m if m >= 2 else 1
        return Annulus(spec.center, lo, n)
    if k == "arm3half":
        return HalfPlaneAnnulus(spec.center, p[0], p[1])
    if k == "sepdelta":
        return Annulus(spec.center, p[0] // 2, p[0])
    if k == "piv":
        return event_support(spec.inner)
    return None


def outer_scale(spec: EventSpec) -> int:
    """The outer scale of the event, used to size the sampling frame
    Lambda_{2 * scale}."""
    k = spec.kind
    if k == "cross":
        return spec.params[0]
    if k in ("crossrect", "arm1", "arm4", "arm3half", "arm4sep"):
        return spec.params[1]
    if k == "sepdelta":
        return spec.params[0]
    if k == "piv":
        return outer_scale(spec.inner)
    if k == "raw":
        return _RAW_REGISTRY[spec.params[0]][1]
    raise ValueError(f"unknown event kind {k!r}")


def parse_event(text: str) -> EventSpec:
    """Parse the event literal syntax, e.g. ``cross:n=32``, ``arm4:m=1,n=32``,
    ``sepdelta:n=200,delta=0.005``, ``piv:x=0,0;cross:n=32``, ``raw:<id>``."""
    text = text.strip()
    if text.startswith("piv:"):
        head, _, inner_text = text.partition(";")
        if not inner_text:
            raise ValueError(f"pivotal literal needs an inner event: {text!r}")
        body = head[len("piv:"):]
        if not body.startswith("x="):
            raise ValueError(f"bad pivotal literal {text!r}")
        xk, xm = body[2:].split(",")
        return Pivotal((int(xk), int(xm)), parse_event(inner_text))
    if text.startswith("raw:"):
        return Raw(text[len("raw:"):])
    try:
        kind, body = text.split(":", 1)
        kv = dict(part.split("=") for part in body.split(","))
    except ValueError as exc:
        raise ValueError(f"bad event literal {text!r}") from exc
    kind = kind.strip().lower()
    center = (int(kv.pop("cx", 0)), int(kv.pop("cy", 0)))
    if kind == "cross":
        return Cross(int(kv["n"]), center)
    if kind == "crossrect":
        return CrossRect(int(kv["m"]), int(kv["n"]), center)
    if kind == "arm1":
        return Arm1(int(kv["m"]), int(kv["n"]), center)
    if kind == "arm4":
        return Arm4(int(kv["m"]), int(kv["n"]), center)
    if kind == "arm3half":
        return Arm3Half(int(kv["m"]), int(kv["n"]), center)
    if kind == "arm4sep":
        return Arm4Sep(int(kv["m"]), int(kv["n"]), center)
    if kind == "sepdelta":
        return SepDelta(int(kv["n"]), float(kv["delta"]), center)
    raise ValueError(f"unknown event kind in {text!r}")
