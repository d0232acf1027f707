"""Numba kernels shared by the samplers, the dynamics engine, and the event
detectors.

All kernels work on dense grids over a region's bounding box:

* ``spins``  int8, values -1/+1 inside the region, 0 outside
* ``mask``   uint8, 1 inside the region
* ``ext``    int8, sum of fixed exterior-boundary spins adjacent to the cell

Grid index (i, j) corresponds to lattice site (k0 + i, m0 + j).  The six
neighbor offsets are the same in grid-index space as in lattice coordinates.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Neighbor directions in cyclic (counterclockwise) order; DI[t], DJ[t] is the
# t-th offset.  rot60 of direction t is direction (t+1) % 6.
DI = np.array([1, 0, -1, -1, 0, 1], dtype=np.int64)
DJ = np.array([0, 1, 1, 0, -1, -1], dtype=np.int64)


# ----------------------------------------------------------------------------
# splitmix64 generator (per-kernel deterministic stream from a uint64 seed)
# ----------------------------------------------------------------------------

@njit(cache=True, nogil=True, inline="always")
def _rng_u64(state):
    state[0] = state[0] + np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True, inline="always")
def _rng_uniform(state):
    return float(_rng_u64(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


# ----------------------------------------------------------------------------
# equilibrium samplers
# ----------------------------------------------------------------------------

@njit(cache=True, nogil=True, inline="always")
def _neighbor_sum(spins, i, j, K, M):
    s = 0
    for t in range(6):
        ii = i + DI[t]
        jj = j + DJ[t]
        if 0 <= ii < K and 0 <= jj < M:
            s += spins[ii, jj]
    return s


@njit(cache=True, nogil=True)
def heat_bath_sweeps(spins, mask, ext, ptab, nsweeps, seed):
    """Sequential-raster heat-bath sweeps.  ptab[S+6] = P(new spin = +1 | S)."""
    K, M = spins.shape
    st = np.empty(1, dtype=np.uint64)
    st[0] = np.uint64(seed)
    for _ in range(nsweeps):
        for i in range(K):
            for j in range(M):
                if mask[i, j]:
                    S = int(ext[i, j]) + _neighbor_sum(spins, i, j, K, M)
                    if _rng_uniform(st) < ptab[S + 6]:
                        spins[i, j] = 1
                    else:
                        spins[i, j] = -1


@njit(cache=True, nogil=True)
def wolff_updates(spins, mask, extp, extn, padd, nflips, seed):
    """Wolff single-cluster updates with bond probability padd = 1 - e^{-2 beta}.

    Fixed exterior spins act as a ghost: a cluster that activates a bond to a
    same-sign fixed boundary spin is frozen (not flipped).  extp/extn count the
    +1 / -1 fixed exterior neighbors of each cell."""
    K, M = spins.shape
    st = np.empty(1, dtype=np.uint64)
    st[0] = np.uint64(seed)
    visited = np.zeros((K, M), dtype=np.int32)
    stack_i = np.empty(K * M, dtype=np.int32)
    stack_j = np.empty(K * M, dtype=np.int32)
    memb_i = np.empty(K * M, dtype=np.int32)
    memb_j = np.empty(K * M, dtype=np.int32)
    stamp = 0
    for _ in range(nflips):
        # rejection-sample a seed cell inside the region
        while True:
            i0 = int(_rng_uniform(st) * K)
            j0 = int(_rng_uniform(st) * M)
            if i0 < K and j0 < M and mask[i0, j0]:
                break
        stamp += 1
        s = spins[i0, j0]
        top = 0
        nm = 0
        stack_i[top] = i0
        stack_j[top] = j0
        top += 1
        visited[i0, j0] = stamp
        frozen = False
        while top > 0 and not frozen:
            top -= 1
            i = stack_i[top]
            j = stack_j[top]
            memb_i[nm] = i
            memb_j[nm] = j
            nm += 1
            nfix = extp[i, j] if s > 0 else extn[i, j]
            for _b in range(nfix):
                if _rng_uniform(st) < padd:
                    frozen = True
                    break
            if frozen:
                break
            for t in range(6):
                ii = i + DI[t]
                jj = j + DJ[t]
                if 0 <= ii < K and 0 <= jj < M and mask[ii, jj] and visited[ii, jj] != stamp and spins[ii, jj] == s:
                    if _rng_uniform(st) < padd:
                        visited[ii, jj] = stamp
                        stack_i[top] = ii
                        stack_j[top] = jj
                        top += 1
        if not frozen:
            for r in range(nm):
                spins[memb_i[r], memb_j[r]] = -s


@njit(cache=True, nogil=True)
def random_spins(spins, mask, seed):
    """Uniform +-1 fill of the region (the beta = 0 equilibrium)."""
    K, M = spins.shape
    st = np.empty(1, dtype=np.uint64)
    st[0] = np.uint64(seed)
    for i in range(K):
        for j in range(M):
            if mask[i, j]:
                spins[i, j] = 1 if _rng_uniform(st) < 0.5 else -1


# ----------------------------------------------------------------------------
# ring-by-ring Glauber dynamics
# ----------------------------------------------------------------------------

RULE_FLIP = 0
RULE_RESAMPLE = 1


@njit(cache=True, nogil=True)
def run_rings(spins, mask, ext, ctab, ptab, si, sj, times, unis, until, rule):
    """Process clock rings in global time order up to ``until``.

    rule 0 ("flip"):     flip spin iff U >= 1 - c_x(current config)
    rule 1 ("resample"): spin <- +1 iff U < P(+1 | neighbor sum)
    Both have the same one-ring transition law; rule 1 is the order-preserving
    coupling."""
    K, M = spins.shape
    for r in range(times.size):
        if times[r] > until:
            break
        i = si[r]
        j = sj[r]
        S = int(ext[i, j]) + _neighbor_sum(spins, i, j, K, M)
        if rule == 0:
            c = ctab[spins[i, j] * S + 6]
            if unis[r] >= 1.0 - c:
                spins[i, j] = -spins[i, j]
        else:
            if unis[r] < ptab[S + 6]:
                spins[i, j] = 1
            else:
                spins[i, j] = -1


@njit(cache=True, nogil=True)
def run_rings_coupled(sa, sb, mask, ext, ctab, ptab, si, sj, times, unis, until, rule):
    """Evolve two configurations under the same schedule (shared uniforms)."""
    K, M = sa.shape
    for r in range(times.size):
        if times[r] > until:
            break
        i = si[r]
        j = sj[r]
        Sa = int(ext[i, j]) + _neighbor_sum(sa, i, j, K, M)
        Sb = int(ext[i, j]) + _neighbor_sum(sb, i, j, K, M)
        u = unis[r]
        if rule == 0:
            if u >= 1.0 - ctab[sa[i, j] * Sa + 6]:
                sa[i, j] = -sa[i, j]
            if u >= 1.0 - ctab[sb[i, j] * Sb + 6]:
                sb[i, j] = -sb[i, j]
        else:
            sa[i, j] = 1 if u < ptab[Sa + 6] else -1
            sb[i, j] = 1 if u < ptab[Sb + 6] else -1


# ----------------------------------------------------------------------------
# connectivity
# ----------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def bfs_reach(allowed, seeds, reach):
    """Fill ``reach`` with 1 on every cell connected to a seed through
    ``allowed`` cells (seeds must themselves be allowed to count)."""
    K, M = allowed.shape
    qi = np.empty(K * M, dtype=np.int32)
    qj = np.empty(K * M, dtype=np.int32)
    tail = 0
    reach[:, :] = 0
    for i in range(K):
        for j in range(M):
            if seeds[i, j] and allowed[i, j]:
                reach[i, j] = 1
                qi[tail] = i
                qj[tail] = j
                tail += 1
    head = 0
    while head < tail:
        i = qi[head]
        j = qj[head]
        head += 1
        for t in range(6):
            ii = i + DI[t]
            jj = j + DJ[t]
            if 0 <= ii < K and 0 <= jj < M and allowed[ii, jj] and not reach[ii, jj]:
                reach[ii, jj] = 1
                qi[tail] = ii
                qj[tail] = jj
                tail += 1


@njit(cache=True, nogil=True)
def label_sign_clusters(spins, active):
    """Label connected clusters of equal-spin cells within ``active``.
    Returns (labels int32 grid with -1 outside, number of labels)."""
    K, M = spins.shape
    labels = np.full((K, M), -1, dtype=np.int32)
    qi = np.empty(K * M, dtype=np.int32)
    qj = np.empty(K * M, dtype=np.int32)
    nlab = 0
    for i0 in range(K):
        for j0 in range(M):
            if active[i0, j0] and labels[i0, j0] < 0:
                lab = nlab
                nlab += 1
                s = spins[i0, j0]
                head = 0
                tail = 0
                qi[tail] = i0
                qj[tail] = j0
                tail += 1
                labels[i0, j0] = lab
                while head < tail:
                    i = qi[head]
                    j = qj[head]
                    head += 1
                    for t in range(6):
                        ii = i + DI[t]
                        jj = j + DJ[t]
                        if 0 <= ii < K and 0 <= jj < M and active[ii, jj] and labels[ii, jj] < 0 and spins[ii, jj] == s:
                            labels[ii, jj] = lab
                            qi[tail] = ii
                            qj[tail] = jj
                            tail += 1
    return labels, nlab


@njit(cache=True, nogil=True)
def _crossing_core(spins, i0, j0, size, visited, stamp, qi, qj):
    """BFS from the left side (row i0) over +1 cells of the size x size box;
    true iff the right side (row i0+size-1) is reached."""
    tail = 0
    for j in range(j0, j0 + size):
        if spins[i0, j] == 1:
            visited[i0 - i0, j - j0] = stamp
            qi[tail] = i0
            qj[tail] = j
            tail += 1
    head = 0
    last = i0 + size - 1
    while head < tail:
        i = qi[head]
        j = qj[head]
        head += 1
        if i == last:
            return True
        for t in range(6):
            ii = i + DI[t]
            jj = j + DJ[t]
            if i0 <= ii <= last and j0 <= jj < j0 + size and spins[ii, jj] == 1 and visited[ii - i0, jj - j0] != stamp:
                visited[ii - i0, jj - j0] = stamp
                qi[tail] = ii
                qj[tail] = jj
                tail += 1
    return False


@njit(cache=True, nogil=True)
def crossing_lr(spins, i0, j0, size):
    """Left-right +1 crossing of the box spins[i0:i0+size, j0:j0+size]
    (rows are the k coordinate: left side k = min, right side k = max)."""
    visited = np.zeros((size, size), dtype=np.int32)
    qi = np.empty(size * size, dtype=np.int32)
    qj = np.empty(size * size, dtype=np.int32)
    return _crossing_core(spins, i0, j0, size, visited, 1, qi, qj)


@njit(cache=True, nogil=True)
def crossing_rect(spins, i0, j0, ksize, msize):
    """Left-right +1 crossing of a ksize x msize box (left/right = k sides)."""
    visited = np.zeros((ksize, msize), dtype=np.uint8)
    qi = np.empty(ksize * msize, dtype=np.int32)
    qj = np.empty(ksize * msize, dtype=np.int32)
    tail = 0
    for j in range(j0, j0 + msize):
        if spins[i0, j] == 1:
            visited[0, j - j0] = 1
            qi[tail] = i0
            qj[tail] = j
            tail += 1
    head = 0
    last = i0 + ksize - 1
    while head < tail:
        i = qi[head]
        j = qj[head]
        head += 1
        if i == last:
            return True
        for t in range(6):
            ii = i + DI[t]
            jj = j + DJ[t]
            if i0 <= ii <= last and j0 <= jj < j0 + msize and spins[ii, jj] == 1 and not visited[ii - i0, jj - j0]:
                visited[ii - i0, jj - j0] = 1
                qi[tail] = ii
                qj[tail] = jj
                tail += 1
    return False


@njit(cache=True, nogil=True)
def crossing_pivotal_scan(spins, i0, j0, size, out_piv):
    """out_piv[a, b] = 1 iff flipping the spin at box cell (a, b) changes the
    left-right crossing indicator."""
    visited = np.zeros((size, size), dtype=np.int32)
    qi = np.empty(size * size, dtype=np.int32)
    qj = np.empty(size * size, dtype=np.int32)
    stamp = 1
    base = _crossing_core(spins, i0, j0, size, visited, stamp, qi, qj)
    for a in range(size):
        for b in range(size):
            i = i0 + a
            j = j0 + b
            spins[i, j] = -spins[i, j]
            stamp += 1
            res = _crossing_core(spins, i0, j0, size, visited, stamp, qi, qj)
            spins[i, j] = -spins[i, j]
            out_piv[a, b] = 1 if res != base else 0
    return base


# ----------------------------------------------------------------------------
# interfaces on the hexagonal dual
# ----------------------------------------------------------------------------

ZONE_REGION = 0
ZONE_SIDE_A = 1
ZONE_SIDE_B = 2
ZONE_WALL = 3


@njit(cache=True, nogil=True)
def count_zone_interfaces(spins, zone, cut):
    """Number of +/- interfaces (paths on the dual hexagonal lattice) that
    cross the region zone == 0 from the side-A boundary zone to the side-B
    boundary zone (zone == 3 marks walls that do not count as crossings).

    The caller pads the grids so every neighbor access stays in bounds (cells
    one step outside the region carry a nonzero zone).

    ``cut`` marks severed dual edges, encoded per directed state: cut[i,j,t]
    nonzero severs the dual edge crossing the primal edge from (i,j) in
    direction t.  A walk that would traverse a severed edge exits on side A
    instead; severed states are not seeds.  This seals the inner boundary at
    rhombus-ring corners that have no hole neighbor, so that the crossing
    count matches the alternating-arm count exactly.

    State: directed primal edge (u, dir t) with spin(u) = +1 at a region cell
    and spin(u + DIR[t]) = -1 at a region cell; the interface travels with +
    on its left.  The forward step inspects w = u + DIR[t+1], the backward
    step w* = u + DIR[t-1]."""
    K, M = spins.shape
    visited = np.zeros(K * M * 6, dtype=np.uint8)
    limit = K * M * 6 + 2
    count = 0
    for i in range(1, K - 1):
        for j in range(1, M - 1):
            if zone[i, j] != ZONE_REGION or spins[i, j] != 1:
                continue
            for t0 in range(6):
                vi = i + DI[t0]
                vj = j + DJ[t0]
                if zone[vi, vj] != ZONE_REGION or spins[vi, vj] != -1:
                    continue
                if cut[i, j, t0]:
                    continue
                sid = (i * M + j) * 6 + t0
                if visited[sid]:
                    continue
                # walk backward to the chain start (or detect a closed loop)
                bi = i
                bj = j
                bt = t0
                start_exit = 0
                is_cycle = False
                for _step in range(limit):
                    tw = (bt + 5) % 6
                    wi = bi + DI[tw]
                    wj = bj + DJ[tw]
                    if zone[wi, wj] != ZONE_REGION:
                        start_exit = zone[wi, wj]
                        break
                    if spins[wi, wj] == 1:
                        ni = wi
                        nj = wj
                        nt = (bt + 1) % 6
                    else:
                        ni = bi
                        nj = bj
                        nt = (bt + 5) % 6
                    if cut[ni, nj, nt]:
                        start_exit = ZONE_SIDE_A
                        break
                    bi = ni
                    bj = nj
                    bt = nt
                    if bi == i and bj == j and bt == t0:
                        is_cycle = True
                        break
                # walk forward from the start, marking every state
                fi = bi
                fj = bj
                ft = bt
                end_exit = 0
                for _step in range(limit):
                    visited[(fi * M + fj) * 6 + ft] = 1
                    tw = (ft + 1) % 6
                    wi = fi + DI[tw]
                    wj = fj + DJ[tw]
                    if zone[wi, wj] != ZONE_REGION:
                        end_exit = zone[wi, wj]
                        break
                    if spins[wi, wj] == 1:
                        ni = wi
                        nj = wj
                        nt = (ft + 5) % 6
                    else:
                        ni = fi
                        nj = fj
                        nt = (ft + 1) % 6
                    if cut[ni, nj, nt]:
                        end_exit = ZONE_SIDE_A
                        break
                    fi = ni
                    fj = nj
                    ft = nt
                    if is_cycle and fi == bi and fj == bj and ft == bt:
                        break
                if not is_cycle and (
                    (start_exit == ZONE_SIDE_A and end_exit == ZONE_SIDE_B)
                    or (start_exit == ZONE_SIDE_B and end_exit == ZONE_SIDE_A)
                ):
                    count += 1
    return count


# ----------------------------------------------------------------------------
# two vertex-disjoint paths (Menger / unit-capacity max-flow)
# ----------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def two_disjoint_paths(allowed, s1i, s1j, s2i, s2j, sinks):
    """True iff there exist two vertex-disjoint paths through ``allowed``
    cells, one starting at (s1i, s1j) and one at (s2i, s2j), each ending on a
    ``sinks`` cell.  Unit vertex capacities (endpoints included)."""
    K, M = allowed.shape
    N = K * M
    if not allowed[s1i, s1j] or not allowed[s2i, s2j]:
        return False
    if s1i == s2i and s1j == s2j:
        return False
    UNSEEN = -9  # distinct from the source markers -1 and -2
    used = np.zeros(N, dtype=np.uint8)      # vertex carries one unit
    fnext = np.full(N, -1, dtype=np.int32)  # flow successor cell
    parent = np.empty(2 * N, dtype=np.int32)
    queue = np.empty(2 * N, dtype=np.int32)
    src = np.empty(2, dtype=np.int32)
    src[0] = s1i * M + s1j
    src[1] = s2i * M + s2j
    src_used = np.zeros(2, dtype=np.uint8)
    flow = 0
    for _aug in range(2):
        parent[:] = UNSEEN
        head = 0
        tail = 0
        for a in range(2):
            if not src_used[a]:
                st = 2 * src[a]  # in-state of the source cell
                if parent[st] == UNSEEN:
                    parent[st] = -1 - a  # encode which source
                    queue[tail] = st
                    tail += 1
        goal = -1
        while head < tail and goal < 0:
            st = queue[head]
            head += 1
            v = st // 2
            vin = (st % 2) == 0
            vi = v // M
            vj = v % M
            if vin:
                # in(v) -> out(v) if vertex unused
                if not used[v]:
                    nst = 2 * v + 1
                    if parent[nst] == UNSEEN:
                        parent[nst] = st
                        if sinks[vi, vj]:
                            goal = nst
                            break
                        queue[tail] = nst
                        tail += 1
                # in(v) -> out(u) reverse arcs for flow edges u -> v
                for t in range(6):
                    ui = vi + DI[t]
                    uj = vj + DJ[t]
                    if 0 <= ui < K and 0 <= uj < M and allowed[ui, uj]:
                        u = ui * M + uj
                        if fnext[u] == v:
                            nst = 2 * u + 1
                            if parent[nst] == UNSEEN:
                                parent[nst] = st
                                if sinks[ui, uj]:
                                    goal = nst
                                    break
                                queue[tail] = nst
                                tail += 1
            else:
                # out(v) -> in(w) forward adjacency arcs
                for t in range(6):
                    wi = vi + DI[t]
                    wj = vj + DJ[t]
                    if 0 <= wi < K and 0 <= wj < M and allowed[wi, wj]:
                        w = wi * M + wj
                        nst = 2 * w
                        if parent[nst] == UNSEEN:
                            parent[nst] = st
                            queue[tail] = nst
                            tail += 1
                # out(v) -> in(v) cancellation if vertex used
                if used[v]:
                    nst = 2 * v
                    if parent[nst] == UNSEEN:
                        parent[nst] = st
                        queue[tail] = nst
                        tail += 1
        if goal < 0:
            return False
        # augment along the found path
        st = goal
        while parent[st] >= 0:
            pst = parent[st]
            v = st // 2
            pv = pst // 2
            if pv == v:
                if pst % 2 == 0 and st % 2 == 1:
                    used[v] = 1      # in(v) -> out(v)
                else:
                    used[v] = 0      # out(v) -> in(v) cancellation
            else:
                if pst % 2 == 1 and st % 2 == 0:
                    fnext[pv] = v    # forward edge pv -> v
                else:
                    fnext[v] = -1    # reverse of edge v -> pv: remove it
            st = pst
        src_used[-1 - parent[st]] = 1
        flow += 1
    return flow == 2
