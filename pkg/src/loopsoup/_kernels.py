"""Hot kernels for event-list manipulation, loop tracing, and the samplers.

Every function here is written against flat numpy arrays only, so the same
source runs either numba-compiled (default) or as plain Python.  The path is
selected at import time by the LOOPSOUP_NUMBA environment variable
("0"/"false"/"off" forces the pure-Python fallback); tests and the benchmark
load a second copy of this module with `_FORCE_NUMBA` injected to compare the
two paths in-process.

Packed configuration state (one chain / one scratch config):
  meta       int64[3]   : [number of events, free slots, max per-vertex count]
  ev_a, ev_b int64[cap] : edge endpoints per event slot
  ev_t       f8[cap]    : event times in (0, beta)
  ev_kind    int8[cap]  : 0 = crossing (direction-preserving jump),
                          1 = bar (direction-reversing jump)
  alive      int64[cap] : dense list of live slots
  slot_pos   int64[cap] : position in `alive`, -1 if free
  free_slots int64[cap] : stack of free slots
  vlist      int64[n,vcap], vcount int64[n] : per-vertex slots sorted by time

Loop tracing works on "arcs": the inter-event intervals of each vertex's time
circle (one full circle if the vertex carries no events).  Each arc belongs to
exactly one loop and is traversed in exactly one vertical direction.
"""

import os

import numpy as np

# --- numba / pure-python path selection ------------------------------------

_force = globals().get("_FORCE_NUMBA", None)
if _force is None:
    _env = os.environ.get("LOOPSOUP_NUMBA", "auto").strip().lower()
    if _env in ("0", "false", "off", "no"):
        _force = False

if _force is False:
    HAS_NUMBA = False
else:
    try:
        from numba import njit as _numba_njit
        HAS_NUMBA = True
    except ImportError:
        if _force is True:
            raise
        HAS_NUMBA = False

if HAS_NUMBA:
    def njit(fn):
        return _numba_njit(cache=True, nogil=True)(fn)
else:
    def njit(fn):
        return fn

# --- shared constants -------------------------------------------------------

KIND_CROSS = 0
KIND_BAR = 1

META_M = 0        # live event count
META_NFREE = 1    # free slot count
META_MAXV = 2     # running max of vcount (conservative, monotone per run)

# chain counters
C_STEPS = 0
C_PROP_INS = 1
C_PROP_DEL = 2
C_ACC_INS = 3
C_ACC_DEL = 4
C_AUTOREJ_DEL = 5
C_DUP_REJ = 6
C_NMEAS = 7
N_COUNTERS = 8

PROBE_DIFFERENT = 0
PROBE_SAME_SAME = 1
PROBE_SAME_OPP = 2

STATUS_OK = 0
STATUS_FULL = 1

SQRT2 = np.sqrt(2.0)


# --- event table primitives ---------------------------------------------


def load_kernel_variant(force_numba):
    """Load a second, independent copy of this module with the path forced.

    Used by tests and the benchmark to compare the compiled and pure-Python
    paths in one process.
    """
    import importlib.util

    name = f"{__name__}_{'nb' if force_numba else 'py'}"
    spec = importlib.util.spec_from_file_location(name, __file__)
    mod = importlib.util.module_from_spec(spec)
    mod._FORCE_NUMBA = bool(force_numba)
    spec.loader.exec_module(mod)
    return mod


@njit
def clear_state(meta, slot_pos, free_slots, vcount):
    cap = slot_pos.shape[0]
    for i in range(cap):
        slot_pos[i] = -1
        free_slots[i] = cap - 1 - i
    for v in range(vcount.shape[0]):
        vcount[v] = 0
    meta[META_M] = 0
    meta[META_NFREE] = cap
    meta[META_MAXV] = 0


@njit
def _lower_bound(vlist, vcount, ev_t, v, t):
    """First index i in v's sorted list with event time >= t."""
    lo = 0
    hi = vcount[v]
    while lo < hi:
        mid = (lo + hi) // 2
        if ev_t[vlist[v, mid]] < t:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit
def _find_exact(vlist, vcount, ev_t, v, t):
    i = _lower_bound(vlist, vcount, ev_t, v, t)
    if i < vcount[v] and ev_t[vlist[v, i]] == t:
        return i
    return -1


@njit
def _vinsert(vlist, vcount, ev_t, v, slot, t):
    pos = _lower_bound(vlist, vcount, ev_t, v, t)
    i = vcount[v]
    while i > pos:
        vlist[v, i] = vlist[v, i - 1]
        i -= 1
    vlist[v, pos] = slot
    vcount[v] += 1


@njit
def _vremove(vlist, vcount, ev_t, v, t):
    pos = _lower_bound(vlist, vcount, ev_t, v, t)
    k = vcount[v]
    i = pos
    while i < k - 1:
        vlist[v, i] = vlist[v, i + 1]
        i += 1
    vcount[v] = k - 1


@njit
def insert_event_kernel(meta, ev_a, ev_b, ev_t, ev_kind, alive, slot_pos,
                        free_slots, vlist, vcount, a, b, t, kind):
    """Insert an event; returns its slot, -1 on duplicate time, -2 if full."""
    cap = ev_t.shape[0]
    vcap = vlist.shape[1]
    if meta[META_M] >= cap or vcount[a] >= vcap or vcount[b] >= vcap:
        return -2
    if _find_exact(vlist, vcount, ev_t, a, t) >= 0:
        return -1
    if _find_exact(vlist, vcount, ev_t, b, t) >= 0:
        return -1
    nf = meta[META_NFREE]
    slot = free_slots[nf - 1]
    meta[META_NFREE] = nf - 1
    ev_a[slot] = a
    ev_b[slot] = b
    ev_t[slot] = t
    ev_kind[slot] = kind
    _vinsert(vlist, vcount, ev_t, a, slot, t)
    _vinsert(vlist, vcount, ev_t, b, slot, t)
    m = meta[META_M]
    alive[m] = slot
    slot_pos[slot] = m
    meta[META_M] = m + 1
    if vcount[a] > meta[META_MAXV]:
        meta[META_MAXV] = vcount[a]
    if vcount[b] > meta[META_MAXV]:
        meta[META_MAXV] = vcount[b]
    return slot


@njit
def remove_event_kernel(meta, ev_a, ev_b, ev_t, ev_kind, alive, slot_pos,
                        free_slots, vlist, vcount, slot):
    """Remove the event in `slot`; returns 0, or -1 if the slot is not live."""
    if slot < 0 or slot >= slot_pos.shape[0] or slot_pos[slot] < 0:
        return -1
    a = ev_a[slot]
    b = ev_b[slot]
    t = ev_t[slot]
    _vremove(vlist, vcount, ev_t, a, t)
    _vremove(vlist, vcount, ev_t, b, t)
    m = meta[META_M]
    p = slot_pos[slot]
    last = alive[m - 1]
    alive[p] = last
    slot_pos[last] = p
    slot_pos[slot] = -1
    meta[META_M] = m - 1
    free_slots[meta[META_NFREE]] = slot
    meta[META_NFREE] += 1
    return 0


# --- loop tracing ---------------------------------------------------------


@njit
def _cyclic_between(s, a, b):
    """s strictly inside the upward-oriented open interval (a, b) on the time
    circle; a == b means the full circle minus the point a."""
    if a < b:
        return a < s < b
    return s > a or s < b


@njit
def trace_loops_kernel(n, beta, ev_a, ev_b, ev_t, ev_kind, vlist, vcount,
                       arc_off, arc_loop, arc_dir, loop_len):
    """Decompose the configuration into loops.

    Fills arc_off (int64[n+1] prefix offsets), arc_loop (loop id per arc),
    arc_dir (1 = traversed upward, 0 = downward), loop_len (time length per
    loop).  Arc i of vertex v spans (t_i, t_{i+1 mod k}); when k >= 1 the arc
    with index k-1 wraps through time 0.  Returns (n_loops, n_arcs).
    """
    total = 0
    for v in range(n):
        arc_off[v] = total
        k = vcount[v]
        total += k if k > 0 else 1
    arc_off[n] = total
    n_arcs = total
    for i in range(n_arcs):
        arc_loop[i] = -1
    n_loops = 0
    for v0 in range(n):
        k0 = vcount[v0]
        cnt0 = k0 if k0 > 0 else 1
        for i0 in range(cnt0):
            if arc_loop[arc_off[v0] + i0] >= 0:
                continue
            lid = n_loops
            n_loops += 1
            length = 0.0
            v = v0
            i = i0
            up = True
            while True:
                aid = arc_off[v] + i
                arc_loop[aid] = lid
                arc_dir[aid] = 1 if up else 0
                k = vcount[v]
                if k == 0:
                    length += beta
                    break
                ti = ev_t[vlist[v, i]]
                j_up = i + 1 if i + 1 < k else 0
                tj = ev_t[vlist[v, j_up]]
                length += (tj - ti) if i + 1 < k else (beta - ti + tj)
                e = vlist[v, j_up] if up else vlist[v, i]
                w = ev_b[e] if ev_a[e] == v else ev_a[e]
                jw = _find_exact(vlist, vcount, ev_t, w, ev_t[e])
                kw = vcount[w]
                if ev_kind[e] == KIND_CROSS:
                    if up:
                        v, i = w, jw
                    else:
                        v, i = w, (jw - 1) % kw
                else:
                    if up:
                        v, i, up = w, (jw - 1) % kw, False
                    else:
                        v, i, up = w, jw, True
                if v == v0 and i == i0 and up:
                    break
            loop_len[lid] = length
    return n_loops, n_arcs


@njit
def _time0_arc(vcount, v):
    """Arc index containing time 0 at vertex v (the wrap arc)."""
    k = vcount[v]
    return k - 1 if k > 0 else 0


@njit
def measure_state(n, beta, ev_t, vlist, vcount,
                  arc_off, arc_loop, arc_dir, loop_len, n_loops,
                  origin, t0_loop_row, t0_dir_row, top_row, scratch_count):
    """Extract the standard measurement record from a traced decomposition.

    Fills the per-vertex loop id / direction at time 0, and the top-k
    normalized loop lengths (descending).  Returns (origin_len_norm, sum_c2)
    where sum_c2 = sum over loops of (number of time-0 points in the loop)^2.
    """
    for v in range(n):
        aid = arc_off[v] + _time0_arc(vcount, v)
        t0_loop_row[v] = arc_loop[aid]
        t0_dir_row[v] = arc_dir[aid]
    for l in range(n_loops):
        scratch_count[l] = 0
    for v in range(n):
        scratch_count[t0_loop_row[v]] += 1
    sum_c2 = 0
    for l in range(n_loops):
        c = scratch_count[l]
        sum_c2 += c * c
    norm = beta * n
    origin_norm = loop_len[t0_loop_row[origin]] / norm
    srt = np.sort(loop_len[:n_loops])
    kk = top_row.shape[0]
    for r in range(kk):
        idx = n_loops - 1 - r
        top_row[r] = srt[idx] / norm if idx >= 0 else 0.0
    return origin_norm, sum_c2


# --- local pair probe (the split/merge/rewire classifier) -------------------


@njit
def _walker_hop(ev_a, ev_b, ev_t, ev_kind, vlist, vcount, v, t, up, ignore):
    """Advance one hop from (v, t, up), skipping the ignored slot.

    Returns (nv, nt, nup, seg_lo, seg_hi): the new state after processing the
    next non-ignored event, and the open upward-oriented time interval
    traversed on vertex v before the jump.
    """
    k = vcount[v]
    if up:
        j = _lower_bound(vlist, vcount, ev_t, v, t)
        if j < k and ev_t[vlist[v, j]] == t:
            j += 1
        if j >= k:
            j = 0
        if vlist[v, j] == ignore:
            j += 1
            if j >= k:
                j = 0
    else:
        j = _lower_bound(vlist, vcount, ev_t, v, t) - 1
        if j < 0:
            j = k - 1
        if vlist[v, j] == ignore:
            j -= 1
            if j < 0:
                j = k - 1
    e = vlist[v, j]
    te = ev_t[e]
    if up:
        seg_lo, seg_hi = t, te
    else:
        seg_lo, seg_hi = te, t
    w = ev_b[e] if ev_a[e] == v else ev_a[e]
    if ev_kind[e] == KIND_CROSS:
        return w, te, up, seg_lo, seg_hi
    return w, te, not up, seg_lo, seg_hi


@njit
def probe_pair_kernel(meta, ev_a, ev_b, ev_t, ev_kind, vlist, vcount,
                      x, y, t, ignore):
    """Classify the pair of points (x, t) and (y, t), ignoring one slot.

    Returns PROBE_DIFFERENT when the points lie on different loops,
    PROBE_SAME_SAME / PROBE_SAME_OPP when on the same loop with equal /
    opposite vertical directions.  Two walkers trace alternately from both
    points so the cost is O(min of the two loop sizes) arc hops.
    """
    kx = vcount[x]
    if ignore >= 0 and (ev_a[ignore] == x or ev_b[ignore] == x):
        kx -= 1
    ky = vcount[y]
    if ignore >= 0 and (ev_a[ignore] == y or ev_b[ignore] == y):
        ky -= 1
    if kx == 0 or ky == 0:
        return PROBE_DIFFERENT
    av, at, aup = x, t, True
    bv, bt, bup = y, t, True
    max_hops = 8 * meta[META_M] + 16
    for _ in range(max_hops):
        seg_v, seg_up = av, aup
        av, at, aup, lo, hi = _walker_hop(ev_a, ev_b, ev_t, ev_kind,
                                          vlist, vcount, av, at, aup, ignore)
        if seg_v == y and _cyclic_between(t, lo, hi):
            return PROBE_SAME_SAME if seg_up else PROBE_SAME_OPP
        if seg_v == x and _cyclic_between(t, lo, hi):
            return PROBE_DIFFERENT
        seg_v, seg_up = bv, bup
        bv, bt, bup, lo, hi = _walker_hop(ev_a, ev_b, ev_t, ev_kind,
                                          vlist, vcount, bv, bt, bup, ignore)
        if seg_v == x and _cyclic_between(t, lo, hi):
            return PROBE_SAME_SAME if seg_up else PROBE_SAME_OPP
        if seg_v == y and _cyclic_between(t, lo, hi):
            return PROBE_DIFFERENT
    return -9


@njit
def delta_insert_kernel(meta, ev_a, ev_b, ev_t, ev_kind, vlist, vcount,
                        a, b, t, kind):
    """Loop-count change of inserting (a,b,t,kind), without mutating state.

    Merge of two loops gives -1.  Within one loop the outcome depends on the
    relative vertical directions at the two endpoints: a crossing splits when
    they agree, a bar splits when they oppose; otherwise the loop is only
    rewired internally (0).
    """
    code = probe_pair_kernel(meta, ev_a, ev_b, ev_t, ev_kind, vlist, vcount,
                             a, b, t, -1)
    if code == PROBE_DIFFERENT:
        return -1
    if kind == KIND_CROSS:
        return 1 if code == PROBE_SAME_SAME else 0
    return 1 if code == PROBE_SAME_OPP else 0


@njit
def delta_remove_kernel(meta, ev_a, ev_b, ev_t, ev_kind, vlist, vcount, slot):
    """Loop-count change of removing the event in `slot` (state unchanged)."""
    a = ev_a[slot]
    b = ev_b[slot]
    t = ev_t[slot]
    kind = ev_kind[slot]
    code = probe_pair_kernel(meta, ev_a, ev_b, ev_t, ev_kind, vlist, vcount,
                             a, b, t, slot)
    if code == PROBE_DIFFERENT:
        d_back = -1
    elif kind == KIND_CROSS:
        d_back = 1 if code == PROBE_SAME_SAME else 0
    else:
        d_back = 1 if code == PROBE_SAME_OPP else 0
    return -d_back


# --- samplers ---------------------------------------------------------------


@njit
def sample_poisson_kernel(n, beta, edges_a, edges_b, p_cross,
                          meta, ev_a, ev_b, ev_t, ev_kind, alive, slot_pos,
                          free_slots, vlist, vcount, rng):
    """Fill the state with one draw of the unweighted marked Poisson process.

    Arrival times per edge are cumulative exponentials of rate 1; each event
    is a crossing with probability p_cross, a bar otherwise.  Times land in
    the open interval (0, beta) so time 0 stays event-free.
    """
    clear_state(meta, slot_pos, free_slots, vcount)
    for ei in range(edges_a.shape[0]):
        a = edges_a[ei]
        b = edges_b[ei]
        t = -np.log(1.0 - rng.random())
        while t < beta:
            if p_cross >= 1.0:
                kind = KIND_CROSS
            elif p_cross <= 0.0:
                kind = KIND_BAR
            else:
                kind = KIND_CROSS if rng.random() < p_cross else KIND_BAR
            slot = insert_event_kernel(meta, ev_a, ev_b, ev_t, ev_kind, alive,
                                       slot_pos, free_slots, vlist, vcount,
                                       a, b, t, kind)
            if slot == -2:
                return STATUS_FULL
            # slot == -1: exact float tie at a shared vertex, measure zero;
            # the colliding event is dropped
            t += -np.log(1.0 - rng.random())
    return STATUS_OK


@njit
def direct_weight_kernel(n, beta, edges_a, edges_b, p_cross, n_remaining,
                         meta, ev_a, ev_b, ev_t, ev_kind, alive, slot_pos,
                         free_slots, vlist, vcount,
                         arc_off, arc_loop, arc_dir, loop_len,
                         acc, loop_hist, kind_counts, rng):
    """Accumulate 2^(loop count) over direct draws of the Poisson process.

    acc[0] += sum of weights, acc[1] += sum of squared weights, acc[2] += sum
    of event counts.  loop_hist histograms the loop count, kind_counts the
    event kinds.  Returns the number of samples completed (less than
    n_remaining only when the event table needs to grow).
    """
    done = 0
    while done < n_remaining:
        st = sample_poisson_kernel(n, beta, edges_a, edges_b, p_cross,
                                   meta, ev_a, ev_b, ev_t, ev_kind, alive,
                                   slot_pos, free_slots, vlist, vcount, rng)
        if st == STATUS_FULL:
            return done
        n_loops, _ = trace_loops_kernel(n, beta, ev_a, ev_b, ev_t, ev_kind,
                                        vlist, vcount, arc_off, arc_loop,
                                        arc_dir, loop_len)
        w = 2.0 ** n_loops
        acc[0] += w
        acc[1] += w * w
        acc[2] += meta[META_M]
        if n_loops < loop_hist.shape[0]:
            loop_hist[n_loops] += 1
        for i in range(meta[META_M]):
            kind_counts[ev_kind[alive[i]]] += 1
        done += 1
    return done


@njit
def run_mh_kernel(n, beta, edges_a, edges_b, p_cross,
                  meta, ev_a, ev_b, ev_t, ev_kind, alive, slot_pos,
                  free_slots, vlist, vcount,
                  counters, loop_count_box,
                  n_steps_total, sps, burn_in_sweeps, thin_sweeps, origin,
                  mb_nloops, mb_mevents, mb_origin, mb_sumc2,
                  mb_t0loop, mb_t0dir, mb_top,
                  arc_off, arc_loop, arc_dir, loop_len, scratch_count, rng):
    """Metropolis birth-death chain targeting the 2^(loops)-weighted measure.

    Insertion proposals draw (edge, time, kind) from the reference intensity;
    acceptance is min(1, 2^dL * beta*|E| / (m+1)).  Deletions pick a live
    event uniformly; acceptance is min(1, 2^dL * m / (beta*|E|)).  Proposals
    that duplicate an existing event time are rejected outright.  Measures
    the state every `thin_sweeps` sweeps after `burn_in_sweeps` (a sweep is
    `sps` steps).  Resumable: returns STATUS_FULL before consuming any
    randomness when capacity must grow.
    """
    n_edges = edges_a.shape[0]
    b_e = beta * n_edges
    cap = ev_t.shape[0]
    vcap = vlist.shape[1]
    max_meas = mb_nloops.shape[0]
    while counters[C_STEPS] < n_steps_total:
        if meta[META_M] + 1 > cap or meta[META_MAXV] + 1 > vcap:
            return STATUS_FULL
        if rng.random() < 0.5:
            counters[C_PROP_INS] += 1
            ei = int(rng.random() * n_edges)
            if ei >= n_edges:
                ei = n_edges - 1
            a = edges_a[ei]
            b = edges_b[ei]
            t = beta * rng.random()
            if p_cross >= 1.0:
                kind = KIND_CROSS
            elif p_cross <= 0.0:
                kind = KIND_BAR
            else:
                kind = KIND_CROSS if rng.random() < p_cross else KIND_BAR
            if (t <= 0.0 or t >= beta
                    or _find_exact(vlist, vcount, ev_t, a, t) >= 0
                    or _find_exact(vlist, vcount, ev_t, b, t) >= 0):
                counters[C_DUP_REJ] += 1
            else:
                dl = delta_insert_kernel(meta, ev_a, ev_b, ev_t, ev_kind,
                                         vlist, vcount, a, b, t, kind)
                p_acc = (2.0 ** dl) * b_e / (meta[META_M] + 1)
                if p_acc >= 1.0 or rng.random() < p_acc:
                    insert_event_kernel(meta, ev_a, ev_b, ev_t, ev_kind,
                                        alive, slot_pos, free_slots,
                                        vlist, vcount, a, b, t, kind)
                    loop_count_box[0] += dl
                    counters[C_ACC_INS] += 1
        else:
            counters[C_PROP_DEL] += 1
            m = meta[META_M]
            if m == 0:
                counters[C_AUTOREJ_DEL] += 1
            else:
                idx = int(rng.random() * m)
                if idx >= m:
                    idx = m - 1
                slot = alive[idx]
                dl = delta_remove_kernel(meta, ev_a, ev_b, ev_t, ev_kind,
                                         vlist, vcount, slot)
                p_acc = (2.0 ** dl) * m / b_e
                if p_acc >= 1.0 or rng.random() < p_acc:
                    remove_event_kernel(meta, ev_a, ev_b, ev_t, ev_kind,
                                        alive, slot_pos, free_slots,
                                        vlist, vcount, slot)
                    loop_count_box[0] += dl
                    counters[C_ACC_DEL] += 1
        counters[C_STEPS] += 1
        s1 = counters[C_STEPS]
        if s1 % sps == 0:
            sweep = s1 // sps
            if sweep > burn_in_sweeps and (sweep - burn_in_sweeps) % thin_sweeps == 0:
                mi = counters[C_NMEAS]
                if mi < max_meas:
                    n_loops, _ = trace_loops_kernel(n, beta, ev_a, ev_b, ev_t,
                                                    ev_kind, vlist, vcount,
                                                    arc_off, arc_loop, arc_dir,
                                                    loop_len)
                    onorm, sc2 = measure_state(n, beta, ev_t, vlist, vcount,
                                               arc_off, arc_loop, arc_dir,
                                               loop_len, n_loops, origin,
                                               mb_t0loop[mi], mb_t0dir[mi],
                                               mb_top[mi], scratch_count)
                    mb_nloops[mi] = n_loops
                    mb_mevents[mi] = meta[META_M]
                    mb_origin[mi] = onorm
                    mb_sumc2[mi] = sc2
                    counters[C_NMEAS] = mi + 1
    return STATUS_OK


@njit
def run_gillespie_kernel(n, beta, edges_a, edges_b, p_cross,
                         meta, ev_a, ev_b, ev_t, ev_kind, alive, slot_pos,
                         free_slots, vlist, vcount,
                         counters, loop_count_box, tau_box,
                         t_meas_start, meas_dt, origin,
                         mb_nloops, mb_mevents, mb_origin, mb_sumc2,
                         mb_t0loop, mb_t0dir, mb_top,
                         arc_off, arc_loop, arc_dir, loop_len, scratch_count,
                         rng):
    """Continuous-time birth-death chain with split/merge rates 2^(dL/2).

    Simulated by thinning with the uniform rate bound sqrt(2): tentative
    transitions occur at rate sqrt(2)*(beta*|E| + m); a tentative insertion
    (or deletion) is executed with probability 2^(dL/2)/sqrt(2).  The chain
    is measured at times t_meas_start + k*meas_dt; its stationary law matches
    the Metropolis chain's.  Returns once all measurement rows are filled.
    """
    n_edges = edges_a.shape[0]
    b_e = beta * n_edges
    cap = ev_t.shape[0]
    vcap = vlist.shape[1]
    max_meas = mb_nloops.shape[0]
    while counters[C_NMEAS] < max_meas:
        if meta[META_M] + 1 > cap or meta[META_MAXV] + 1 > vcap:
            return STATUS_FULL
        m = meta[META_M]
        rate = SQRT2 * (b_e + m)
        tau_new = tau_box[0] - np.log(1.0 - rng.random()) / rate
        while counters[C_NMEAS] < max_meas:
            epoch = t_meas_start + (counters[C_NMEAS] + 1) * meas_dt
            if epoch > tau_new:
                break
            mi = counters[C_NMEAS]
            n_loops, _ = trace_loops_kernel(n, beta, ev_a, ev_b, ev_t, ev_kind,
                                            vlist, vcount, arc_off, arc_loop,
                                            arc_dir, loop_len)
            onorm, sc2 = measure_state(n, beta, ev_t, vlist, vcount, arc_off,
                                       arc_loop, arc_dir, loop_len, n_loops,
                                       origin, mb_t0loop[mi], mb_t0dir[mi],
                                       mb_top[mi], scratch_count)
            mb_nloops[mi] = n_loops
            mb_mevents[mi] = m
            mb_origin[mi] = onorm
            mb_sumc2[mi] = sc2
            counters[C_NMEAS] = mi + 1
        tau_box[0] = tau_new
        if counters[C_NMEAS] >= max_meas:
            break
        if rng.random() < b_e / (b_e + m):
            counters[C_PROP_INS] += 1
            ei = int(rng.random() * n_edges)
            if ei >= n_edges:
                ei = n_edges - 1
            a = edges_a[ei]
            b = edges_b[ei]
            t = beta * rng.random()
            if p_cross >= 1.0:
                kind = KIND_CROSS
            elif p_cross <= 0.0:
                kind = KIND_BAR
            else:
                kind = KIND_CROSS if rng.random() < p_cross else KIND_BAR
            if (t <= 0.0 or t >= beta
                    or _find_exact(vlist, vcount, ev_t, a, t) >= 0
                    or _find_exact(vlist, vcount, ev_t, b, t) >= 0):
                counters[C_DUP_REJ] += 1
            else:
                dl = delta_insert_kernel(meta, ev_a, ev_b, ev_t, ev_kind,
                                         vlist, vcount, a, b, t, kind)
                p_acc = (2.0 ** (0.5 * dl)) / SQRT2
                if p_acc >= 1.0 or rng.random() < p_acc:
                    insert_event_kernel(meta, ev_a, ev_b, ev_t, ev_kind,
                                        alive, slot_pos, free_slots,
                                        vlist, vcount, a, b, t, kind)
                    loop_count_box[0] += dl
                    counters[C_ACC_INS] += 1
        else:
            counters[C_PROP_DEL] += 1
            if m == 0:
                counters[C_AUTOREJ_DEL] += 1
            else:
                idx = int(rng.random() * m)
                if idx >= m:
                    idx = m - 1
                slot = alive[idx]
                dl = delta_remove_kernel(meta, ev_a, ev_b, ev_t, ev_kind,
                                         vlist, vcount, slot)
                p_acc = (2.0 ** (0.5 * dl)) / SQRT2
                if p_acc >= 1.0 or rng.random() < p_acc:
                    remove_event_kernel(meta, ev_a, ev_b, ev_t, ev_kind,
                                        alive, slot_pos, free_slots,
                                        vlist, vcount, slot)
                    loop_count_box[0] += dl
                    counters[C_ACC_DEL] += 1
    return STATUS_OK


@njit
def invariants_batch_kernel(n, beta, edges_a, edges_b, p_cross, n_configs,
                            meta, ev_a, ev_b, ev_t, ev_kind, alive, slot_pos,
                            free_slots, vlist, vcount,
                            arc_off, arc_loop, arc_dir, loop_len,
                            out_i, out_f, rng):
    """Batch check of structural loop invariants on random Poisson draws.

    For each draw: total loop length must equal beta*n, and the local
    loop-count delta of one random admissible insertion must match the
    difference of full retraces.  out_i collects
    [n_done, n_length_violations, n_delta_mismatch,
     pure-kind dL counts (-1,0,+1), mixed dL counts (-1,0,+1)],
    out_f[0] the max relative length error.
    """
    for c in range(n_configs):
        st = sample_poisson_kernel(n, beta, edges_a, edges_b, p_cross,
                                   meta, ev_a, ev_b, ev_t, ev_kind, alive,
                                   slot_pos, free_slots, vlist, vcount, rng)
        if st == STATUS_FULL:
            return STATUS_FULL
        n0, _ = trace_loops_kernel(n, beta, ev_a, ev_b, ev_t, ev_kind, vlist,
                                   vcount, arc_off, arc_loop, arc_dir, loop_len)
        total = 0.0
        for l in range(n0):
            total += loop_len[l]
        rel = abs(total - beta * n) / (beta * n)
        if rel > out_f[0]:
            out_f[0] = rel
        if rel > 1e-9:
            out_i[1] += 1
        n_bars = 0
        for i in range(meta[META_M]):
            if ev_kind[alive[i]] == KIND_BAR:
                n_bars += 1
        # one random admissible insertion
        slot = -1
        kind = KIND_CROSS
        for _ in range(64):
            ei = int(rng.random() * edges_a.shape[0])
            if ei >= edges_a.shape[0]:
                ei = edges_a.shape[0] - 1
            a = edges_a[ei]
            b = edges_b[ei]
            t = beta * rng.random()
            if t <= 0.0 or t >= beta:
                continue
            if p_cross >= 1.0:
                kind = KIND_CROSS
            elif p_cross <= 0.0:
                kind = KIND_BAR
            else:
                kind = KIND_CROSS if rng.random() < p_cross else KIND_BAR
            if (_find_exact(vlist, vcount, ev_t, a, t) >= 0
                    or _find_exact(vlist, vcount, ev_t, b, t) >= 0):
                continue
            dl = delta_insert_kernel(meta, ev_a, ev_b, ev_t, ev_kind, vlist,
                                     vcount, a, b, t, kind)
            slot = insert_event_kernel(meta, ev_a, ev_b, ev_t, ev_kind, alive,
                                       slot_pos, free_slots, vlist, vcount,
                                       a, b, t, kind)
            if slot == -2:
                return STATUS_FULL
            n1, _ = trace_loops_kernel(n, beta, ev_a, ev_b, ev_t, ev_kind,
                                       vlist, vcount, arc_off, arc_loop,
                                       arc_dir, loop_len)
            if n1 - n0 != dl:
                out_i[2] += 1
            m_after = meta[META_M]
            pure = (n_bars == 0 and kind == KIND_CROSS) or \
                   (n_bars == m_after - 1 and kind == KIND_BAR)
            if pure:
                out_i[3 + dl + 1] += 1
            else:
                out_i[6 + dl + 1] += 1
            break
        out_i[0] += 1
    return STATUS_OK
