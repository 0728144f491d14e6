"""Loop decomposition of a configuration and point/pair queries.

Loops live on the space-time cylinder: vertical motion wraps at times 0/beta,
a crossing moves the walker to the other edge endpoint keeping its vertical
direction, a bar moves it reversing the direction.  Loop length is measured
in time, so the lengths of all loops sum to beta * n_vertices exactly.
"""

import bisect

import numpy as np

from . import _kernels as K
from .config import _KIND_TO_INT

__all__ = [
    "E_PLUS",
    "E_MINUS",
    "DIFFERENT_LOOPS",
    "LoopDecomposition",
    "trace_loops",
    "loop_at",
    "pair_event",
    "delta_loops",
]

E_PLUS = "E_plus"
E_MINUS = "E_minus"
DIFFERENT_LOOPS = "different_loops"

_PROBE_TO_NAME = {
    K.PROBE_DIFFERENT: DIFFERENT_LOOPS,
    K.PROBE_SAME_SAME: E_PLUS,
    K.PROBE_SAME_OPP: E_MINUS,
}


class LoopDecomposition:
    """Immutable snapshot of the loop structure of one configuration.

    `loop_lengths[i]` is the time length of loop i; every point of the
    cylinder belongs to exactly one loop with one traversal direction,
    queryable through `loop_at` / `intervals`.
    """

    def __init__(self, n, beta, vtimes, arc_off, arc_loop, arc_dir, loop_len,
                 n_loops):
        self.n = n
        self.beta = beta
        self._vtimes = vtimes
        self._arc_off = arc_off
        self._arc_loop = arc_loop
        self._arc_dir = arc_dir
        self.loop_lengths = loop_len
        self.loop_count = n_loops

    def _arc_index(self, vertex, time):
        times = self._vtimes[vertex]
        k = len(times)
        if k == 0:
            return 0
        i = bisect.bisect_right(times, time) - 1
        return i if i >= 0 else k - 1

    def loop_at(self, vertex, time):
        """(loop id, direction, loop length) at the point (vertex, time).

        The direction is "up" or "down"; querying exactly at an event time of
        this vertex raises (the direction is undefined at the jump point).
        """
        vertex = int(vertex)
        time = float(time)
        if not (0 <= vertex < self.n):
            raise ValueError("vertex out of range")
        if not (0.0 <= time < self.beta):
            raise ValueError("time outside [0, beta)")
        times = self._vtimes[vertex]
        i = bisect.bisect_left(times, time)
        if i < len(times) and times[i] == time:
            raise ValueError(f"({vertex}, {time}) is an event time; "
                             "direction undefined at the jump point")
        aid = self._arc_off[vertex] + self._arc_index(vertex, time)
        lid = int(self._arc_loop[aid])
        direction = "up" if self._arc_dir[aid] else "down"
        return lid, direction, float(self.loop_lengths[lid])

    def intervals(self, vertex):
        """Per-vertex assignment: list of (t_lo, t_hi, loop id, direction).

        The last interval wraps through time 0 (t_hi <= t_lo then); a vertex
        with no events yields the single full circle (0, beta).
        """
        times = self._vtimes[vertex]
        base = self._arc_off[vertex]
        out = []
        k = len(times)
        if k == 0:
            lid = int(self._arc_loop[base])
            return [(0.0, self.beta, lid, "up" if self._arc_dir[base] else "down")]
        for i in range(k):
            t_lo = times[i]
            t_hi = times[(i + 1) % k]
            lid = int(self._arc_loop[base + i])
            direction = "up" if self._arc_dir[base + i] else "down"
            out.append((t_lo, t_hi, lid, direction))
        return out

    def total_length(self):
        return float(np.sum(self.loop_lengths))


def trace_loops(cfg):
    """Full loop decomposition of the configuration (pure, read-only)."""
    packed = cfg.packed
    n_loops, n_arcs = packed.trace()
    n = cfg.graph.n
    vtimes = [[float(packed.ev_t[packed.vlist[v, i]])
               for i in range(int(packed.vcount[v]))] for v in range(n)]
    return LoopDecomposition(
        n, cfg.beta, vtimes,
        packed.arc_off.copy(), packed.arc_loop[:n_arcs].copy(),
        packed.arc_dir[:n_arcs].copy(), packed.loop_len[:n_loops].copy(),
        n_loops)


def loop_at(cfg, vertex, time):
    """(loop id, direction, loop length) through (vertex, time)."""
    return trace_loops(cfg).loop_at(vertex, time)


def pair_event(cfg, x, y):
    """Classify the pair (x, 0), (y, 0): E_plus, E_minus or different_loops."""
    x, y = int(x), int(y)
    if x == y:
        raise ValueError("pair query needs two distinct vertices")
    for v in (x, y):
        if cfg.is_event_time_at(v, 0.0):
            raise ValueError(f"time 0 is an event time at vertex {v}")
    code = cfg.packed.probe(x, y, 0.0)
    if code < 0:
        raise RuntimeError("pair probe failed to close its walk")
    return _PROBE_TO_NAME[code]


def delta_loops(cfg, edge, time, kind):
    """Loop-count change an insertion would cause, without mutating cfg.

    +1 = split, -1 = merge, 0 = internal rewiring (possible only when both
    event kinds are present along the affected loop).
    """
    key, time = cfg._check_edge_time(edge, time)
    if time in cfg._times:
        raise ValueError(f"time {time!r} already in use")
    return cfg.packed.delta_insert(key[0], key[1], time, _KIND_TO_INT[kind])
