"""Growable packed event-table state shared by the config API and the chains."""

import numpy as np

from . import _kernels as K

__all__ = ["PackedState"]


def _poisson_safe_capacity(mean):
    # mean + 12 sigma + slack: overflow beyond this is astronomically rare
    return int(mean + 12.0 * np.sqrt(mean + 1.0)) + 32


class PackedState:
    """Flat-array event table for one configuration, plus trace workspace.

    Wraps the kernel-level arrays, handles capacity growth, and exposes thin
    methods over the kernels.  Single-writer; tracing and probing are
    read-only.
    """

    def __init__(self, graph, beta, cap=None, vcap=None):
        self.graph = graph
        self.beta = float(beta)
        n = graph.n
        mean_events = self.beta * graph.n_edges
        if cap is None:
            cap = max(64, _poisson_safe_capacity(mean_events))
        if vcap is None:
            per_vertex = self.beta * max(1, graph.max_degree)
            vcap = max(16, _poisson_safe_capacity(per_vertex))
        self.cap = int(cap)
        self.vcap = int(vcap)
        self.edges_a = np.ascontiguousarray(graph.edges[:, 0])
        self.edges_b = np.ascontiguousarray(graph.edges[:, 1])
        self.meta = np.zeros(3, dtype=np.int64)
        self._alloc_event_arrays()
        self.vlist = np.zeros((n, self.vcap), dtype=np.int64)
        self.vcount = np.zeros(n, dtype=np.int64)
        self._alloc_workspace()
        self.clear()

    def _alloc_event_arrays(self):
        cap = self.cap
        self.ev_a = np.zeros(cap, dtype=np.int64)
        self.ev_b = np.zeros(cap, dtype=np.int64)
        self.ev_t = np.zeros(cap, dtype=np.float64)
        self.ev_kind = np.zeros(cap, dtype=np.int8)
        self.alive = np.zeros(cap, dtype=np.int64)
        self.slot_pos = np.full(cap, -1, dtype=np.int64)
        self.free_slots = np.zeros(cap, dtype=np.int64)

    def _alloc_workspace(self):
        n = self.graph.n
        max_arcs = 2 * self.cap + n
        self.arc_off = np.zeros(n + 1, dtype=np.int64)
        self.arc_loop = np.full(max_arcs, -1, dtype=np.int64)
        self.arc_dir = np.zeros(max_arcs, dtype=np.int8)
        self.loop_len = np.zeros(max_arcs, dtype=np.float64)
        self.scratch_count = np.zeros(max_arcs, dtype=np.int64)

    @property
    def n_events(self):
        return int(self.meta[K.META_M])

    def _table_args(self):
        return (self.meta, self.ev_a, self.ev_b, self.ev_t, self.ev_kind,
                self.alive, self.slot_pos, self.free_slots,
                self.vlist, self.vcount)

    def _trace_args(self):
        return (self.graph.n, self.beta, self.ev_a, self.ev_b, self.ev_t,
                self.ev_kind, self.vlist, self.vcount,
                self.arc_off, self.arc_loop, self.arc_dir, self.loop_len)

    def clear(self):
        K.clear_state(self.meta, self.slot_pos, self.free_slots, self.vcount)

    def grow(self):
        """Double event capacity and per-vertex capacity, preserving content."""
        old_cap = self.cap
        self.cap = old_cap * 2
        old = (self.ev_a, self.ev_b, self.ev_t, self.ev_kind,
               self.alive, self.slot_pos)
        self._alloc_event_arrays()
        for new_arr, old_arr in zip(
                (self.ev_a, self.ev_b, self.ev_t, self.ev_kind,
                 self.alive, self.slot_pos), old):
            new_arr[:old_cap] = old_arr
        live = np.flatnonzero(self.slot_pos[:self.cap] >= 0)
        free = [s for s in range(self.cap) if self.slot_pos[s] < 0]
        self.free_slots[:len(free)] = free[::-1]
        self.meta[K.META_NFREE] = len(free)
        self.meta[K.META_M] = len(live)
        old_vcap = self.vcap
        self.vcap = old_vcap * 2
        old_vlist = self.vlist
        self.vlist = np.zeros((self.graph.n, self.vcap), dtype=np.int64)
        self.vlist[:, :old_vcap] = old_vlist
        self._alloc_workspace()

    def insert(self, a, b, t, kind):
        """Insert an event, growing capacity as needed.

        Returns the slot, or -1 when the time collides with an existing event
        at either endpoint.
        """
        while True:
            slot = K.insert_event_kernel(*self._table_args(),
                                         int(a), int(b), float(t), int(kind))
            if slot != -2:
                return int(slot)
            self.grow()

    def remove(self, slot):
        return K.remove_event_kernel(*self._table_args(), int(slot)) == 0

    def trace(self):
        """Run the full loop decomposition; returns (n_loops, n_arcs)."""
        return K.trace_loops_kernel(*self._trace_args())

    def probe(self, x, y, t, ignore=-1):
        return K.probe_pair_kernel(self.meta, self.ev_a, self.ev_b, self.ev_t,
                                   self.ev_kind, self.vlist, self.vcount,
                                   int(x), int(y), float(t), int(ignore))

    def delta_insert(self, a, b, t, kind):
        return int(K.delta_insert_kernel(
            self.meta, self.ev_a, self.ev_b, self.ev_t, self.ev_kind,
            self.vlist, self.vcount, int(a), int(b), float(t), int(kind)))

    def delta_remove(self, slot):
        return int(K.delta_remove_kernel(
            self.meta, self.ev_a, self.ev_b, self.ev_t, self.ev_kind,
            self.vlist, self.vcount, int(slot)))

    def live_slots(self):
        return [int(s) for s in self.alive[:self.n_events]]

    def event_tuple(self, slot):
        return (int(self.ev_a[slot]), int(self.ev_b[slot]),
                float(self.ev_t[slot]), int(self.ev_kind[slot]))
