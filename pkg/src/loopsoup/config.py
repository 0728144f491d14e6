"""Event configurations on a graph's space-time cylinder, with text dump/load.

A configuration holds marked events (edge, time, kind) on E x [0, beta); the
kind decides how a traced loop jumps: a crossing keeps the vertical direction,
a bar reverses it.  Event times are kept pairwise distinct across the whole
configuration; exact float collisions are rejected rather than perturbed so
tracing stays deterministic.
"""

from dataclasses import dataclass

from . import _kernels as K
from .graph import parse_graph_spec
from .state import PackedState

__all__ = [
    "CROSSING",
    "BAR",
    "Event",
    "LoopConfig",
    "DuplicateTimeError",
    "dump_config",
    "load_config",
]

CROSSING = "crossing"
BAR = "bar"

_KIND_TO_INT = {CROSSING: K.KIND_CROSS, BAR: K.KIND_BAR}
_KIND_TO_STR = {K.KIND_CROSS: CROSSING, K.KIND_BAR: BAR}
_KIND_TO_CHAR = {K.KIND_CROSS: "X", K.KIND_BAR: "B"}
_CHAR_TO_INT = {"X": K.KIND_CROSS, "B": K.KIND_BAR}


class DuplicateTimeError(ValueError):
    """An event time collides with an existing one; caller should resample."""


@dataclass(frozen=True)
class Event:
    id: int
    edge: tuple
    time: float
    kind: str


class LoopConfig:
    """A realization of the marked point process, mutable via insert/remove."""

    def __init__(self, graph, beta):
        if beta <= 0:
            raise ValueError("beta must be positive")
        self.graph = graph
        self.beta = float(beta)
        self.packed = PackedState(graph, beta)
        self._edge_set = {(int(a), int(b)) for a, b in graph.edges}
        self._events = {}
        self._slot_to_id = {}
        self._times = set()
        self._next_id = 0

    @property
    def n_events(self):
        return len(self._events)

    def events(self):
        """Events as a list sorted by time."""
        return sorted(self._events.values(), key=lambda e: e.time)

    def event(self, event_id):
        return self._events[event_id]

    def _check_edge_time(self, edge, time):
        a, b = int(edge[0]), int(edge[1])
        key = (min(a, b), max(a, b))
        if key not in self._edge_set:
            raise ValueError(f"{edge} is not an edge of {self.graph.spec}")
        time = float(time)
        if not (0.0 <= time < self.beta):
            raise ValueError(f"time {time} outside [0, beta={self.beta})")
        return key, time

    def insert_event(self, edge, time, kind):
        """Add an event; returns its id.  Duplicate times are rejected."""
        key, time = self._check_edge_time(edge, time)
        if kind not in _KIND_TO_INT:
            raise ValueError(f"kind must be {CROSSING!r} or {BAR!r}")
        if time in self._times:
            raise DuplicateTimeError(f"time {time!r} already in use")
        slot = self.packed.insert(key[0], key[1], time, _KIND_TO_INT[kind])
        if slot < 0:
            raise DuplicateTimeError(f"time {time!r} already in use at an endpoint")
        eid = self._next_id
        self._next_id += 1
        self._events[eid] = Event(eid, key, time, kind)
        self._slot_to_id[slot] = eid
        self._times.add(time)
        return eid

    def remove_event(self, event_id):
        if event_id not in self._events:
            raise KeyError(f"no event with id {event_id}")
        ev = self._events.pop(event_id)
        slot = next(s for s, i in self._slot_to_id.items() if i == event_id)
        del self._slot_to_id[slot]
        self.packed.remove(slot)
        self._times.discard(ev.time)

    def event_multiset(self):
        return sorted((e.edge[0], e.edge[1], e.time, e.kind)
                      for e in self._events.values())

    def __eq__(self, other):
        if not isinstance(other, LoopConfig):
            return NotImplemented
        return (self.beta == other.beta
                and self.graph.spec == other.graph.spec
                and self.event_multiset() == other.event_multiset())

    def is_event_time_at(self, vertex, time):
        vertex = int(vertex)
        for e in self._events.values():
            if time == e.time and vertex in e.edge:
                return True
        return False

    @classmethod
    def from_packed(cls, graph, beta, packed):
        """Adopt an already-filled packed state (e.g. a sampler draw)."""
        cfg = cls.__new__(cls)
        cfg.graph = graph
        cfg.beta = float(beta)
        cfg.packed = packed
        cfg._edge_set = {(int(a), int(b)) for a, b in graph.edges}
        cfg._events = {}
        cfg._slot_to_id = {}
        cfg._times = set()
        cfg._next_id = 0
        for slot in packed.live_slots():
            a, b, t, kind = packed.event_tuple(slot)
            eid = cfg._next_id
            cfg._next_id += 1
            cfg._events[eid] = Event(eid, (a, b), t, _KIND_TO_STR[kind])
            cfg._slot_to_id[slot] = eid
            cfg._times.add(t)
        return cfg


def dump_config(cfg, counters=None):
    """Serialize to the text dump format.

    Header "beta=<float> graph=<spec>", then one event per line
    "a b <time> X|B" with times at 17 significant digits (bit-exact reload).
    Optional chain counters are written as "counter <name>=<int>" lines.
    """
    lines = [f"beta={cfg.beta:.17g} graph={cfg.graph.spec}"]
    if counters:
        for name, value in counters.items():
            lines.append(f"counter {name}={int(value)}")
    for e in cfg.events():
        a, b = e.edge
        lines.append(f"{a} {b} {e.time:.17g} {_KIND_TO_CHAR[_KIND_TO_INT[e.kind]]}")
    return "\n".join(lines) + "\n"


def load_config(text, graph=None):
    """Parse a dump back into (LoopConfig, counters dict)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("beta="):
        raise ValueError("missing header line")
    head, _, gspec = lines[0].partition(" graph=")
    beta = float(head[len("beta="):])
    if graph is None:
        graph = parse_graph_spec(gspec)
    cfg = LoopConfig(graph, beta)
    counters = {}
    for ln in lines[1:]:
        if ln.startswith("counter "):
            name, _, value = ln[len("counter "):].partition("=")
            counters[name] = int(value)
            continue
        a, b, t, kind_char = ln.split()
        cfg.insert_event((int(a), int(b)), float(t), _KIND_TO_STR[_CHAR_TO_INT[kind_char]])
    return cfg, counters
