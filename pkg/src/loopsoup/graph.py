"""Finite simple graphs: builders, BFS distances, and CLI spec strings.

Vertices are dense integer indices 0..n-1.  Coordinate conventions of the
builders are documented on each builder so that observables can address
specific sites (e.g. antipodal pairs on a torus).
"""

from collections import deque

import numpy as np

__all__ = [
    "Graph",
    "build_path",
    "build_cycle",
    "build_torus",
    "build_complete",
    "graph_distance",
    "distances_from",
    "far_pair",
    "parse_graph_spec",
]


class Graph:
    """Immutable simple graph: no self-loops, no duplicate edges.

    Attributes
    ----------
    n : number of vertices
    edges : int64 array of shape (n_edges, 2), each row (a, b) with a < b,
        rows lexicographically sorted
    adjacency : list of int64 arrays, neighbors of each vertex
    spec : the CLI spec string this graph was built from, or a descriptive name
    """

    def __init__(self, n, edge_list, spec=""):
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        seen = set()
        rows = []
        for a, b in edge_list:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop at vertex {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a},{b}) out of range for n={n}")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            rows.append(key)
        rows.sort()
        self.n = int(n)
        self.edges = np.array(rows, dtype=np.int64).reshape(len(rows), 2)
        self.spec = spec
        adj = [[] for _ in range(n)]
        for a, b in rows:
            adj[a].append(b)
            adj[b].append(a)
        self.adjacency = [np.array(sorted(v), dtype=np.int64) for v in adj]

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @property
    def max_degree(self):
        if self.n_edges == 0:
            return 0
        return max(len(a) for a in self.adjacency)

    def __repr__(self):
        return f"Graph({self.spec or 'custom'}: {self.n} vertices, {self.n_edges} edges)"


def build_path(n):
    """Path graph: vertices 0..n-1, edges {i, i+1}."""
    if n < 1:
        raise ValueError("path needs n >= 1")
    return Graph(n, [(i, i + 1) for i in range(n - 1)], spec=f"path:{n}")


def build_cycle(n):
    """Cycle graph on n >= 3 vertices, edges {i, (i+1) mod n}."""
    if n < 3:
        raise ValueError("cycle needs n >= 3 (use path:2 for a single edge)")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)], spec=f"cycle:{n}")


def build_torus(side_lengths):
    """Periodic box with the given side lengths (each >= 2).

    Vertex index of coordinates (c_0, .., c_{d-1}) is given by C-order raveling
    (last coordinate fastest), i.e. np.ravel_multi_index(coords, side_lengths).
    Nearest-neighbor edges wrap around; with a side length of 2 the doubled
    edge is deduplicated so the graph stays simple.
    """
    sides = [int(s) for s in side_lengths]
    if not sides:
        raise ValueError("torus needs at least one dimension")
    if any(s < 2 for s in sides):
        raise ValueError("torus side lengths must be >= 2")
    n = int(np.prod(sides))
    edges = set()
    for flat in range(n):
        coords = np.unravel_index(flat, sides)
        for dim in range(len(sides)):
            nb = list(coords)
            nb[dim] = (nb[dim] + 1) % sides[dim]
            other = int(np.ravel_multi_index(nb, sides))
            if other != flat:
                edges.add((min(flat, other), max(flat, other)))
    spec = "torus:" + "x".join(str(s) for s in sides)
    return Graph(n, sorted(edges), spec=spec)


def build_complete(n):
    """Complete graph: all n(n-1)/2 edges."""
    if n < 1:
        raise ValueError("complete graph needs n >= 1")
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)],
                 spec=f"complete:{n}")


def distances_from(g, x):
    """BFS edge-count distances from x; -1 marks unreachable vertices."""
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[x] = 0
    queue = deque([x])
    while queue:
        v = queue.popleft()
        for w in g.adjacency[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def graph_distance(g, x, y):
    """Shortest-path edge count between x and y, or None if unreachable."""
    if not (0 <= x < g.n and 0 <= y < g.n):
        raise ValueError("vertex out of range")
    d = int(distances_from(g, x)[y])
    return None if d < 0 else d


def far_pair(g):
    """(0, y) with y at maximal BFS distance from vertex 0.

    On a torus with even sides this picks the antipodal vertex of the origin.
    """
    dist = distances_from(g, 0)
    return 0, int(np.argmax(dist))


def parse_graph_spec(spec):
    """Build a graph from a CLI spec string.

    Accepted forms: "path:N", "cycle:N", "torus:AxBxC", "complete:N".
    """
    try:
        kind, _, arg = spec.partition(":")
        kind = kind.strip().lower()
        if not arg:
            raise ValueError("missing size argument")
        if kind == "path":
            return build_path(int(arg))
        if kind == "cycle":
            return build_cycle(int(arg))
        if kind == "torus":
            return build_torus([int(s) for s in arg.split("x")])
        if kind == "complete":
            return build_complete(int(arg))
        raise ValueError(f"unknown graph kind {kind!r}")
    except ValueError as exc:
        raise ValueError(f"bad graph spec {spec!r}: {exc}") from None
