"""Dense exact diagonalization of the interpolating spin-1/2 Hamiltonian
family on small graphs, used as ground truth for the loop estimators.

The Hamiltonian couples every edge through -2(S1 S1 + u S2 S2 + S3 S3).  In
the computational basis all exposed operators have real matrix elements (the
axis-2 operators only appear in pairs), so everything here is real symmetric.
The loop-model normalization equals exp(-beta |E| / 2) times the quantum
partition function; this shifted convention is verified, not assumed, by the
test suite (the closed forms on a single edge fix it uniquely).
"""

from dataclasses import dataclass, field

import numpy as np

from .observables import check_sandwich

__all__ = [
    "SpinOperator",
    "OracleSizeError",
    "build_hamiltonian",
    "two_site_operator",
    "partition_function",
    "loop_partition_function",
    "gibbs_correlation",
    "susceptibility_curvature",
    "verify_identities",
    "DEFAULT_SPIN_CAP",
]

DEFAULT_SPIN_CAP = 12


class OracleSizeError(ValueError):
    pass


@dataclass
class SpinOperator:
    """Dense Hermitian operator on n_sites spins with a lazy eigendecomposition."""

    matrix: np.ndarray
    label: str
    n_sites: int
    _eig: tuple = field(default=None, repr=False, compare=False)

    def eig(self):
        if self._eig is None:
            w, v = np.linalg.eigh(self.matrix)
            self._eig = (w, v)
        return self._eig

    def hermiticity_defect(self):
        return float(np.max(np.abs(self.matrix - self.matrix.T.conj())))


def _spin_z_columns(n):
    """(2^n, n) array of the z-spin signs; bit 0 of the basis index is site 0,
    bit value 0 means spin up (z = +1)."""
    states = np.arange(1 << n, dtype=np.int64)
    bits = (states[:, None] >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.float64)


def build_hamiltonian(graph, u, spin_cap=DEFAULT_SPIN_CAP):
    """Dense Hamiltonian -2 sum_edges (S1 S1 + u S2 S2 + S3 S3).

    In the computational basis: diagonal -(1/2) sum z_a z_b, and for each edge
    an off-diagonal element -(1/2)(1 - u z_a z_b) connecting the two states
    with both edge spins flipped.  Real symmetric for every u.
    """
    if not -1.0 <= u <= 1.0:
        raise ValueError(f"u={u} outside [-1, 1]")
    n = graph.n
    if n > spin_cap:
        raise OracleSizeError(
            f"{n} spins exceeds the diagonalization cap {spin_cap}; "
            "run this system in Monte Carlo-only mode")
    dim = 1 << n
    z = _spin_z_columns(n)
    states = np.arange(dim)
    h = np.zeros((dim, dim))
    diag = np.zeros(dim)
    for a, b in graph.edges:
        zz = z[:, a] * z[:, b]
        diag += -0.5 * zz
        flipped = states ^ ((1 << int(a)) | (1 << int(b)))
        h[flipped, states] += -0.5 * (1.0 - u * zz)
    h[states, states] = diag
    return SpinOperator(h, f"H(u={u}) on {graph.spec}", n)


def two_site_operator(n, x, y, axis):
    """Product of the axis-a spin-1/2 operators at sites x and y (real)."""
    if axis not in (1, 2, 3):
        raise ValueError("axis must be 1, 2 or 3")
    if x == y:
        raise ValueError("needs two distinct sites")
    dim = 1 << n
    z = _spin_z_columns(n)
    states = np.arange(dim)
    mat = np.zeros((dim, dim))
    zz = z[:, x] * z[:, y]
    if axis == 3:
        mat[states, states] = 0.25 * zz
    else:
        flipped = states ^ ((1 << int(x)) | (1 << int(y)))
        coeff = 0.25 * np.ones(dim) if axis == 1 else -0.25 * zz
        mat[flipped, states] = coeff
    return SpinOperator(mat, f"S{axis}_{x} S{axis}_{y}", n)


def partition_function(h_op, beta):
    """Trace of exp(-beta H) from the spectrum."""
    w, _ = h_op.eig()
    w0 = w.min()
    return float(np.exp(-beta * w0) * np.sum(np.exp(-beta * (w - w0))))


def loop_partition_function(graph, u, beta, spin_cap=DEFAULT_SPIN_CAP):
    """Loop-model normalization: exp(-beta |E| / 2) * Tr exp(-beta H)."""
    h_op = build_hamiltonian(graph, u, spin_cap)
    return float(np.exp(-beta * graph.n_edges / 2.0)
                 * partition_function(h_op, beta))


def gibbs_correlation(h_op, beta, x, y, axis):
    """Thermal expectation of the axis-a two-site spin product, exactly."""
    w, v = h_op.eig()
    a_op = two_site_operator(h_op.n_sites, x, y, axis)
    w0 = w.min()
    boltz = np.exp(-beta * (w - w0))
    diag = np.einsum("si,si->i", v, a_op.matrix @ v)
    return float(np.sum(boltz * diag) / np.sum(boltz))


def _log_trace_exp(matrix):
    w = np.linalg.eigvalsh(matrix)
    w0 = w.max()
    return float(w0 + np.log(np.sum(np.exp(w - w0))))


def susceptibility_curvature(h_op, graph, beta, steps=(1e-2, 1e-3)):
    """(4/n^2) d^2/d eta^2 of log Tr exp(-beta H + eta sum_x S3_x) at eta=0.

    Central finite differences at the two step sizes, Richardson-extrapolated
    (the error is even in eta, so one elimination removes the leading term).
    """
    n = h_op.n_sites
    z = _spin_z_columns(n)
    mag = 0.5 * z.sum(axis=1)
    base = -beta * h_op.matrix

    def log_z(eta):
        m = base.copy()
        idx = np.arange(m.shape[0])
        m[idx, idx] += eta * mag
        return _log_trace_exp(m)

    f0 = log_z(0.0)
    h1, h2 = steps
    d1 = (log_z(h1) - 2.0 * f0 + log_z(-h1)) / h1 ** 2
    d2 = (log_z(h2) - 2.0 * f0 + log_z(-h2)) / h2 ** 2
    ratio = (h1 / h2) ** 2
    extrapolated = (ratio * d2 - d1) / (ratio - 1.0)
    if abs(d1 - d2) > 1e-2 * (abs(d2) + 1.0):
        raise RuntimeError(
            "susceptibility curvature extrapolation did not converge: "
            f"d({h1})={d1}, d({h2})={d2}")
    return float(4.0 / n ** 2 * extrapolated)


def _check_params(result, graph, u, beta):
    p = result.params
    for key, want in (("graph", graph.spec), ("u", u), ("beta", beta)):
        if key in p and p[key] != want:
            raise ValueError(
                f"estimate {result.name!r} was computed at {key}={p[key]}, "
                f"oracle asked for {want}")


def verify_identities(graph, u, beta, mc_results, n_sigma=3.0,
                      spin_cap=DEFAULT_SPIN_CAP):
    """Side-by-side comparison of Monte Carlo estimates with exact values.

    `mc_results` maps estimator names to EstimatorResults:
      partition_weight -> loop normalization (shifted convention),
      same_loop        -> 4 * axis-3 correlation at the pair in its params,
      direction        -> 4 * axis-2 correlation,
      origin_fraction  -> susceptibility curvature,
      spatial_sum      -> used with origin_fraction for the two-sided bound.
    Returns a report dict with one pass/fail row per identity.
    """
    h_op = build_hamiltonian(graph, u, spin_cap)
    rows = []

    def add_row(name, mc, oracle_value):
        _check_params(mc, graph, u, beta)
        if mc.stderr and mc.stderr > 0:
            sigmas = abs(mc.mean - oracle_value) / mc.stderr
        else:
            sigmas = 0.0 if mc.mean == oracle_value else np.inf
        rows.append({
            "identity": name,
            "mc_mean": mc.mean,
            "mc_stderr": mc.stderr,
            "oracle": oracle_value,
            "n_sigma": float(sigmas),
            "passed": bool(sigmas <= n_sigma),
        })

    if "partition_weight" in mc_results:
        add_row("partition_weight == exp(-beta|E|/2) Tr exp(-beta H)",
                mc_results["partition_weight"],
                loop_partition_function(graph, u, beta, spin_cap))
    if "same_loop" in mc_results:
        mc = mc_results["same_loop"]
        x, y = mc.params["x"], mc.params["y"]
        add_row(f"P(same loop {x},{y}) == 4 <S3 S3>",
                mc, 4.0 * gibbs_correlation(h_op, beta, x, y, 3))
    if "direction" in mc_results:
        mc = mc_results["direction"]
        x, y = mc.params["x"], mc.params["y"]
        add_row(f"P(E+) - P(E-) at ({x},{y}) == 4 <S2 S2>",
                mc, 4.0 * gibbs_correlation(h_op, beta, x, y, 2))
    if "origin_fraction" in mc_results:
        add_row("origin loop fraction == susceptibility curvature",
                mc_results["origin_fraction"],
                susceptibility_curvature(h_op, graph, beta))
    if "spatial_sum" in mc_results and "origin_fraction" in mc_results:
        _check_params(mc_results["spatial_sum"], graph, u, beta)
        sandwich = check_sandwich(mc_results["spatial_sum"],
                                  mc_results["origin_fraction"],
                                  u, graph.n, graph.max_degree,
                                  n_sigma=n_sigma)
        rows.append({
            "identity": "correlation-sum sandwich",
            "mc_mean": sandwich["origin_fraction"],
            "mc_stderr": sandwich["pooled_sigma"],
            "oracle": (sandwich["lower_bound"], sandwich["upper_bound"]),
            "n_sigma": 0.0,
            "passed": sandwich["passed"],
        })
    return {
        "graph": graph.spec,
        "u": u,
        "beta": beta,
        "rows": rows,
        "all_passed": all(r["passed"] for r in rows),
    }
