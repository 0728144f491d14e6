import math

import numpy as np
import pytest

from loopsoup import EstimatorResult, build_complete, build_cycle, build_path
from loopsoup.oracle import (OracleSizeError, build_hamiltonian,
                             gibbs_correlation, loop_partition_function,
                             partition_function, susceptibility_curvature,
                             two_site_operator, verify_identities)

from oracles import single_edge_weighted_z, z_truncation_bound

G2 = build_path(2)


@pytest.mark.parametrize("u,expect", [
    (1.0, [-0.5, -0.5, -0.5, 1.5]),
    (-1.0, [-1.5, 0.5, 0.5, 0.5]),
    (0.0, [-1.0, 0.0, 0.0, 1.0]),
])
def test_single_edge_spectra(u, expect):
    h = build_hamiltonian(G2, u)
    assert np.allclose(np.linalg.eigvalsh(h.matrix), expect, atol=1e-12)


def test_hermiticity():
    for g in (G2, build_cycle(4), build_complete(4)):
        for u in (-1.0, -0.3, 0.6, 1.0):
            assert build_hamiltonian(g, u).hermiticity_defect() == 0.0


def test_partition_function_values():
    h = build_hamiltonian(G2, 1.0)
    assert np.isclose(partition_function(h, 1.0),
                      3 * math.exp(0.5) + math.exp(-1.5), rtol=1e-12)
    assert np.isclose(partition_function(h, 0.0), 4.0)
    h4 = build_hamiltonian(build_cycle(4), 0.3)
    assert np.isclose(partition_function(h4, 0.0), 2 ** 4)


def test_loop_partition_function_anchors():
    assert np.isclose(loop_partition_function(G2, 1.0, 1.0),
                      3 + math.exp(-2), rtol=1e-12)
    assert np.isclose(loop_partition_function(G2, -1.0, 1.0),
                      math.e + 3 / math.e, rtol=1e-12)
    assert np.isclose(
        loop_partition_function(G2, 0.0, 1.0),
        math.exp(0.5) + 2 * math.exp(-0.5) + math.exp(-1.5), rtol=1e-12)


@pytest.mark.parametrize("u", (-1.0, -0.5, 0.0, 0.5, 1.0))
@pytest.mark.parametrize("beta", (0.5, 1.0, 2.0))
def test_partition_identity_against_enumeration(u, beta):
    # dual route: quantum trace with the edge shift vs the truncated
    # loop-side ladder enumeration, compared inside the analytic tail bound
    k_max = 14
    enum = single_edge_weighted_z(u, beta, k_max=k_max)
    tol = z_truncation_bound(beta, k_max if abs(u) < 1 else 60) + 1e-10
    assert abs(loop_partition_function(G2, u, beta) - enum) < tol


def test_gibbs_correlation_anchor():
    h = build_hamiltonian(G2, 1.0)
    val = gibbs_correlation(h, 1.0, 0, 1, 3)
    expect = 0.25 * (math.exp(0.5) - math.exp(-1.5)) / \
        (3 * math.exp(0.5) + math.exp(-1.5))
    assert np.isclose(val, expect, rtol=1e-12)
    assert np.isclose(val, 0.068945, atol=1e-6)


def test_correlation_zero_at_beta_zero():
    h = build_hamiltonian(G2, 0.5)
    for axis in (1, 2, 3):
        assert abs(gibbs_correlation(h, 0.0, 0, 1, axis)) < 1e-14


@pytest.mark.parametrize("g", (G2, build_path(3), build_cycle(4)))
@pytest.mark.parametrize("u", (-1.0, -0.5, 0.0, 0.5, 1.0))
def test_axis1_equals_axis3(g, u):
    h = build_hamiltonian(g, u)
    for beta in (0.5, 1.0, 2.0):
        c1 = gibbs_correlation(h, beta, 0, g.n - 1, 1)
        c3 = gibbs_correlation(h, beta, 0, g.n - 1, 3)
        assert abs(c1 - c3) < 1e-12


@pytest.mark.parametrize("g", (G2, build_cycle(4)))
def test_correlation_inequality(g):
    x, y = 0, g.n - 1
    for u in (-1.0, -0.5, 0.0, 0.5, 1.0):
        h = build_hamiltonian(g, u)
        c2 = gibbs_correlation(h, 1.0, x, y, 2)
        c3 = gibbs_correlation(h, 1.0, x, y, 3)
        if abs(u) == 1.0:
            assert abs(abs(c2) - abs(c3)) < 1e-12
        else:
            assert abs(c2) < abs(c3) - 1e-9


def test_two_site_operator_validation():
    with pytest.raises(ValueError):
        two_site_operator(2, 0, 0, 3)
    with pytest.raises(ValueError):
        two_site_operator(2, 0, 1, 4)


def test_susceptibility_curvature_anchor():
    h = build_hamiltonian(G2, 1.0)
    val = susceptibility_curvature(h, G2, 1.0)
    expect = 2 * math.exp(0.5) / (3 * math.exp(0.5) + math.exp(-1.5))
    assert abs(val - expect) < 1e-6
    assert abs(val - 0.63789) < 1e-4


def test_susceptibility_small_beta_limit():
    for g in (G2, build_cycle(4)):
        h = build_hamiltonian(g, 0.0)
        val = susceptibility_curvature(h, g, 1e-6)
        assert abs(val - 1.0 / g.n) < 1e-4


def test_curvature_eta_symmetry():
    # the log-trace is even in eta, so +-eta evaluations agree to rounding
    from loopsoup.oracle import _log_trace_exp, _spin_z_columns
    h = build_hamiltonian(build_cycle(4), -0.5)
    mag = 0.5 * _spin_z_columns(4).sum(axis=1)
    base = -1.3 * h.matrix
    idx = np.arange(base.shape[0])
    for eta in (1e-2, 1e-3):
        plus = base.copy()
        plus[idx, idx] += eta * mag
        minus = base.copy()
        minus[idx, idx] -= eta * mag
        assert abs(_log_trace_exp(plus) - _log_trace_exp(minus)) < 1e-11


def test_size_cap():
    big = build_path(13)
    with pytest.raises(OracleSizeError, match="Monte Carlo"):
        build_hamiltonian(big, 0.0)
    # a tighter explicit cap also triggers
    with pytest.raises(OracleSizeError):
        build_hamiltonian(build_path(5), 0.0, spin_cap=4)


def _mc_pack(graph, u, beta, z_mean, z_err, sl_mean, sl_err):
    base = {"graph": graph.spec, "u": u, "beta": beta}
    return {
        "partition_weight": EstimatorResult("partition_weight", z_mean,
                                            z_err, 1000, dict(base)),
        "same_loop": EstimatorResult("same_loop", sl_mean, sl_err, 1000,
                                     dict(base, x=0, y=1)),
    }


def test_verify_identities_pass_and_fail():
    z = loop_partition_function(G2, 1.0, 1.0)
    sl = 4 * gibbs_correlation(build_hamiltonian(G2, 1.0), 1.0, 0, 1, 3)
    good = verify_identities(G2, 1.0, 1.0,
                             _mc_pack(G2, 1.0, 1.0, z + 0.001, 0.01,
                                      sl - 0.002, 0.01))
    assert good["all_passed"]
    assert len(good["rows"]) == 2
    corrupted = verify_identities(G2, 1.0, 1.0,
                                  _mc_pack(G2, 1.0, 1.0, z + 1.0, 0.01,
                                           sl, 0.01))
    assert not corrupted["all_passed"]
    assert not corrupted["rows"][0]["passed"]


def test_verify_identities_param_mismatch():
    pack = _mc_pack(G2, 0.5, 1.0, 3.0, 0.01, 0.2, 0.01)
    with pytest.raises(ValueError, match="oracle asked"):
        verify_identities(G2, 1.0, 1.0, pack)
