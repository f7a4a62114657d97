import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lglab.calibrate import calibrate_mu
from lglab.connection import make_builtin
from lglab.sampler import GraphSample, sample_er
from lglab.tristat import (motif_prob_estimates, signed_triangles_naive, signed_triangles_trace,
                           tau_from_counts)


def brute_force(g, p):
    a = g.to_dense(dtype=np.int64)
    tau = 0.0
    tri = cher = 0
    for i, j, k in itertools.combinations(range(g.n), 3):
        tau += (a[i, j] - p) * (a[j, k] - p) * (a[k, i] - p)
        tri += a[i, j] * a[j, k] * a[k, i]
        cher += a[i, j] * a[j, k] + a[j, k] * a[k, i] + a[k, i] * a[i, j]
    return tau, tri, cher


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 12), p=st.sampled_from([0.2, 0.5, 0.8]), seed=st.integers(0, 2**32))
def test_three_methods_agree(n, p, seed):
    g = sample_er(n, p, seed) if n else GraphSample.from_upper(0, [])
    tau, tri, cher = brute_force(g, p)
    naive = signed_triangles_naive(g, p)
    trace = signed_triangles_trace(g, p)
    assert naive.triangle_count == trace.triangle_count == tri
    assert naive.cherry_count == trace.cherry_count == cher
    assert naive.tau == pytest.approx(tau, abs=1e-9)
    assert trace.tau == pytest.approx(tau, abs=1e-9)
    assert tau_from_counts(n, p, g.edge_count(), cher, tri) == pytest.approx(tau, abs=1e-9)


@pytest.mark.parametrize("n", [3, 10, 25])
@pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
def test_complete_and_empty(n, p):
    c = math.comb(n, 3)
    full = GraphSample.from_upper(n, np.ones(n * (n - 1) // 2, bool))
    empty = GraphSample.from_upper(n, np.zeros(n * (n - 1) // 2, bool))
    assert signed_triangles_trace(full, p).tau == pytest.approx(c * (1 - p) ** 3, rel=1e-12)
    assert signed_triangles_trace(empty, p).tau == pytest.approx(-c * p**3, rel=1e-12)
    assert signed_triangles_trace(full, p).triangle_count == c
    assert signed_triangles_trace(full, p).cherry_count == 3 * c


def test_small_n_zero():
    for n in (1, 2):
        g = GraphSample.from_upper(n, np.ones(n * (n - 1) // 2, bool))
        assert signed_triangles_trace(g, 0.5).tau == 0.0
        assert signed_triangles_naive(g, 0.5).tau == 0.0


def test_bad_p():
    with pytest.raises(ValueError):
        signed_triangles_trace(sample_er(5, 0.5, 0), 1.0)


def test_motif_estimates_large_r_limit():
    spec = make_builtin("logistic")
    params = calibrate_mu(spec, 0.4, 3, 1e4, n=3)
    est = motif_prob_estimates(spec, params, 20_000, seed=1)
    assert est.p_cherry == pytest.approx(0.16, abs=1e-4)
    assert est.p_triangle == pytest.approx(0.064, abs=1e-4)


def test_motif_estimates_against_raw_monte_carlo():
    spec = make_builtin("logistic")
    params = calibrate_mu(spec, 0.5, 2, 1.0, n=3)
    est = motif_prob_estimates(spec, params, 50_000, seed=2)
    # Bernoulli triples, independent of the Rao-Blackwellized stream
    rng = np.random.default_rng(99)
    m = 200_000
    x = rng.standard_normal((3, m, 2))
    e = [rng.random(m) < spec.cdf((np.einsum("ij,ij->i", x[a], x[b]) - params.mu) / params.scale)
         for a, b in ((0, 1), (1, 2), (2, 0))]
    tri = (e[0] & e[1] & e[2]).mean()
    se = math.hypot(math.sqrt(tri * (1 - tri) / m), est.se_triangle)
    assert abs(tri - est.p_triangle) <= 4 * se
    with pytest.raises(ValueError):
        motif_prob_estimates(spec, params, 10, seed=0)
