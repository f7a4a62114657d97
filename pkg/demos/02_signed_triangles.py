#!/usr/bin/env python3
"""Signed triangles under the null and under geometry.

tau sums (a_ij - p)(a_jk - p)(a_ki - p) over triples.  It has mean zero for
Erdos-Renyi graphs and picks up a positive mean when latent geometry makes
triangles more likely than p^3.
"""
import math

import numpy as np

import lglab

n, p = 64, 0.5
spec = lglab.make_builtin("logistic")

null = np.array([lglab.signed_triangle_statistic(lglab.sample_er(n, p, s), p) for s in range(300)])
print(f"ER:       mean tau {null.mean():8.2f}  sd {null.std():6.2f}  (sd bound n^1.5 = {n**1.5:.0f})")

for d, r in [(2, 1.0), (2, 4.0), (64, 1.0), (4096, 8.0)]:
    params = lglab.calibrate_mu(spec, p, d, r, n=n)
    alt = np.array([lglab.signed_triangle_statistic(lglab.sample_graph(spec, params, s), p) for s in range(300)])
    rep = lglab.bound_report(spec, params) if r >= 1 else None
    print(f"d={d:<5} r={r:<4} mean tau {alt.mean():8.2f}  sd {alt.std():6.2f}"
          f"  E-tau lower bound (larger r) {rep.e_tau_lower_larger:9.2f}  tv_upper {rep.tv_upper:.3f}")

# the two algorithms and the count identity agree
g = lglab.sample_er(40, 0.3, 1)
a, b = lglab.signed_triangles_naive(g, 0.3), lglab.signed_triangles_trace(g, 0.3)
print("naive", a.tau, "trace", b.tau,
      "counts", lglab.tau_from_counts(40, 0.3, g.edge_count(), b.cherry_count, b.triangle_count))

# motif probabilities against the lemma-level bounds at d=2, r=1
params = lglab.calibrate_mu(spec, p, 2, 1.0, n=3)
est = lglab.motif_prob_estimates(spec, params, 10**6, seed=0)
lam = lglab.lambda_value(spec, params)
print(f"P(cherry) {est.p_cherry:.5f} <= {p*p + spec.alpha**2 / 2:.5f};"
      f" P(triangle) - p^3 {est.p_triangle - p**3:.5f} >= {lam**3 / (4 * math.sqrt(2)):.5f}")
