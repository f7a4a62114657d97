#!/usr/bin/env python3
"""Calibrate the location mu, draw a latent Gaussian graph and save it.

The connection function is sigma(t) = F((t - mu) / (r sqrt(d))).  For a
symmetric F and p = 1/2 the calibrated mu is zero; away from 1/2 it moves
with p and shrinks relative to r sqrt(d) as r grows.
"""
import numpy as np

import lglab

logistic = lglab.make_builtin("logistic")
print(lglab.validate_assumptions(logistic).passed)  # True: monotone, bounded f', unit variance

# mu for a few (p, d, r); lambda is the mean density along the inner-product law
for p, d, r in [(0.5, 16, 2.0), (0.2, 2, 1.0), (0.2, 2, 10.0), (0.8, 500, 0.5)]:
    params = lglab.calibrate_mu(logistic, p, d, r)
    lam = lglab.lambda_value(logistic, params)
    print(f"p={p:<4} d={d:<4} r={r:<5} mu={params.mu:+.6f}  lambda={lam:.5f}  residual={params.calib_residual:.1e}")

# one graph per mechanism from the same latent stream
params = lglab.calibrate_mu(logistic, 0.3, 3, 1.0, n=200)
for mech in ("uniform", "threshold"):
    g = lglab.sample_graph(logistic, params, seed=42, mechanism=mech)
    print(mech, "density", round(g.density(), 4))

g = lglab.sample_graph(logistic, params, seed=42)
lglab.write_graph(g, "demo_graph.bin")
assert lglab.read_graph("demo_graph.bin") == g

# a tabulated family: any monotone table of a zero-mean unit-variance CDF
x = np.linspace(-8, 8, 401)
table = lglab.from_table(x, lglab.make_builtin("gaussian").cdf(x), alpha=lglab.make_builtin("gaussian").alpha)
q = lglab.QuadratureConfig(mc_fallback_samples=200_000)
print("table mu", lglab.calibrate_mu(table, 0.3, 3, 1.0, q, seed=0).mu,
      "vs gaussian", lglab.calibrate_mu(lglab.make_builtin("gaussian"), 0.3, 3, 1.0).mu)
