"""Edge-density calibration and one-dimensional expectations over W = <x, y>.

For independent x, y ~ N(0, I_d), conditioning on S = |x|^2 makes
W | S ~ N(0, S) exactly, with S ~ chi-square(d).  Expectations
E[g((W - mu) / (r sqrt(d)))] are therefore computed by a generalized
Gauss-Laguerre rule in S nested around a Gauss-Hermite rule in the
standardized W, with both node counts doubled until two successive levels
agree to ``abs_tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import optimize

from .connection import ConnectionSpec
from .errors import BracketFailure, NonConvergence, QuadratureNotConverged
from .quadrature import chi_square_rule, gauss_hermite
from .seeding import SeedContext, as_seed


@dataclass(frozen=True)
class QuadratureConfig:
    outer_nodes: int = 64
    inner_nodes: int = 128
    mc_fallback_samples: int = 1_000_000
    abs_tol: float = 1e-9
    max_outer_nodes: int = 1024
    max_inner_nodes: int = 8192

    def __post_init__(self):
        if self.outer_nodes < 8 or self.inner_nodes < 8:
            raise ValueError("node counts must be >= 8")
        if not 0.0 < self.abs_tol <= 1e-3:
            raise ValueError("abs_tol must lie in (0, 1e-3]")
        if self.mc_fallback_samples < 1:
            raise ValueError("mc_fallback_samples must be positive")


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass(frozen=True)
class ModelParams:
    n: int
    p: float
    d: int
    r: float
    mu: float
    calib_residual: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not self.r > 0:
            raise ValueError("r must be positive")

    @property
    def scale(self) -> float:
        """r * sqrt(d), the standard deviation of the edge-threshold law."""
        return self.r * math.sqrt(self.d)

    def with_n(self, n: int) -> "ModelParams":
        return replace(self, n=int(n))


def _check_dr(d: int, r: float) -> None:
    if d < 1:
        raise ValueError("d must be >= 1")
    if not r > 0:
        raise ValueError("r must be positive")


def _expect_fixed(g: Callable, mu: float, d: int, scale: float, n_outer: int, n_inner: int) -> float:
    s, w_out = chi_square_rule(n_outer, d)
    z, w_in = gauss_hermite(n_inner)
    rho = np.sqrt(s)
    total = 0.0
    # chunk over outer nodes to bound the temporary at 1024 x 8192
    step = max(1, 2_000_000 // n_inner)
    for i in range(0, n_outer, step):
        v = (rho[i:i + step, None] * z[None, :] - mu) / scale
        total += float(w_out[i:i + step] @ (g(v) @ w_in))
    return total


@dataclass(frozen=True)
class _Level:
    outer: int
    inner: int

    def refine(self) -> "_Level":
        return _Level(2 * self.outer, 2 * self.inner)


def _converged_level(g: Callable, mu: float, d: int, scale: float, q: QuadratureConfig) -> tuple[float, _Level, float]:
    """Double node counts until two consecutive levels agree within ``abs_tol``."""
    level = _Level(q.outer_nodes, q.inner_nodes)
    value = _expect_fixed(g, mu, d, scale, level.outer, level.inner)
    while True:
        finer = level.refine()
        if finer.outer > q.max_outer_nodes or finer.inner > q.max_inner_nodes:
            raise QuadratureNotConverged(
                f"quadrature did not reach abs_tol={q.abs_tol:g} by {level.outer}x{level.inner} nodes "
                f"(d={d}, scale={scale:g}, mu={mu:g})")
        fine_value = _expect_fixed(g, mu, d, scale, finer.outer, finer.inner)
        diff = abs(fine_value - value)
        if diff <= q.abs_tol:
            return fine_value, finer, diff
        level, value = finer, fine_value


def expect_over_inner_product(g: Callable, mu: float, d: int, r: float,
                              q: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """E[g((W - mu) / (r sqrt(d)))] for W the inner product of two N(0, I_d) vectors."""
    _check_dr(d, r)
    value, _, _ = _converged_level(g, float(mu), int(d), r * math.sqrt(d), q)
    return value


def _mc_inner_products(d: int, m: int, seed: SeedContext) -> np.ndarray:
    # exact draws of W via W | S ~ N(0, S); shared across mu values (common random numbers)
    rng = seed.child("calibration_crn").generator()
    s = rng.chisquare(d, size=m)
    return np.sqrt(s) * rng.standard_normal(m)


def edge_density(spec: ConnectionSpec, mu: float, d: int, r: float,
                 q: QuadratureConfig = DEFAULT_QUADRATURE, *, seed=None) -> float:
    """Marginal edge probability E[F((W - mu) / (r sqrt(d)))].

    Smooth families use nested quadrature; tabulated families fall back to a
    common-random-number Monte Carlo average keyed by ``seed``.
    """
    _check_dr(d, r)
    if not spec.smooth:
        w = _mc_inner_products(d, q.mc_fallback_samples, as_seed(seed))
        return float(np.mean(spec.cdf((w - mu) / (r * math.sqrt(d)))))
    return expect_over_inner_product(spec.cdf_eval, mu, d, r, q)


def _bracket(spec: ConnectionSpec, p: float, scale: float) -> tuple[float, float]:
    lo_q = abs(float(spec.quantile(p))) if spec.has_quantile else 40.0
    hi_q = abs(float(spec.quantile(1.0 - p))) if spec.has_quantile else 40.0
    return -10.0 * scale * lo_q - 10.0, 10.0 * scale * hi_q + 10.0


def calibrate_mu(spec: ConnectionSpec, p: float, d: int, r: float,
                 q: QuadratureConfig = DEFAULT_QUADRATURE, *, n: int = 1, seed=None,
                 max_iter: int = 200) -> ModelParams:
    """Solve edge_density(mu) = p for the location ``mu``.

    The density is strictly decreasing in ``mu``, so Brent's method on the
    fixed bracket finds the unique root; acceptance is on the function value.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    _check_dr(d, r)
    scale = r * math.sqrt(d)
    lo, hi = _bracket(spec, p, scale)

    if not spec.smooth:
        w = _mc_inner_products(d, q.mc_fallback_samples, as_seed(seed))

        def density(mu):
            return float(np.mean(spec.cdf((w - mu) / scale)))
    else:
        # pick node counts once, at the normal-approximation guess, then hold them fixed
        guess = 0.0
        if spec.has_quantile:
            guess = -math.sqrt(d + scale * scale) * float(spec.quantile(p))
            guess = min(max(guess, lo), hi)
        _, level, _ = _converged_level(spec.cdf_eval, guess, d, scale, q)

        def density(mu):
            return _expect_fixed(spec.cdf_eval, mu, d, scale, level.outer, level.inner)

    f_lo, f_hi = density(lo) - p, density(hi) - p
    if not (f_lo > 0 > f_hi):
        raise BracketFailure(f"no sign change for mu in [{lo:g}, {hi:g}] (p={p}, d={d}, r={r})")
    try:
        mu = optimize.brentq(lambda m: density(m) - p, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                             maxiter=max_iter)
    except RuntimeError as exc:
        raise NonConvergence(str(exc)) from exc

    if spec.smooth:
        # Richardson check at the root; refines the node counts if the guess point was easier
        value = expect_over_inner_product(spec.cdf_eval, mu, d, r, q)
        residual = abs(value - p)
        if residual > q.abs_tol:
            _, level, _ = _converged_level(spec.cdf_eval, mu, d, scale, q)
            mu = optimize.brentq(lambda m: _expect_fixed(spec.cdf_eval, m, d, scale, level.outer, level.inner) - p,
                                 lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
            residual = abs(_expect_fixed(spec.cdf_eval, mu, d, scale, level.outer, level.inner) - p)
    else:
        residual = abs(density(mu) - p)
    if residual > q.abs_tol:
        raise NonConvergence(f"calibration residual {residual:.3g} exceeds abs_tol={q.abs_tol:g}")
    return ModelParams(n=int(n), p=float(p), d=int(d), r=float(r), mu=float(mu), calib_residual=float(residual))


def lambda_value(spec: ConnectionSpec, params: ModelParams,
                 q: QuadratureConfig = DEFAULT_QUADRATURE, *, seed=None) -> float:
    """E[f((W - mu) / (r sqrt(d)))], the mean density along the inner-product law."""
    if not spec.smooth:
        w = _mc_inner_products(params.d, q.mc_fallback_samples, as_seed(seed))
        return float(np.mean(spec.pdf((w - params.mu) / params.scale)))
    return expect_over_inner_product(spec.pdf_eval, params.mu, params.d, params.r, q)
