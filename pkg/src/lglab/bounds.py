"""Closed-form divergence and moment bounds, and empirical checks of the
concentration inequalities they rest on.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .calibrate import DEFAULT_QUADRATURE, ModelParams, QuadratureConfig, lambda_value
from .connection import ConnectionSpec
from .errors import CholeskyFailure, DomainError, GridError, RegimeError
from .quadrature import gauss_hermite
from .seeding import SeedContext, as_seed

SQRT34 = math.sqrt(34.0)


class ConstantMode(str, enum.Enum):
    PAPER = "paper"  # cubic-term constant 68/3
    CONSERVATIVE = "conservative"  # 136/3, from summing 136 k^2 over k < n


_CUBIC_CONSTANT = {ConstantMode.PAPER: 68.0 / 3.0, ConstantMode.CONSERVATIVE: 136.0 / 3.0}


def _r4(r: float) -> float:
    r2 = r * r
    return r2 * r2


@dataclass(frozen=True)
class KLBound:
    kl_upper: float
    kl_valid: bool
    tv_upper: float
    constant_mode: ConstantMode


def kl_tv_upper(params: ModelParams, alpha: float,
                constant_mode: ConstantMode | str = ConstantMode.PAPER) -> KLBound:
    """KL(G(n,p,d,r) || G(n,p)) upper bound and the Pinsker TV bound.

    ``kl_valid`` records whether r^2 d / n >= sqrt(34) alpha / (p(1-p)), the
    condition under which the sub-exponential step holds for every k <= n.
    """
    mode = ConstantMode(constant_mode)
    if params.r < 1:
        raise RegimeError(f"KL bound is only established for r >= 1 (got r={params.r})")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    n, p, d, r = params.n, params.p, params.d, params.r
    pq = p * (1.0 - p)
    r4d = _r4(r) * d
    if n <= 1:
        # every per-vertex term of the chain-rule sum carries a factor k = 0
        kl = 0.0
    else:
        a2 = alpha * alpha
        kl = a2 / (2.0 * pq) * (n * n) / r4d + _CUBIC_CONSTANT[mode] * a2 / (pq * pq) * float(n) ** 3 / r4d
    valid = (r * r * d) / n >= SQRT34 * alpha / pq
    tv = min(1.0, math.sqrt(kl / 2.0))
    return KLBound(kl, bool(valid), tv, mode)


@dataclass(frozen=True)
class TauBounds:
    e_tau_lower_larger: float
    e_tau_lower_highd: float
    var_tau_upper: float
    larger_regime: str = "r / log^2 r >> d^(1/6)"
    highd_regime: str = "d / log^2 d >> r^6"


def e_tau_var_tau_bounds(params: ModelParams, alpha: float, lam: float) -> TauBounds:
    """Explicit lower bounds on E[tau] and an upper bound on Var[tau].

    All constants are explicit; no unspecified asymptotic constant enters.
    Each lower bound only holds in its regime, recorded on the result.
    """
    if not 0.0 < lam <= 2.0 * math.sqrt(alpha) * (1 + 1e-12):
        raise ValueError("lambda must lie in (0, 2 sqrt(alpha)]")
    n, p, d, r = params.n, params.p, params.d, params.r
    c3 = math.comb(n, 3)
    sqd = math.sqrt(d)
    r3 = r * r * r
    a2 = alpha * alpha
    lam3 = lam**3
    larger = c3 * lam3 / (2.0 * r3 * sqd)
    highd = c3 * (lam3 / (4.0 * r3 * sqd) - 3.0 * p * a2 / (_r4(r) * d))
    c_alpha = 68.0 * a2 + a2 * a2
    var = float(n) ** 3 + (math.comb(n, 4) * 6 + math.comb(n, 5) * 30) * c_alpha / (_r4(r) * d)
    return TauBounds(larger, highd, var)


def chebyshev_tv_lower(delta_mean: float, var_null: float, var_alt: float) -> float:
    """TV lower bound from a midpoint-threshold test and Chebyshev on each side.

    With threshold halfway between the means, each error probability is at
    most 4 V / delta^2, giving TV >= 1 - 4 (V0 + V1) / delta^2.
    """
    if not delta_mean > 0:
        raise DomainError("delta_mean must be positive")
    if var_null < 0 or var_alt < 0:
        raise ValueError("variances must be nonnegative")
    if math.isinf(delta_mean):
        return 1.0
    return min(1.0, max(0.0, 1.0 - 4.0 * (var_null + var_alt) / (delta_mean * delta_mean)))


@dataclass(frozen=True)
class BoundReport:
    kl_upper: float
    kl_valid: bool
    tv_upper: float
    e_tau_lower_larger: float
    e_tau_lower_highd: float
    var_tau_upper: float
    tv_lower_chebyshev: float
    lam: float
    alpha: float
    constant_mode: str

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def bound_report(spec: ConnectionSpec, params: ModelParams,
                 constant_mode: ConstantMode | str = ConstantMode.PAPER,
                 q: QuadratureConfig = DEFAULT_QUADRATURE, lam: float | None = None) -> BoundReport:
    """All closed-form bounds for one calibrated configuration.

    The Chebyshev lower bound plugs in the high-dimension mean bound and
    ``var_tau_upper`` for both hypotheses; it is 0 where that mean bound is
    not positive.
    """
    if lam is None:
        lam = lambda_value(spec, params, q)
    kl = kl_tv_upper(params, spec.alpha, constant_mode)
    tb = e_tau_var_tau_bounds(params, spec.alpha, lam)
    if tb.e_tau_lower_highd > 0:
        tv_lo = chebyshev_tv_lower(tb.e_tau_lower_highd, tb.var_tau_upper, tb.var_tau_upper)
    else:
        tv_lo = 0.0
    return BoundReport(kl.kl_upper, kl.kl_valid, kl.tv_upper, tb.e_tau_lower_larger,
                       tb.e_tau_lower_highd, tb.var_tau_upper, tv_lo, float(lam),
                       float(spec.alpha), ConstantMode(constant_mode).value)


# --- gamma(x, y) -------------------------------------------------------------

@dataclass(frozen=True)
class GammaEstimate:
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    reps_outer: int
    inner_scheme: str
    values: np.ndarray = field(repr=False, default=None)


def _jackknife_variance_se(v: np.ndarray) -> float:
    """Jackknife standard error of the unbiased sample variance (closed form)."""
    m = v.size
    s1 = v.sum()
    s2 = (v * v).sum()
    # leave-one-out variances
    s1_i = s1 - v
    s2_i = s2 - v * v
    var_i = (s2_i - s1_i**2 / (m - 1)) / (m - 2)
    mean_var = var_i.mean()
    return float(math.sqrt((m - 1) / m * np.sum((var_i - mean_var) ** 2)))


def gamma_values(spec: ConnectionSpec, params: ModelParams, x: np.ndarray, y: np.ndarray,
                 inner_nodes: int = 64) -> np.ndarray:
    """gamma(x, y) = E_z[(sigma(<x,z>) - p)(sigma(<y,z>) - p)] for rows of x and y.

    Given x and y, (<x,z>, <y,z>) is bivariate normal with covariance
    [[|x|^2, <x,y>], [<x,y>, |y|^2]]; the expectation is a tensor
    Gauss-Hermite sum after a Cholesky factorization of that matrix.
    """
    z, w = gauss_hermite(inner_nodes)
    sxx = np.einsum("ij,ij->i", x, x)
    syy = np.einsum("ij,ij->i", y, y)
    sxy = np.einsum("ij,ij->i", x, y)
    l11 = np.sqrt(sxx)
    l21 = sxy / l11
    rem = syy - l21 * l21
    bad = ~(rem > 1e-12 * (sxx + syy))
    if bad.any():
        warnings.warn(f"{int(bad.sum())} near-singular 2x2 covariances regularized by 1e-12*trace",
                      RuntimeWarning, stacklevel=2)
        rem = np.where(bad, np.maximum(rem, 0.0) + 1e-12 * (sxx + syy), rem)
    if np.any(~(rem > 0)):
        raise CholeskyFailure("2x2 covariance is not positive definite after regularization")
    l22 = np.sqrt(rem)
    p, mu, s = params.p, params.mu, params.scale
    u1 = spec.cdf((l11[:, None] * z[None, :] - mu) / s) - p
    out = np.zeros(x.shape[0])
    for a in range(len(z)):
        u2 = spec.cdf(((l21 * z[a])[:, None] + l22[:, None] * z[None, :] - mu) / s) - p
        out += w[a] * u1[:, a] * (u2 @ w)
    return out


def gamma_moments(spec: ConnectionSpec, params: ModelParams, reps_outer: int = 10_000,
                  inner_nodes: int = 64, seed: SeedContext | int | None = 0,
                  same_point: bool = False, chunk: int = 4096) -> GammaEstimate:
    """Mean and variance of gamma(x, y) over independent Gaussian pairs.

    ``same_point`` evaluates gamma(x, x) instead, a diagnostic whose values
    are second moments and must be nonnegative.
    """
    if reps_outer < 1000:
        raise ValueError("reps_outer must be >= 1000")
    if inner_nodes < 16:
        raise ValueError("inner_nodes must be >= 16")
    seed = as_seed(seed).child("gamma")
    vals = np.empty(reps_outer)
    for b, start in enumerate(range(0, reps_outer, chunk)):
        m = min(chunk, reps_outer - start)
        rng = seed.child("block", b).generator()
        x = rng.standard_normal((m, params.d))
        y = x.copy() if same_point else rng.standard_normal((m, params.d))
        vals[start:start + m] = gamma_values(spec, params, x, y, inner_nodes)
    mean = float(vals.mean())
    var = float(vals.var(ddof=1))
    mean_se = float(vals.std(ddof=1) / math.sqrt(reps_outer))
    return GammaEstimate(mean, mean_se, var, _jackknife_variance_se(vals), reps_outer,
                         f"cholesky + {inner_nodes}x{inner_nodes} gauss-hermite", vals)


# --- tail checks ---------------------------------------------------------------

class Lemma(str, enum.Enum):
    INNER_GAUSS = "inner"
    SPHERE_INNER = "sphere"
    GAMMA_SUBEXP = "gamma"
    LINEAR_REMAINDER = "linear"


@dataclass(frozen=True)
class TailCheckReport:
    lemma_id: Lemma
    t_grid: tuple[float, ...]
    empirical_tail: tuple[float, ...]
    se: tuple[float, ...]
    theoretical_bound: tuple[float, ...]
    violations: tuple[tuple[float, float], ...]

    def rows(self):
        flagged = {t for t, _ in self.violations}
        for t, e, s, b in zip(self.t_grid, self.empirical_tail, self.se, self.theoretical_bound):
            yield t, e, s, b, t in flagged


def subexp_tail(t, a: float, b: float):
    """exp(-min(t^2/a^2, t/b) / 2), the upper tail of a sub-exponential (a, b) variable."""
    t = np.asarray(t, dtype=float)
    return np.exp(-0.5 * np.minimum(t * t / (a * a), t / b))


def _tail_freq(samples: np.ndarray, thresholds) -> tuple[np.ndarray, np.ndarray]:
    m = samples.size
    ordered = np.sort(samples)
    counts = m - np.searchsorted(ordered, np.asarray(thresholds, dtype=float), side="left")
    freq = counts / m
    se = np.sqrt(np.maximum(freq * (1 - freq), 0.0) / m)
    return freq, se


def _chunked_inner(d: int, reps: int, seed: SeedContext, normalize: bool) -> np.ndarray:
    out = np.empty(reps)
    step = max(1, 4_000_000 // (2 * d))
    for b, start in enumerate(range(0, reps, step)):
        m = min(step, reps - start)
        rng = seed.child("block", b).generator()
        x = rng.standard_normal((m, d))
        y = rng.standard_normal((m, d))
        if normalize:
            x /= np.linalg.norm(x, axis=1, keepdims=True)
            y /= np.linalg.norm(y, axis=1, keepdims=True)
        out[start:start + m] = np.einsum("ij,ij->i", x, y)
    return out


def tail_check(lemma_id: Lemma | str, t_grid, reps: int, seed: SeedContext | int | None = 0, *,
               d: int | None = None, spec: ConnectionSpec | None = None,
               params: ModelParams | None = None, q: QuadratureConfig = DEFAULT_QUADRATURE,
               gamma_inner_nodes: int = 48) -> TailCheckReport:
    """Empirical tail frequencies against a proven bound.

    inner   P(<x,y> >= t) vs the sub-exponential (sqrt(2d), sqrt(2)) tail; t >= 0.
    sphere  P(|<u,v>| >= t/sqrt(d)) for uniform unit vectors vs 2 exp(-t^2/4); t >= 1, d >= 2.
    gamma   upper tail of (gamma - E gamma)/L, L = sqrt(34) alpha/(r^2 d), vs the
            sub-exponential (2 sqrt(2d), 1) tail; t >= 0.
    linear  P(|g(<x,y>)| >= 3 alpha t / (2 r^2)) with g(w) = sigma(w) - p - lambda w/(r sqrt(d))
            vs exp(-sqrt(t / 2e)); t >= 6.

    A violation is recorded only when empirical - 3 se exceeds the bound.
    """
    lemma = Lemma(lemma_id)
    t = np.asarray(list(t_grid), dtype=float)
    if t.size == 0:
        raise GridError("t_grid is empty")
    if reps < 10_000:
        raise ValueError("reps must be >= 10^4")
    seed = as_seed(seed).child("tail", list(Lemma).index(lemma))

    if lemma in (Lemma.GAMMA_SUBEXP, Lemma.LINEAR_REMAINDER):
        if spec is None or params is None:
            raise ValueError(f"{lemma.value} tail check needs a connection spec and calibrated params")
        d = params.d
    if d is None or d < 1:
        raise ValueError("dimension d is required")

    if lemma is Lemma.INNER_GAUSS:
        if np.any(t < 0):
            raise GridError("inner-product tail bound needs t >= 0")
        w = _chunked_inner(d, reps, seed, normalize=False)
        freq, se = _tail_freq(w, t)
        bound = subexp_tail(t, math.sqrt(2.0 * d), math.sqrt(2.0))
    elif lemma is Lemma.SPHERE_INNER:
        if np.any(t < 1) or d < 2:
            raise GridError("sphere tail bound needs t >= 1 and d >= 2")
        w = np.abs(_chunked_inner(d, reps, seed, normalize=True))
        freq, se = _tail_freq(w, t / math.sqrt(d))
        bound = 2.0 * np.exp(-t * t / 4.0)
    elif lemma is Lemma.GAMMA_SUBEXP:
        if np.any(t < 0):
            raise GridError("gamma tail bound needs t >= 0")
        est = gamma_moments(spec, params, reps, gamma_inner_nodes, seed)
        L = SQRT34 * spec.alpha / (params.r * params.r * d)
        dev = (est.values - est.mean) / L
        freq, se = _tail_freq(dev, t)
        bound = subexp_tail(t, 2.0 * math.sqrt(2.0 * d), 1.0)
    else:
        if np.any(t < 6):
            raise GridError("linear-remainder tail bound needs t >= 6")
        lam = lambda_value(spec, params, q)
        w = _chunked_inner(d, reps, seed, normalize=False)
        g = spec.cdf((w - params.mu) / params.scale) - params.p - lam / params.scale * w
        freq, se = _tail_freq(np.abs(g), 1.5 * spec.alpha * t / (params.r * params.r))
        bound = np.exp(-np.sqrt(t / (2.0 * math.e)))

    excess = freq - 3.0 * se - bound
    violations = tuple((float(tt), float(e)) for tt, e in zip(t, excess) if e > 0)
    return TailCheckReport(lemma, tuple(t.tolist()), tuple(freq.tolist()), tuple(se.tolist()),
                           tuple(np.asarray(bound, dtype=float).tolist()), violations)
