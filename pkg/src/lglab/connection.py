"""Connection-function families.

A connection function is the CDF ``F`` of a zero-mean, unit-variance law with
a strictly positive, continuously differentiable density ``f`` whose
derivative is bounded by ``alpha``.  The graph model rescales it as
``sigma(t) = F((t - mu) / (r * sqrt(d)))``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from .errors import MissingQuantile

ArrayFunc = Callable[[np.ndarray], np.ndarray]

LOGISTIC_SCALE = math.sqrt(3.0) / math.pi
LOGISTIC_ALPHA = math.pi**2 / (18.0 * math.sqrt(3.0))
GAUSSIAN_ALPHA = 1.0 / math.sqrt(2.0 * math.e * math.pi)

QUANTILE_BRACKET = (-40.0, 40.0)
QUANTILE_TOL = 1e-12


class Family(str, enum.Enum):
    LOGISTIC = "logistic"
    GAUSSIAN = "gaussian"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class ConnectionSpec:
    """Evaluators for one connection-function family.

    ``smooth`` marks evaluators that are analytic enough for Gaussian
    quadrature; tabulated families set it to ``False`` and calibrate by
    Monte Carlo instead.
    """

    family: Family
    alpha: float
    cdf_eval: ArrayFunc
    pdf_eval: ArrayFunc
    pdf_deriv_eval: ArrayFunc
    quantile_eval: ArrayFunc | None = None
    name: str = ""
    smooth: bool = True
    symmetric: bool = False
    # tail quantile beyond which the law carries less than ~1e-16 mass
    tail_extent: float = 40.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def cdf(self, x):
        return self.cdf_eval(np.asarray(x, dtype=float))

    def pdf(self, x):
        return self.pdf_eval(np.asarray(x, dtype=float))

    def pdf_deriv(self, x):
        return self.pdf_deriv_eval(np.asarray(x, dtype=float))

    def quantile(self, u):
        if self.quantile_eval is None:
            raise MissingQuantile(f"connection family {self.name or self.family.value!r} has no inverse CDF")
        return self.quantile_eval(np.asarray(u, dtype=float))

    @property
    def has_quantile(self) -> bool:
        return self.quantile_eval is not None

    def describe(self) -> dict:
        return {"family": self.family.value, "name": self.name, "alpha": self.alpha}


def _logistic_cdf(x):
    return special.expit(x / LOGISTIC_SCALE)


def _logistic_pdf(x):
    # F(1 - F) written through the lower tail on both sides; no cancellation
    F = special.expit(-np.abs(x) / LOGISTIC_SCALE)
    return F * (1.0 - F) / LOGISTIC_SCALE


def _logistic_pdf_deriv(x):
    x = np.asarray(x, dtype=float)
    F = special.expit(-np.abs(x) / LOGISTIC_SCALE)
    return -np.sign(x) * F * (1.0 - F) * (1.0 - 2.0 * F) / LOGISTIC_SCALE**2


def _logistic_quantile(u):
    return LOGISTIC_SCALE * special.logit(u)


def _gauss_pdf(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _gauss_pdf_deriv(x):
    return -x * _gauss_pdf(x)


def make_builtin(family: Family | str) -> ConnectionSpec:
    """Return the logistic or Gaussian connection family with its exact ``alpha``."""
    family = Family(family)
    if family is Family.LOGISTIC:
        return ConnectionSpec(
            Family.LOGISTIC, LOGISTIC_ALPHA, _logistic_cdf, _logistic_pdf,
            _logistic_pdf_deriv, _logistic_quantile,
            name="logistic", symmetric=True, tail_extent=22.0,
        )
    if family is Family.GAUSSIAN:
        return ConnectionSpec(
            Family.GAUSSIAN, GAUSSIAN_ALPHA, special.ndtr, _gauss_pdf,
            _gauss_pdf_deriv, special.ndtri,
            name="gaussian", symmetric=True, tail_extent=9.0,
        )
    raise ValueError(f"{family.value!r} is not a built-in family")


def bisection_quantile(cdf: ArrayFunc, lo: float = QUANTILE_BRACKET[0],
                       hi: float = QUANTILE_BRACKET[1], tol: float = QUANTILE_TOL) -> ArrayFunc:
    """Vectorized inverse of a strictly increasing CDF by bisection."""
    iters = int(math.ceil(math.log2((hi - lo) / tol))) + 1

    def quantile(u):
        u = np.asarray(u, dtype=float)
        a = np.full(u.shape, lo)
        b = np.full(u.shape, hi)
        for _ in range(iters):
            m = 0.5 * (a + b)
            below = cdf(m) < u
            a = np.where(below, m, a)
            b = np.where(below, b, m)
        return 0.5 * (a + b)

    return quantile


def make_custom(cdf: ArrayFunc, pdf: ArrayFunc, pdf_deriv: ArrayFunc, alpha: float, *,
                quantile: ArrayFunc | None = None, invert: bool = True,
                smooth: bool = True, name: str = "custom") -> ConnectionSpec:
    """Wrap user-supplied evaluators.

    ``alpha`` is taken as declared; :func:`validate_assumptions` can only
    falsify it on a grid.  Without an explicit ``quantile`` a bisection
    inverse is attached unless ``invert`` is false.
    """
    if quantile is None and invert:
        quantile = bisection_quantile(cdf)
    return ConnectionSpec(Family.CUSTOM, float(alpha), cdf, pdf, pdf_deriv, quantile,
                          name=name, smooth=smooth)


def from_table(x, cdf_values, alpha: float, name: str = "custom") -> ConnectionSpec:
    """Custom family from a tabulated CDF, interpolated by a monotone cubic.

    Outside the table the CDF is clamped to 0 and 1, so the density vanishes
    there and assumption A0 fails on wide grids; the table should cover the
    bulk of the law.
    """
    x = np.asarray(x, dtype=float)
    c = np.asarray(cdf_values, dtype=float)
    if x.ndim != 1 or x.shape != c.shape or x.size < 4:
        raise ValueError("table needs matching 1-D 'x' and 'cdf' arrays of length >= 4")
    if np.any(np.diff(x) <= 0) or np.any(np.diff(c) < 0):
        raise ValueError("table 'x' must increase strictly and 'cdf' must be nondecreasing")
    interp = PchipInterpolator(x, c, extrapolate=False)
    dinterp = interp.derivative(1)
    ddinterp = interp.derivative(2)
    lo, hi = x[0], x[-1]

    def F(t):
        t = np.asarray(t, dtype=float)
        out = interp(np.clip(t, lo, hi))
        return np.clip(np.where(t < lo, 0.0, np.where(t > hi, 1.0, out)), 0.0, 1.0)

    def f(t):
        t = np.asarray(t, dtype=float)
        inside = (t >= lo) & (t <= hi)
        return np.where(inside, dinterp(np.clip(t, lo, hi)), 0.0)

    def fp(t):
        t = np.asarray(t, dtype=float)
        inside = (t >= lo) & (t <= hi)
        return np.where(inside, ddinterp(np.clip(t, lo, hi)), 0.0)

    spec = make_custom(F, f, fp, alpha, quantile=bisection_quantile(F, lo, hi),
                       smooth=False, name=name)
    return spec


def spec_from_descriptor(desc) -> ConnectionSpec:
    """Build a spec from a name (``"logistic"``/``"gaussian"``), a dict, or JSON text.

    Custom descriptors look like
    ``{"family": "custom", "alpha": 0.3, "table": {"x": [...], "cdf": [...]}}``.
    """
    if isinstance(desc, ConnectionSpec):
        return desc
    if isinstance(desc, str):
        stripped = desc.strip()
        if stripped.startswith("{"):
            desc = json.loads(stripped)
        else:
            return make_builtin(stripped.lower())
    if not isinstance(desc, dict):
        raise TypeError(f"cannot build a connection spec from {type(desc).__name__}")
    family = str(desc.get("family", "")).lower()
    if family in ("logistic", "gaussian"):
        return make_builtin(family)
    if family != "custom":
        raise ValueError(f"unknown connection family {family!r}")
    table = desc.get("table")
    if not isinstance(table, dict) or "x" not in table or "cdf" not in table:
        raise ValueError("custom descriptor requires a 'table' with 'x' and 'cdf'")
    return from_table(table["x"], table["cdf"], float(desc["alpha"]), name=desc.get("name", "custom"))


# --- assumption checks -----------------------------------------------------

@dataclass(frozen=True)
class GridConfig:
    lo: float = -20.0
    hi: float = 20.0
    points: int = 65536

    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    witness: float | None = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    family: str
    checks: tuple[CheckResult, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def _first(mask: np.ndarray, x: np.ndarray) -> float | None:
    idx = np.flatnonzero(mask)
    return float(x[idx[0]]) if idx.size else None


def _simpson(y: np.ndarray, x: np.ndarray) -> float:
    from scipy.integrate import simpson
    return float(simpson(y, x=x))


def validate_assumptions(spec: ConnectionSpec, grid: GridConfig = GridConfig(),
                         moment_tol: float = 1e-8, quantile_tol: float = 1e-10) -> ValidationReport:
    """Check monotonicity, A0, A1, the density bound, quantile round-trip and moments.

    Failures are reported with a witnessing grid point; nothing here raises
    on a bad spec.
    """
    if grid.lo > -20.0 or grid.hi < 20.0 or grid.points < 10_000:
        raise ValueError("grid must span at least [-20, 20] with >= 10^4 points")
    x = grid.grid()
    checks: list[CheckResult] = []

    with np.errstate(all="ignore"):
        F = spec.cdf(x)
        f = spec.pdf(x)
        fp = spec.pdf_deriv(x)

    # a few ulps of slack: interpolated tables round near F = 1
    bad = np.diff(F) < -4.0 * np.finfo(float).eps
    checks.append(CheckResult("monotone", not bad.any(), _first(bad, x[1:]),
                              "cdf decreases between consecutive grid points" if bad.any() else ""))

    bad = ~(f > 0)
    checks.append(CheckResult("A0_positive_density", not bad.any(), _first(bad, x),
                              "density is not strictly positive" if bad.any() else ""))

    bad = ~(np.abs(fp) <= spec.alpha)
    checks.append(CheckResult("A1_bounded_derivative", not bad.any(), _first(bad, x),
                              f"|f'| exceeds alpha={spec.alpha:g}" if bad.any() else f"max |f'| = {np.nanmax(np.abs(fp)):.6g}"))

    cap = 2.0 * math.sqrt(spec.alpha)
    bad = ~(f <= cap)
    checks.append(CheckResult("density_bound", not bad.any(), _first(bad, x),
                              f"max f = {np.nanmax(f):.6g} vs 2*sqrt(alpha) = {cap:.6g}"))

    if spec.has_quantile:
        u = np.concatenate([np.logspace(-6, -1, 50), np.linspace(0.1, 0.9, 81), 1.0 - np.logspace(-1, -6, 50)])
        with np.errstate(all="ignore"):
            err = np.abs(spec.cdf(spec.quantile(u)) - u)
        bad = ~(err <= quantile_tol)
        checks.append(CheckResult("quantile_roundtrip", not bad.any(), _first(bad, u),
                                  f"max error {np.nanmax(err):.3g}"))
    else:
        checks.append(CheckResult("quantile_roundtrip", True, None, "no inverse supplied; skipped"))

    mass = _simpson(f, x)
    mean = _simpson(x * f, x)
    var = _simpson(x * x * f, x) - mean * mean
    ok = abs(mass - 1.0) <= moment_tol and abs(mean) <= moment_tol and abs(var - 1.0) <= moment_tol
    checks.append(CheckResult("zero_mean_unit_variance", ok, None,
                              f"mass={mass:.12f} mean={mean:.3g} var={var:.12f}"))

    if spec.family is Family.CUSTOM:
        checks.append(CheckResult("A2_second_derivative", True, None,
                                  "not certifiable from evaluators; assumed"))
    else:
        # f'' is bounded for both built-ins, so E|f''(X)| is finite for any Gaussian X
        checks.append(CheckResult("A2_second_derivative", True, None, "analytic"))

    return ValidationReport(spec.name or spec.family.value, tuple(checks))
