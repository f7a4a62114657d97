"""Monte Carlo detection experiments and the (d, r) phase sweep."""

from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .bounds import BoundReport, bound_report
from .calibrate import DEFAULT_QUADRATURE, ModelParams, QuadratureConfig, calibrate_mu
from .connection import ConnectionSpec, spec_from_descriptor
from .errors import LGLabError
from .sampler import sample_er, sample_graph
from .seeding import SeedContext
from .tristat import signed_triangles_trace

MECHANISMS = ("uniform", "threshold")

CSV_COLUMNS = (
    "d", "r", "mu", "power", "power_se", "tv_lower_ks", "tv_upper", "kl_valid",
    "mean_tau_null", "mean_tau_null_se", "mean_tau_alt", "mean_tau_alt_se",
    "var_tau_null", "var_tau_alt", "ratio_r6d", "ratio_r4d", "status",
)


def default_workers() -> int:
    env = os.environ.get("LGLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    p: float
    spec: object = "logistic"
    d_list: tuple[int, ...] = (2,)
    r_list: tuple[float, ...] = (1.0,)
    reps_null: int = 400
    reps_alt: int = 400
    level: float = 0.05
    master_seed: int = 0
    mechanism: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "d_list", tuple(int(d) for d in self.d_list))
        object.__setattr__(self, "r_list", tuple(float(r) for r in self.r_list))
        if self.n < 3:
            raise ValueError("n must be >= 3")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.reps_null < 100 or self.reps_alt < 100:
            raise ValueError("reps_null and reps_alt must be >= 100")
        if not 0.0 < self.level < 0.5:
            raise ValueError("level must lie in (0, 0.5)")
        if not self.d_list or not self.r_list:
            raise ValueError("d_list and r_list must be nonempty")
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"mechanism must be one of {MECHANISMS}")

    @property
    def connection(self) -> ConnectionSpec:
        return spec_from_descriptor(self.spec)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "family" in data and "spec" not in data:
            data["spec"] = data.pop("family")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["d_list"] = list(self.d_list)
        out["r_list"] = list(self.r_list)
        return out


@dataclass
class SweepCell:
    d: int
    r: float
    mu: float = math.nan
    power: float = math.nan
    power_se: float = math.nan
    tv_lower_ks: float = math.nan
    tv_lower_radius: float = math.nan
    tv_upper: float = math.nan
    kl_valid: bool = False
    mean_tau_null: float = math.nan
    mean_tau_null_se: float = math.nan
    mean_tau_alt: float = math.nan
    mean_tau_alt_se: float = math.nan
    var_tau_null: float = math.nan
    var_tau_alt: float = math.nan
    ratio_r6d: float = math.nan
    ratio_r4d: float = math.nan
    threshold: float = math.nan
    status: str = "ok"
    bounds: BoundReport | None = field(default=None, repr=False)
    null_taus: np.ndarray | None = field(default=None, repr=False)
    alt_taus: np.ndarray | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def n_cubed_over_r6d(self) -> float:
        return self.ratio_r6d

    @property
    def n_cubed_over_r4d(self) -> float:
        return self.ratio_r4d

    def summary(self) -> dict:
        out = {name: getattr(self, name) for name in CSV_COLUMNS}
        out["tv_lower_radius"] = self.tv_lower_radius
        out["threshold"] = self.threshold
        if self.bounds is not None:
            out["bounds"] = self.bounds.as_dict()
        return out


# --- replicate kernels ----------------------------------------------------------

def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def null_tau_sample(cfg: ExperimentConfig, workers: int = 1) -> np.ndarray:
    """tau of ``reps_null`` Erdos-Renyi graphs from the shared null stream."""
    root = SeedContext(cfg.master_seed).child("null")
    return np.array(_map(lambda i: signed_triangles_trace(sample_er(cfg.n, cfg.p, root.child("replicate", i)),
                                                          cfg.p).tau,
                         range(cfg.reps_null), workers))


def alt_tau_sample(cfg: ExperimentConfig, spec: ConnectionSpec, params: ModelParams, cell_index: int,
                   workers: int = 1, self_test: bool = False) -> np.ndarray:
    root = SeedContext(cfg.master_seed).child("cell", cell_index)

    def one(i):
        seed = root.child("replicate", i)
        g = sample_er(cfg.n, cfg.p, seed) if self_test else sample_graph(spec, params, seed, cfg.mechanism)
        return signed_triangles_trace(g, cfg.p).tau

    return np.array(_map(one, range(cfg.reps_alt), workers))


def null_quantile(null_taus: np.ndarray, level: float) -> float:
    """Smallest null value whose empirical CDF reaches 1 - level."""
    ordered = np.sort(null_taus)
    k = math.ceil((1.0 - level) * ordered.size) - 1
    return float(ordered[min(max(k, 0), ordered.size - 1)])


def ks_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov distance sup_t |F_a(t) - F_b(t)|."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def dkw_radius(reps: int, confidence: float = 0.95) -> float:
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * reps))


def tv_lower_empirical(null_taus: np.ndarray, alt_taus: np.ndarray) -> tuple[float, float]:
    """KS distance between the tau samples and its 95% DKW radius.

    Any test built on tau is a function of the graph, so the TV distance
    between the tau laws lower-bounds the TV distance between graph laws.
    """
    reps = min(len(null_taus), len(alt_taus))
    return ks_distance(null_taus, alt_taus), dkw_radius(reps)


def _se(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(x.size))


def run_power(cfg: ExperimentConfig, d: int, r: float, *, cell_index: int = 0,
              null_taus: np.ndarray | None = None, workers: int | None = None,
              self_test: bool = False, q: QuadratureConfig = DEFAULT_QUADRATURE,
              with_bounds: bool = True) -> SweepCell:
    """Power of the one-sided signed-triangle test at one (d, r) cell.

    The test rejects when tau exceeds the empirical (1 - level) quantile of
    the null sample.  ``self_test`` replaces the alternative by fresh
    Erdos-Renyi graphs, so the rejection rate estimates the test size.
    Calibration or sampling failures are recorded in ``status``.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    cell = SweepCell(d=int(d), r=float(r))
    n = cfg.n
    cell.ratio_r6d = n**3 / (r**6 * d)
    cell.ratio_r4d = n**3 / (r**4 * d)
    if null_taus is None:
        null_taus = null_tau_sample(cfg, workers)
    try:
        spec = cfg.connection
        params = calibrate_mu(spec, cfg.p, d, r, q, n=n, seed=SeedContext(cfg.master_seed).child("cell", cell_index))
        cell.mu = params.mu
        alt = alt_tau_sample(cfg, spec, params, cell_index, workers, self_test)
    except LGLabError as exc:
        cell.status = f"error: {type(exc).__name__}: {exc}"
        return cell

    cell.threshold = null_quantile(null_taus, cfg.level)
    rejections = alt > cell.threshold
    cell.power = float(rejections.mean())
    cell.power_se = math.sqrt(cell.power * (1.0 - cell.power) / alt.size)
    cell.mean_tau_null, cell.mean_tau_null_se = float(null_taus.mean()), _se(null_taus)
    cell.mean_tau_alt, cell.mean_tau_alt_se = float(alt.mean()), _se(alt)
    cell.var_tau_null = float(null_taus.var(ddof=1))
    cell.var_tau_alt = float(alt.var(ddof=1))
    cell.tv_lower_ks, cell.tv_lower_radius = tv_lower_empirical(null_taus, alt)
    cell.null_taus, cell.alt_taus = null_taus, alt

    if with_bounds and r >= 1:
        try:
            cell.bounds = bound_report(spec, params, q=q)
            cell.tv_upper = cell.bounds.tv_upper
            cell.kl_valid = cell.bounds.kl_valid
        except LGLabError as exc:
            cell.status = f"bounds_error: {type(exc).__name__}: {exc}"
    return cell


def phase_sweep(cfg: ExperimentConfig, workers: int | None = None,
                q: QuadratureConfig = DEFAULT_QUADRATURE) -> list[SweepCell]:
    """run_power over d_list x r_list in row-major (d, then r) order.

    One null sample is shared by every cell; alternative streams are keyed by
    the cell's position in that order, so results do not depend on
    ``workers``.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    null = null_tau_sample(cfg, workers)
    cells = []
    index = 0
    for d in cfg.d_list:
        for r in cfg.r_list:
            cells.append(run_power(cfg, d, r, cell_index=index, null_taus=null, workers=workers, q=q))
            index += 1
    return cells


# --- output -------------------------------------------------------------------

def _csv_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    text = str(v)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def sweep_csv(cells: list[SweepCell]) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for cell in cells:
        buf.write(",".join(_csv_value(getattr(cell, c)) for c in CSV_COLUMNS) + "\n")
    return buf.getvalue()


def write_sweep_csv(cells: list[SweepCell], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(sweep_csv(cells))


def power_matrix(cfg: ExperimentConfig, cells: list[SweepCell]) -> str:
    """Gnuplot ``matrix nonuniform`` block: first row r values, first column d values."""
    lookup = {(c.d, c.r): c.power for c in cells}
    lines = ["# power of the signed-triangle test; rows d, columns r",
             " ".join([str(len(cfg.r_list))] + [repr(r) for r in cfg.r_list])]
    for d in cfg.d_list:
        lines.append(" ".join([str(d)] + [repr(float(lookup.get((d, r), math.nan))) for r in cfg.r_list]))
    return "\n".join(lines) + "\n"
