import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from lglab.calibrate import QuadratureConfig
from lglab.experiments import (CSV_COLUMNS, ExperimentConfig, dkw_radius, ks_distance, null_quantile,
                               null_tau_sample, phase_sweep, power_matrix, run_power, sweep_csv,
                               tv_lower_empirical)

SMALL = dict(n=16, p=0.5, reps_null=100, reps_alt=100)


def ecdf_oracle(a, b):
    pts = np.concatenate([a, b])
    fa = np.array([(a <= t).mean() for t in pts])
    fb = np.array([(b <= t).mean() for t in pts])
    return np.max(np.abs(fa - fb))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # scipy's p-value path; only the statistic is used
@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=40), st.lists(st.integers(-5, 5), min_size=1, max_size=40))
def test_ks_matches_brute_force_and_scipy(a, b):
    a, b = np.array(a, float), np.array(b, float)
    d = ks_distance(a, b)
    assert d == pytest.approx(ecdf_oracle(a, b), abs=1e-15)
    assert d == pytest.approx(stats.ks_2samp(a, b, method="asymp").statistic, abs=1e-12)


def test_ks_trivial_cases():
    x = np.arange(10.0)
    assert ks_distance(x, x.copy()) == 0.0
    assert ks_distance(x, x + 100) == 1.0
    dist, radius = tv_lower_empirical(x, x)
    assert dist == 0.0 and radius == pytest.approx(math.sqrt(math.log(40) / 20))
    assert dkw_radius(400) == pytest.approx(0.06790507578703096)


def test_null_quantile_size():
    x = np.arange(1, 101, dtype=float)
    q = null_quantile(x, 0.05)
    assert q == 95.0 and (x > q).mean() <= 0.05
    x = np.repeat([0.0, 1.0], [97, 3])
    assert (x > null_quantile(x, 0.05)).mean() <= 0.05


def test_config_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig(**dict(SMALL, reps_null=99))
    with pytest.raises(ValueError):
        ExperimentConfig(**SMALL, level=0.5)
    with pytest.raises(ValueError):
        ExperimentConfig(**SMALL, d_list=())
    with pytest.raises(ValueError):
        ExperimentConfig(**SMALL, mechanism="magic")
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict(dict(SMALL, unknown=1))
    cfg = ExperimentConfig(**SMALL, d_list=[2, 4], r_list=[1, 2])
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.from_json(path) == cfg
    assert ExperimentConfig.from_dict(dict(SMALL, family="gaussian")).spec == "gaussian"


def test_run_power_fields_and_invariants():
    cfg = ExperimentConfig(**SMALL)
    cell = run_power(cfg, 2, 1.0, workers=1)
    assert cell.status == "ok"
    assert 0 <= cell.power <= 1 and 0 <= cell.tv_lower_ks <= 1
    assert cell.ratio_r6d == 16**3 / 2 and cell.n_cubed_over_r4d == 16**3 / 2
    assert cell.power_se == pytest.approx(math.sqrt(cell.power * (1 - cell.power) / 100))
    assert len(cell.null_taus) == 100 and len(cell.alt_taus) == 100
    assert cell.mean_tau_alt == pytest.approx(cell.alt_taus.mean())
    assert cell.bounds is not None and cell.tv_upper == cell.bounds.tv_upper


def test_run_power_small_r_has_no_kl_bound():
    cell = run_power(ExperimentConfig(**SMALL), 2, 0.5, workers=1)
    assert cell.status == "ok" and math.isnan(cell.tv_upper) and not cell.kl_valid


def test_failed_cell_is_flagged():
    q = QuadratureConfig(outer_nodes=8, inner_nodes=8, max_outer_nodes=8, max_inner_nodes=8)
    cell = run_power(ExperimentConfig(**dict(SMALL, p=0.3)), 1, 0.5, workers=1, q=q)
    assert cell.status.startswith("error: QuadratureNotConverged")
    assert math.isnan(cell.power)
    line = sweep_csv([cell]).splitlines()[1]
    assert line.split(",")[0] == "1" and "QuadratureNotConverged" in line


def test_self_test_size():
    cfg = ExperimentConfig(n=16, p=0.5, reps_null=400, reps_alt=400)
    cell = run_power(cfg, 2, 1.0, self_test=True, workers=1)
    assert abs(cell.power - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / 400)


def test_single_cell_sweep_equals_run_power():
    cfg = ExperimentConfig(**SMALL, d_list=[3], r_list=[2.0], master_seed=5)
    (swept,) = phase_sweep(cfg, workers=1)
    direct = run_power(cfg, 3, 2.0, workers=1)
    assert sweep_csv([swept]) == sweep_csv([direct])
    assert np.array_equal(swept.alt_taus, direct.alt_taus)


def test_sweep_order_and_worker_independence():
    cfg = ExperimentConfig(**SMALL, d_list=[2, 8], r_list=[1.0, 4.0], master_seed=9)
    a = phase_sweep(cfg, workers=1)
    b = phase_sweep(cfg, workers=4)
    assert [(c.d, c.r) for c in a] == [(2, 1.0), (2, 4.0), (8, 1.0), (8, 4.0)]
    assert sweep_csv(a) == sweep_csv(b)
    assert np.array_equal(a[0].null_taus, a[3].null_taus)


def test_csv_format_round_trips():
    cfg = ExperimentConfig(**SMALL, d_list=[2], r_list=[1.0, 3.0])
    cells = phase_sweep(cfg, workers=1)
    lines = sweep_csv(cells).splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    row = dict(zip(CSV_COLUMNS, lines[1].split(",")))
    assert float(row["mu"]) == cells[0].mu and float(row["power_se"]) == cells[0].power_se
    assert row["kl_valid"] in ("true", "false") and row["status"] == "ok"
    matrix = power_matrix(cfg, cells).splitlines()
    assert matrix[1].split() == ["2", "1.0", "3.0"]
    assert [float(v) for v in matrix[2].split()[1:]] == [c.power for c in cells]


def test_null_sample_mean_zero():
    cfg = ExperimentConfig(n=12, p=0.3, reps_null=1000, reps_alt=100)
    taus = null_tau_sample(cfg, workers=2)
    assert abs(taus.mean()) <= 4 * taus.std() / math.sqrt(taus.size)
