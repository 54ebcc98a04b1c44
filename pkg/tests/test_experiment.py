import dataclasses
import json

import numpy as np
import pytest

from cfmimo.experiment import (CSV_HEADER, DEFAULT_COST_RATIOS,
                               DEFAULT_NT_SWEEP, RateReport, metadata_path,
                               percentile, run_drop, sweep,
                               write_metadata, write_records_csv)
from cfmimo.scenario import ConfigError, ScenarioConfig

SMALL = ScenarioConfig(total_antennas=30, antennas_per_ap=2, num_users=4,
                       drops=6, chi_samples=60, master_seed=77)


def test_run_drop_shapes_and_determinism():
    a = run_drop(SMALL, 0)
    b = run_drop(SMALL, 0)
    assert [r.scheme for r in a] == ["mrc-ul", "cbf-dl", "zfp-dl"]
    for ra, rb in zip(a, b):
        assert ra.per_user_se.shape == (4,)
        assert (ra.per_user_se >= 0).all()
        assert np.array_equal(ra.per_user_se, rb.per_user_se)
        assert ra.sum_rate == pytest.approx(ra.per_user_se.sum())


def test_run_drop_differs_across_indices_and_seeds():
    a = run_drop(SMALL, 0)
    b = run_drop(SMALL, 1)
    assert not np.array_equal(a[0].per_user_se, b[0].per_user_se)
    c = run_drop(dataclasses.replace(SMALL, master_seed=78), 0)
    assert not np.array_equal(a[0].per_user_se, c[0].per_user_se)


def test_run_drop_single_user_sum_equals_user_rate():
    cfg = dataclasses.replace(SMALL, num_users=1)
    for rep in run_drop(cfg, 2):
        assert rep.sum_rate == pytest.approx(float(rep.per_user_se[0]))


def test_run_drop_error_carries_drop_index(monkeypatch):
    import cfmimo.experiment as exp
    from cfmimo.downlink import NumericalError

    def boom(*args, **kwargs):
        raise NumericalError("synthetic failure")

    monkeypatch.setattr(exp, "zfp_moments", boom)
    with pytest.raises(NumericalError) as err:
        run_drop(SMALL, 3)
    assert str(err.value).startswith("drop 3:")


def test_zfp_beats_cbf_per_user_on_average_at_single_antenna_sites():
    # dense deployment at the full user population, modest drop count
    cfg = ScenarioConfig(total_antennas=300, antennas_per_ap=1, num_users=16,
                         drops=100, chi_samples=300, master_seed=5)
    zfp_mean = 0.0
    cbf_mean = 0.0
    for i in range(cfg.drops):
        _, cbf, zfp = run_drop(cfg, i)
        cbf_mean += cbf.per_user_se.mean()
        zfp_mean += zfp.per_user_se.mean()
    assert zfp_mean / cfg.drops > cbf_mean / cfg.drops


def test_fixed_ap_site_layout_is_stable_across_drops():
    from cfmimo.propagation import place_topology
    from cfmimo.scenario import drop_seed
    cfg = dataclasses.replace(SMALL, fixed_ap=True)
    t0 = place_topology(cfg, np.random.default_rng(drop_seed(77, 0)))
    t1 = place_topology(cfg, np.random.default_rng(drop_seed(77, 5)))
    assert np.array_equal(t0.ap_positions, t1.ap_positions)


def test_percentile_reference_values():
    assert percentile([1, 2, 3, 4, 5], 0.5) == 3.0
    assert percentile(np.arange(100), 0.05) == pytest.approx(4.95)
    assert percentile([7.0, 7.0, 7.0], 0.05) == 7.0
    assert percentile([2.0, 1.0], 0.5) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        percentile([], 0.5)
    with pytest.raises(ValueError):
        percentile([1.0], 1.5)
    with pytest.raises(ValueError):
        percentile([1.0], 0.0)


def test_sweep_record_grid_and_invariants():
    records = sweep(SMALL, nt_list=[1, 2, 5], cv_ratios=[0.1, 0.5])
    # 3 schemes x 3 splits x 2 ratios
    assert len(records) == 18
    for r in records:
        assert r.n_t * r.n_ap == SMALL.total_antennas
        assert r.k == 4
        assert r.drops == 6
        assert r.master_seed == 77
        assert r.se_p05 <= r.se_p50
        assert r.cost_total == pytest.approx(
            r.n_ap * (1.0 + r.n_t * r.cv_cf_ratio))
        assert r.gamma_ce == pytest.approx(r.sum_rate_mean / r.cost_total)
    # per-(scheme, n_t) rate stats identical across cost ratios
    by_key = {}
    for r in records:
        by_key.setdefault((r.scheme, r.n_t), set()).add(
            (r.sum_rate_mean, r.se_p05, r.se_p50))
    assert all(len(v) == 1 for v in by_key.values())


def test_sweep_defaults_shape():
    cfg = dataclasses.replace(SMALL, total_antennas=300, antennas_per_ap=1,
                              num_users=4, drops=1, chi_samples=30)
    records = sweep(cfg)
    assert len(records) == 3 * len(DEFAULT_NT_SWEEP) * len(DEFAULT_COST_RATIOS)
    assert {r.n_t for r in records} == set(DEFAULT_NT_SWEEP)


def test_sweep_rejects_bad_grids_before_running():
    with pytest.raises(ConfigError) as err:
        sweep(SMALL, nt_list=[1, 7], cv_ratios=[0.1])
    assert "7" in str(err.value)
    with pytest.raises(ConfigError):
        sweep(SMALL, nt_list=[2], cv_ratios=[-0.1])
    with pytest.raises(ConfigError):
        sweep(SMALL, nt_list=[], cv_ratios=[0.1])
    with pytest.raises(ConfigError):
        sweep(SMALL, nt_list=[2], cv_ratios=[0.1], jobs=0)


def test_sweep_parallel_results_are_identical():
    serial = sweep(SMALL, nt_list=[1, 3], cv_ratios=[0.05], jobs=1)
    parallel = sweep(SMALL, nt_list=[1, 3], cv_ratios=[0.05], jobs=2)
    assert serial == parallel


def test_csv_and_metadata_outputs(tmp_path):
    records = sweep(SMALL, nt_list=[2], cv_ratios=[0.1, 0.25])
    out = tmp_path / "out.csv"
    write_records_csv(records, out)
    write_metadata(out, SMALL, [2], [0.1, 0.25], records, quick=False, jobs=1)
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + len(records)
    first = lines[1].split(",")
    assert first[0] == "mrc-ul"
    assert first[1] == "2" and first[2] == "15"
    assert first[11] == "77"
    meta = json.loads((tmp_path / "out.csv.meta.json").read_text())
    assert meta["config"]["total_antennas"] == 30
    assert meta["nt_list"] == [2]
    assert meta["drops"] == 6
    assert meta["master_seed"] == 77
    assert "sum_rate_stderr" in meta
    assert metadata_path(out) == str(out) + ".meta.json"


def test_csv_floats_have_six_significant_digits(tmp_path):
    records = sweep(SMALL, nt_list=[2], cv_ratios=[1.0 / 3.0])
    out = tmp_path / "out.csv"
    write_records_csv(records, out)
    row = out.read_text().splitlines()[1].split(",")
    assert row[8] == "0.333333"
    for cell in (row[5], row[6], row[7]):
        mantissa = cell.replace("-", "").replace(".", "").lstrip("0")
        assert len(mantissa.split("e")[0]) <= 6


def test_rate_report_sum():
    rep = RateReport("mrc-ul", 0, np.array([1.0, 2.5]))
    assert rep.sum_rate == 3.5
