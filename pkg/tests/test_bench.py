import numpy as np
import pytest

from fastsum.bench import (ErrorStats, SWEEP_CSV_HEADER, SweepRecord,
                           classify_inside_outside, content_hash,
                           convergence_slope, error_stats, oracle_cache_stats,
                           oracle_field, rmse, rr_ablation, run_sweep,
                           write_sweep_csv, write_sweep_json)
from fastsum.types import KernelSpec, QuerySet

from _scenes import make_queryset, make_sources

COULOMB = KernelSpec("coulomb")


def test_error_stats_hand_values():
    s = error_stats([1.0, 2.0, 30.0], [0.0, 0.0, 0.0])
    assert s.mean_abs == pytest.approx(11.0)
    assert s.median_abs == 2.0
    assert s.max_abs == 30.0
    assert s.count == 3
    # even count uses the lower median
    s = error_stats([1.0, 2.0, 3.0, 30.0], [0.0, 0.0, 0.0, 0.0])
    assert s.median_abs == 2.0


def test_error_stats_excludes_flagged():
    s = error_stats([1.0, 100.0], [0.0, 0.0], flags=[False, True])
    assert s.count == 1
    assert s.max_abs == 1.0


def test_error_stats_validation():
    with pytest.raises(ValueError):
        error_stats([1.0], [1.0, 2.0])
    # every entry flagged: empty stats rather than an error
    s = error_stats([1.0], [0.0], flags=[True])
    assert s.count == 0 and np.isnan(s.mean_abs)


def test_rmse_hand_value():
    assert rmse([3.0, 0.0], [0.0, 4.0]) == pytest.approx(np.sqrt(12.5))
    assert rmse([3.0, 0.0], [0.0, 4.0], flags=[False, True]) == pytest.approx(3.0)


def test_content_hash_sensitivity():
    s = make_sources(5, seed=0)
    q = make_queryset(3, seed=1)
    h = content_hash(s, COULOMB, q)
    assert h == content_hash(s, COULOMB, q)
    assert h != content_hash(s, KernelSpec("smooth_exp"), q)
    assert h != content_hash(s, COULOMB, make_queryset(3, seed=2))


def test_oracle_cache_hits():
    s = make_sources(12, seed=77)
    q = make_queryset(4, seed=78)
    before = oracle_cache_stats()
    a = oracle_field(s, COULOMB, q)
    b = oracle_field(s, COULOMB, q)
    after = oracle_cache_stats()
    assert a is b
    assert after["hits"] >= before["hits"] + 1


def _fake_records(param_to_rmse):
    stats = ErrorStats(0.0, 0.0, 0.0, 1)
    return [SweepRecord("stochastic", p, 0.0, stats, r, 0.0, 0)
            for p, r in param_to_rmse.items()]


def test_convergence_slope_synthetic():
    recs = _fake_records({s: s ** -0.5 for s in (1, 4, 16, 64)})
    assert convergence_slope(recs) == pytest.approx(-0.5, abs=1e-12)
    with pytest.raises(ValueError):
        convergence_slope(recs[:3])
    with pytest.raises(ValueError):
        convergence_slope(_fake_records({1: 1.0, 2: 0.5, 3: 0.0, 4: 0.1}))


def test_run_sweep_stochastic_converges():
    s = make_sources(400, seed=90)
    q = make_queryset(64, seed=91)
    recs = run_sweep(s, COULOMB, "stochastic", [1, 4, 16, 64], q, seed=2)
    assert [r.parameter for r in recs] == [1.0, 4.0, 16.0, 64.0]
    assert all(r.rmse > 0 and r.wall_time_s >= 0 for r in recs)
    assert recs[-1].rmse < recs[0].rmse
    assert recs[-1].mean_path_length > 0
    slope = convergence_slope(recs)
    assert -0.8 < slope < -0.2


def test_run_sweep_barnes_hut_beta_improves():
    s = make_sources(400, seed=92)
    q = make_queryset(64, seed=93)
    recs = run_sweep(s, COULOMB, "barnes_hut", [0.5, 2.0, 8.0], q)
    assert recs[-1].stats.mean_abs < recs[0].stats.mean_abs
    assert recs[-1].visited_nodes_mean > recs[0].visited_nodes_mean


def test_rr_ablation_modes(tmp_path):
    s = make_sources(300, seed=94)
    q = make_queryset(48, seed=95)
    out = rr_ablation(s, COULOMB, q, seed=3)
    assert set(out) == {"paper_ratio", "fixed_half", "disabled"}
    # truncation must do strictly less work than full-depth paths
    assert out["paper_ratio"].visited_nodes_mean < out["disabled"].visited_nodes_mean
    assert out["paper_ratio"].mean_path_length < out["disabled"].mean_path_length


def test_classify_inside_outside():
    labels, acc = classify_inside_outside([0.9, 0.1, 0.6], [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(labels, [True, False, True])
    assert acc == pytest.approx(2.0 / 3.0)
    with pytest.raises(ValueError):
        classify_inside_outside([1.0], [1.0, 0.0])


def test_write_sweep_outputs(tmp_path):
    s = make_sources(100, seed=96)
    q = make_queryset(16, seed=97)
    recs = run_sweep(s, COULOMB, "stochastic", [1, 4], q)
    csv_path = tmp_path / "sweep.csv"
    write_sweep_csv(recs, csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == SWEEP_CSV_HEADER
    assert len(lines) == 3
    json_path = tmp_path / "sweep.json"
    write_sweep_json(json_path, {"method": "stochastic"}, s, COULOMB, q, recs)
    import json
    payload = json.loads(json_path.read_text())
    assert payload["input_hash"] == content_hash(s, COULOMB, q)
    assert len(payload["records"]) == 2
