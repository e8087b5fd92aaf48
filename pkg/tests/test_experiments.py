import csv
import io
import json
import math

import numpy as np
import pytest

from zmdsense import analysis as an
from zmdsense.errors import UnknownPreset
from zmdsense.experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    argmax_by_alpha,
    fig3_ensembles,
    fixed_graph_for,
    mean_ci,
    preset_points,
    reproduce_figure,
    run_point,
    run_sweep,
    run_trial,
    run_trials,
    snr_to_sigma_n,
    with_axis,
    write_csv,
)


def test_alpha_zero_detects_everything():
    cfg = ExperimentConfig(L=100, M=50, d_M=2, alpha=0.0, trials=20)
    for i in range(cfg.trials):
        t = run_trial(cfg, i)
        assert t.p_zd == 1.0
        assert math.isnan(t.p_wzd) is False and t.p_wzd == 0.0


def test_alpha_one_leaves_p_zd_undefined():
    cfg = ExperimentConfig(L=100, M=50, d_M=2, alpha=1.0, trials=10)
    res = run_point(cfg)
    assert math.isnan(res.mean("p_zd"))
    assert res.undefined_pwzd == 10


def test_one_two_regular_quarter():
    cfg = ExperimentConfig(L=1000, M=500, d_M=2, alpha=0.25, trials=200, seed=3)
    res = run_point(cfg)
    assert abs(res.mean("p_zd") - 0.75) <= 4 * res.ci("p_zd")
    assert res.mean("p_wzd") == 0.0
    assert res.analytic.p_zd == 0.75


def test_trial_counts_are_consistent():
    cfg = ExperimentConfig(L=200, M=100, d_M=4, alpha=0.2, sigma_n=0.05, detector="threshold:0.1", trials=30)
    for t in run_trials(cfg):
        assert t.correct + t.wrong == t.detected
        assert t.mz_c + t.mz_w + t.mnz_c + t.mnz_w == t.M
        assert t.zero_blocks <= t.L


def test_trial_is_deterministic():
    cfg = ExperimentConfig(L=200, M=100, d_M=4, alpha=0.2, trials=5, seed=9)
    assert run_trial(cfg, 3) == run_trial(cfg, 3)
    assert run_trial(cfg, 3) != run_trial(cfg, 4)


def test_jobs_do_not_change_results():
    cfg = ExperimentConfig(L=200, M=100, d_M=2, alpha=0.25, sigma_n=0.05, detector="threshold:0.1",
                           trials=13, seed=4)
    assert run_trials(cfg, jobs=1) == run_trials(cfg, jobs=3)


def test_mean_ci():
    m, ci, n = mean_ci([1.0, 0.0, float("nan"), 1.0, 0.0])
    assert (m, n) == (0.5, 4)
    assert ci == pytest.approx(1.959963984540054 * np.std([1, 0, 1, 0], ddof=1) / 2)
    assert math.isnan(mean_ci([math.nan])[0])


def test_fixed_graph_is_shared():
    cfg = ExperimentConfig(L=100, M=50, d_M=2, alpha=0.25, trials=5, fixed_graph=True, seed=2)
    g = fixed_graph_for(cfg)
    assert g == fixed_graph_for(cfg)
    # every trial detects from the same graph: a VN is flagged only through its single MN
    res = run_point(cfg)
    assert 0.0 < res.mean("p_zd") <= 1.0


def test_block_length_does_not_move_p_zd():
    base = ExperimentConfig(L=500, M=250, d_M=4, alpha=0.2, trials=200, seed=8)
    vals = [run_point(with_axis(base, "B", b)).mc["p_zd"] for b in (1, 3)]
    # noiseless detection depends on occupancy and graph only, which share streams across B
    assert vals[0] == vals[1]


def test_irregular_mc_matches_formula():
    cfg = ExperimentConfig(L=600, M=300, graph="irregular", d_M=None, lam={1: 0.5, 3: 0.5}, rho={4: 1.0},
                           alpha=0.15, trials=300, seed=1)
    res = run_point(cfg)
    assert abs(res.mean("p_zd") - an.pzd_irregular_noiseless(0.15, cfg.distribution)) <= 4 * res.ci("p_zd")


def test_one_to_one_matches_formula():
    cfg = ExperimentConfig(L=500, M=100, graph="one_to_one", d_M=None, alpha=0.25, trials=300, seed=1)
    res = run_point(cfg)
    # only the M connected VNs can be detected, each when it is itself vacant
    assert res.analytic.p_zd == pytest.approx(0.2)
    assert abs(res.mean("p_zd") - 0.2) <= 4 * res.ci("p_zd")


def test_config_round_trip(tmp_path):
    d = {"L": 100, "M": 50, "graph": "irregular", "lam": {"1": 0.5, "3": 0.5}, "rho": {"4": 1},
         "d_M": None, "alpha": 0.1, "snr_db": 20.0, "detector": "calibrated:0.02"}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(d))
    cfg = ExperimentConfig.load(p)
    assert cfg.lam == {1: 0.5, 3: 0.5}
    assert cfg.sigma_n == pytest.approx(0.1)
    assert cfg.detector_mode == ("calibrated", 0.02)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(L=10, M=3, d_M=2)
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(detector="magic:1")
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        ExperimentConfig(L=10, M=20, graph="one_to_one", d_M=None)


def test_snr_convention():
    assert snr_to_sigma_n(20.0) == pytest.approx(0.1)
    assert snr_to_sigma_n(0.0, 2.0) == pytest.approx(2.0)


def test_with_axis():
    base = ExperimentConfig()
    assert with_axis(base, "c_prime", 0.2).detector == "threshold:0.2"
    assert with_axis(base, "target_pwzd", 0.02).detector == "calibrated:0.02"
    assert with_axis(base, "d_M", 4.0).d_M == 4
    assert with_axis(base, "snr_db", 20).sigma_n == pytest.approx(0.1)
    with pytest.raises(ValueError):
        with_axis(base, "colour", 1)


def test_csv_schema():
    cfg = ExperimentConfig(L=100, M=50, d_M=2, alpha=0.25, trials=5)
    rows = [r for r, _ in run_sweep(cfg, "alpha", [0.1, 0.25])]
    text = write_csv(rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert [float(r["alpha"]) for r in parsed] == [0.1, 0.25]
    assert parsed[0]["c_prime"] == ""       # not applicable for noiseless detection
    assert parsed[0]["p_wzd_mc"] == "0.0"


def test_sweep_rows_identical_between_runs():
    cfg = ExperimentConfig(L=100, M=50, d_M=2, alpha=0.25, sigma_n=0.05, trials=8, seed=6)
    a = write_csv([r for r, _ in run_sweep(cfg, "c_prime", [0.05, 0.1])])
    b = write_csv([r for r, _ in run_sweep(cfg, "c_prime", [0.05, 0.1], jobs=2)])
    assert a == b


def test_presets():
    assert len(preset_points("fig2")) == 24
    assert len(preset_points("fig3-zmd")) == 27
    assert len(preset_points("fig4")) == 30
    assert len(preset_points("fig5")) == 60
    with pytest.raises(UnknownPreset):
        preset_points("fig9")


def test_fig3_ensembles_are_realizable():
    for M in (5, 10, 20, 25, 50, 100, 125, 250, 500):
        for cfg in fig3_ensembles(500, M).values():
            cfg.validate()
            assert cfg.distribution.is_consistent(500, M)


def test_reproduce_figure_writes_csv(tmp_path):
    out = tmp_path / "fig4.csv"
    rows = reproduce_figure("fig4", trials=2, seed=1, out=out)
    assert len(rows) == 30
    assert out.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)


def test_argmax_by_alpha():
    rows = [{"alpha": "0.1", "d_M": "2", "p_zd_mc": "0.5"}, {"alpha": "0.1", "d_M": "4", "p_zd_mc": "0.7"},
            {"alpha": "0.3", "d_M": "2", "p_zd_mc": "0.6"}, {"alpha": "0.3", "d_M": "4", "p_zd_mc": "0.4"}]
    assert argmax_by_alpha(rows) == {0.1: 4, 0.3: 2}
