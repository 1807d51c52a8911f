import json
import math

import numpy as np
import pytest
from scipy.special import gamma

from secular import combinat, ewens, harness
from secular.streams import GaussianStream


def test_limit_law_moments():
    theta, reps = 0.2, 100_000
    draws = harness.limit_law_batch(theta, 99, reps)
    sq = np.abs(draws) ** 2
    se = np.std(sq, ddof=1) / math.sqrt(reps)
    assert abs(sq.mean() - 1.0) <= 3 * se
    q4 = np.abs(draws) ** 4
    se4 = np.std(q4, ddof=1) / math.sqrt(reps)
    target = 2 * gamma(1 - 2 * theta) / gamma(1 - theta) ** 2
    assert abs(q4.mean() - target) <= 3 * se4


def test_limit_law_degenerates_to_gaussian():
    reps = 20_000
    draws = harness.limit_law_batch(0.01, 7, reps)
    z = GaussianStream(8, 0).complex_normals(reps)
    assert harness.ks_distance(np.abs(draws), np.abs(z)) < 0.02


def test_limit_law_requires_subcritical_theta():
    with pytest.raises(ValueError):
        harness.sample_limit_law(1.0, GaussianStream(0, 0))


def test_batch_standard_error_gaussian():
    x = GaussianStream(4, 0).complex_normals(40_000).real * math.sqrt(2)
    se = harness.batch_standard_error(x)
    assert 0.5 / math.sqrt(40_000) < se < 2.0 / math.sqrt(40_000)


def test_ks_threshold_value():
    # 0.1% level with 1e4 vs 1e4 samples
    assert abs(harness.ks_threshold(10 ** 4, 10 ** 4) - 0.02757) < 1e-4


def test_coefficient_weight_branches():
    assert abs(harness.coefficient_weight(64, 0.5) - 64 ** -0.25) < 1e-15
    assert abs(harness.coefficient_weight(64, 1.0)
               - math.log(65) ** -0.25) < 1e-15
    w = harness.coefficient_weight(64, 2.25)
    assert abs(w - 64 ** 0.5 * math.log(65) ** -1.125) < 1e-12


def test_expected_bracket_finite_n_vs_direct_sum():
    theta, n, delta = 0.4, 24, 0.2
    from secular.hmc import martingale_sum_start
    qmin = martingale_sum_start(n, delta)
    direct = sum(
        (theta / q) * combinat.constrained_second_moment(n - q, q - 1, theta)
        for q in range(qmin, n + 1)) / combinat.gen_binom(n, theta)
    assert abs(harness.expected_bracket_finite_n(n, delta, theta)
               - direct) < 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        harness.ExperimentConfig("convergence", replicates=50)
    with pytest.raises(KeyError):
        harness.ExperimentConfig.defaults_for("nope")
    with pytest.raises(ValueError):
        harness.run_experiment(harness.ExperimentConfig("nope"))


def _tiny_convergence_config():
    return harness.ExperimentConfig(
        "convergence", theta=0.25, ns=(16,), Ns=(128,), replicates=600,
        seed=1234, tolerances={"ks": 0.2})


def test_reports_are_reproducible():
    rep1 = harness.run_experiment(_tiny_convergence_config())
    rep2 = harness.run_experiment(_tiny_convergence_config())
    assert rep1.to_csv() == rep2.to_csv()
    d1 = json.loads(rep1.to_json())
    d2 = json.loads(rep2.to_json())
    d1.pop("wall_clock_s")
    d2.pop("wall_clock_s")
    assert d1 == d2


def test_report_csv_columns():
    rep = harness.run_experiment(_tiny_convergence_config())
    lines = rep.to_csv().strip().split("\n")
    assert lines[0] == "grid,estimate,std_error,oracle,verdict"
    assert all(line.count(",") == 4 for line in lines)


def test_moment_ratio_experiment():
    config = harness.ExperimentConfig.defaults_for("moment-ratio", theta=0.25)
    rep = harness.run_experiment(config)
    assert rep.passed
    config = harness.ExperimentConfig.defaults_for("moment-ratio", theta=0.5)
    rep = harness.run_experiment(config)
    stats = {r.statistic for r in rep.rows}
    assert "critical_log_ratio" in stats


def test_sobolev_experiment_reports_trend_only():
    config = harness.ExperimentConfig.defaults_for(
        "sobolev", theta=0.5, ns=(16, 64), replicates=200)
    rep = harness.run_experiment(config)
    assert rep.verdicts == {}
    assert rep.extras["s_critical"] == -0.25
    assert len(rep.rows) == 6


def test_bracket_experiment_small():
    config = harness.ExperimentConfig(
        "bracket", theta=0.25, delta=0.2, ns=(32, 96), replicates=2000,
        seed=77)
    rep = harness.run_experiment(config)
    for r in rep.rows:
        if r.statistic == "bracket_mean":
            assert r.verdict
    assert rep.extras["c_delta"] == ewens.c_delta(0.2, 0.25)


def test_secular_gap_experiment_small():
    config = harness.ExperimentConfig(
        "secular-gap", theta=0.5, ns=(8,), Ns=(64, 256), replicates=1500,
        seed=3, tolerances={"slope": 0.4})
    rep = harness.run_experiment(config)
    for r in rep.rows:
        if r.statistic == "coupled_gap":
            assert r.verdict, r
