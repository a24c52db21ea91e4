import math

import numpy as np
import pytest

from backhaulsim import (
    ExperimentConfig,
    MueRow,
    RunResult,
    apply_override,
    best_effort_decile,
    compute_cdf,
    distance_binned_throughput,
    load_config,
    result_from_dict,
    result_to_dict,
    run_experiment,
    run_sweep,
)
from backhaulsim.harness import CSV_HEADER, export, import_json
from backhaulsim.topology import ConfigurationError

from conftest import small_scenario


def _tiny_config(**kw):
    base = dict(
        scenario=small_scenario(),
        algorithm="RSF",
        drops=2,
        iterations=30,
        seed=11,
    )
    base.update(kw)
    return ExperimentConfig(**base)


# -- configuration ----------------------------------------------------------------


def test_overrides_reach_nested_sections():
    cfg = ExperimentConfig()
    cfg = apply_override(cfg, "scenario.mues_per_sector", "4")
    cfg = apply_override(cfg, "game.power_levels", "3")
    cfg = apply_override(cfg, "utility.alpha", "0.25")
    cfg = apply_override(cfg, "run.drops", "7")
    cfg = apply_override(cfg, "iterations", "9")
    cfg = apply_override(cfg, "algorithm", "rsl")
    cfg = apply_override(cfg, "offload_half_duplex", "on")
    assert cfg.scenario.mues_per_sector == 4
    assert cfg.game.power_levels == 3
    assert cfg.utility.alpha == 0.25
    assert cfg.drops == 7
    assert cfg.iterations == 9
    assert cfg.algorithm == "RSL"
    assert cfg.offload_half_duplex is True


def test_overrides_reject_unknown_keys():
    cfg = ExperimentConfig()
    with pytest.raises(ConfigurationError):
        apply_override(cfg, "scenario.bandwidth", "1")
    with pytest.raises(ConfigurationError):
        apply_override(cfg, "run.warp", "1")
    with pytest.raises(ConfigurationError):
        apply_override(cfg, "channels.fading", "1")
    with pytest.raises(ConfigurationError):
        apply_override(cfg, "offload_half_duplex", "maybe")


def test_config_file_round_trip(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[scenario]\nmues_per_sector = 5\nsbss_per_sector = 2\n\n"
        "[run]\nalgorithm = CLA\ndrops = 3\nseed = 99\n\n"
        "[traffic]\nrho_bps = 90e3\n"
    )
    cfg = load_config(ini)
    assert cfg.scenario.mues_per_sector == 5
    assert cfg.algorithm == "CLA"
    assert cfg.drops == 3
    assert cfg.seed == 99
    assert cfg.traffic.rho_bps == pytest.approx(90e3)


def test_validate_rejects_bad_run_settings():
    for kw in (
        {"mode": "sat"},
        {"algorithm": "GREEDY"},
        {"drops": 0},
        {"iterations": 0},
        {"kappa": 0.0},
        {"feedback_sigma": -1.0},
        {"learner_rate_unit_bps": 0.0},
        {"workers": 0},
    ):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(**kw).validate()


def test_feedback_scale_interpolates_units():
    assert ExperimentConfig().feedback_scale() == pytest.approx(
        3e8**-0.5 * 1e-3**0.5
    )
    alpha0 = ExperimentConfig(utility=ExperimentConfig().utility.__class__(alpha=0.0))
    assert alpha0.feedback_scale() == pytest.approx(1.0 / 3e8)
    alpha1 = ExperimentConfig(utility=ExperimentConfig().utility.__class__(alpha=1.0))
    assert alpha1.feedback_scale() == pytest.approx(1e-3)


# -- experiment loop -----------------------------------------------------------------


def test_runs_are_seed_deterministic():
    a = run_experiment(_tiny_config())
    b = run_experiment(_tiny_config())
    assert a.rows == b.rows
    assert a.mean_utility_trace == b.mean_utility_trace
    c = run_experiment(_tiny_config(seed=12))
    assert a.rows != c.rows


def test_drop_seeds_do_not_depend_on_drop_count():
    # Drop d must see the same world whether 2 or 3 drops run in total.
    two = run_experiment(_tiny_config(drops=2))
    three = run_experiment(_tiny_config(drops=3))
    per_drop = len(two.rows) // 2
    assert two.rows[:per_drop] == three.rows[:per_drop]


def test_learning_run_exposes_traces():
    res = run_experiment(_tiny_config())
    assert len(res.mean_utility_trace) == 30
    assert len(res.strategy_change_trace) == 30
    assert len(res.converged_at) == 2
    assert all(x >= 0 for x in res.strategy_change_trace)
    assert set(res.summary) == {
        "mean_rate_bps",
        "mean_utility",
        "mean_delay_s",
        "mean_finite_delay_s",
        "stable_fraction",
        "converged_drops",
        "failed_drops",
    }


def test_baseline_run_has_no_traces():
    res = run_experiment(_tiny_config(algorithm="CLA"))
    assert res.mean_utility_trace == []
    assert res.strategy_change_trace == []
    assert res.converged_at == []
    assert len(res.rows) == 2 * 3


def test_failed_drops_are_recorded_not_fatal(monkeypatch):
    import backhaulsim.harness as hmod

    real = hmod.run_drop

    def flaky(config, drop):
        if drop == 1:
            raise RuntimeError("synthetic drop failure")
        return real(config, drop)

    monkeypatch.setattr(hmod, "run_drop", flaky)
    res = run_experiment(_tiny_config(algorithm="CLA", drops=3))
    assert res.failures == [(1, "RuntimeError: synthetic drop failure")]
    assert res.summary["failed_drops"] == 1.0
    assert {r.drop for r in res.rows} == {0, 2}


def test_sweep_applies_parameter_per_point():
    cfg = _tiny_config(algorithm="CLA", drops=1)
    points = run_sweep(cfg, "scenario.mues_per_sector", ["2", "4"])
    assert [label for label, _ in points] == ["2", "4"]
    assert len(points[0][1].rows) == 2
    assert len(points[1][1].rows) == 4


# -- metrics ---------------------------------------------------------------------------


def test_cdf_steps():
    assert compute_cdf([1.0, 2.0, 3.0]) == [(1.0, pytest.approx(1 / 3)), (2.0, pytest.approx(2 / 3)), (3.0, 1.0)]
    assert compute_cdf([5.0, 5.0, 5.0]) == [(5.0, 1.0)]
    with pytest.raises(ValueError):
        compute_cdf([])


def test_cdf_tracks_uniform_distribution():
    rng = np.random.default_rng(8)
    samples = rng.random(10_000)
    cdf = compute_cdf(samples)
    gap = max(abs(f - v) for v, f in cdf)
    assert gap < 0.02


def test_best_effort_decile_selection():
    rates = [10.0, 40.0, 30.0, 20.0, 25.0, 5.0, 45.0, 35.0, 15.0, 1.0]
    assert list(best_effort_decile(rates, 0.1)) == [6]
    ranks = list(range(100))
    assert list(best_effort_decile(ranks, 0.1)) == list(range(90, 100))
    # Ties break toward the earlier row.
    assert list(best_effort_decile([7.0, 7.0, 7.0], 1 / 3)) == [0]
    with pytest.raises(ValueError):
        best_effort_decile([1.0, 2.0], 0.1)
    with pytest.raises(ValueError):
        best_effort_decile(rates, 0.0)


def _result_with_rows(rows):
    return RunResult(
        schema_version=1,
        algorithm="CLA",
        mode="ota",
        drops=1,
        iterations=1,
        seed=0,
        rows=rows,
        mean_utility_trace=[],
        strategy_change_trace=[],
        converged_at=[],
        failures=[],
        summary={},
    )


def _row(dist, rate, delay=1e-3):
    return MueRow(0, 1, 0, dist, rate, delay, 1.0)


def test_distance_binned_throughput():
    res = _result_with_rows([_row(0.05, 10.0), _row(0.08, 30.0), _row(0.95, 4.0), _row(1.0, 8.0)])
    bins = distance_binned_throughput(res, n_bins=10)
    assert len(bins) == 10
    assert bins[0] == (pytest.approx(0.05), pytest.approx(20.0))
    assert bins[9] == (pytest.approx(0.95), pytest.approx(6.0))
    assert all(v is None for _, v in bins[1:9])
    with pytest.raises(ValueError):
        distance_binned_throughput(res, n_bins=0)


# -- persistence --------------------------------------------------------------------------


def test_json_round_trip_preserves_infinities(tmp_path):
    res = _result_with_rows([_row(0.5, 1e5), _row(0.6, 2e5, delay=math.inf)])
    res.summary = {"mean_rate_bps": 1.5e5, "mean_delay_s": math.inf}
    res.converged_at = [None]
    res.failures = [(3, "boom")]
    path = export(res, "json", tmp_path / "out.json")
    back = import_json(path)
    assert back.rows == res.rows
    assert math.isinf(back.rows[1].delay_s)
    assert back.summary["mean_delay_s"] == math.inf
    assert back.converged_at == [None]
    assert back.failures == [(3, "boom")]


def test_round_trip_of_real_run():
    res = run_experiment(_tiny_config())
    back = result_from_dict(result_to_dict(res))
    assert back.rows == res.rows
    assert back.summary == pytest.approx(res.summary)
    assert back.converged_at == res.converged_at


def test_schema_version_is_checked():
    payload = result_to_dict(_result_with_rows([]))
    payload["schema_version"] = 99
    with pytest.raises(ValueError):
        result_from_dict(payload)


def test_csv_export(tmp_path):
    res = _result_with_rows([_row(0.5, 1e5), _row(0.6, 2e5, delay=math.inf)])
    path = export(res, "csv", tmp_path / "rows.csv")
    lines = path.read_text().strip().splitlines()
    assert lines[0].split(",") == CSV_HEADER
    assert len(lines) == 3
    assert lines[2].split(",")[5] == "inf"
    with pytest.raises(ValueError):
        export(res, "parquet", tmp_path / "rows.parquet")
