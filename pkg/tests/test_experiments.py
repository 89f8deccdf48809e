import csv
import json
from pathlib import Path

import pytest

from seqrank1.config import config_from_dict
from seqrank1.experiments import (
    NOT_REACHED,
    TIMING_COLUMNS,
    budget_grid,
    mean_std,
    run_alloc_experiment,
    run_bounds_experiment,
    run_noise_experiment,
    run_profile_experiment,
    run_threshold_experiment,
)

TINY = {
    "m": 12, "d": 20, "n": 40, "r_star": 3, "r": 3,
    "total_budget": 90, "trials": 2, "base_seed": 7,
    "gd": {"max_iters": 10},
}


def tiny_config(out_dir, **extra):
    raw = dict(TINY)
    raw.update(extra)
    raw["output_dir"] = str(out_dir)
    return config_from_dict(raw)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def strip_timing(rows):
    return [{k: v for k, v in row.items() if k not in TIMING_COLUMNS} for row in rows]


class TestAllocExperiment:
    def test_row_counts_and_summary(self, tmp_path):
        cfg = tiny_config(tmp_path)
        rows = read_rows(run_alloc_experiment(cfg))
        trials = [r for r in rows if r["row_kind"] == "trial"]
        summaries = [r for r in rows if r["row_kind"] == "summary"]
        assert len(trials) == 3 * cfg.trials
        assert len(summaries) == 3
        assert all(r["schema_version"] == "1" for r in rows)
        assert len({r["config_hash"] for r in rows}) == 1

    def test_single_trial_std_zero(self, tmp_path):
        cfg = tiny_config(tmp_path, trials=1)
        rows = read_rows(run_alloc_experiment(cfg))
        for row in rows:
            if row["row_kind"] == "summary":
                assert float(row["train_err_std"]) == 0.0
                assert float(row["recon_err_std"]) == 0.0

    def test_rerun_identical_modulo_timing(self, tmp_path):
        cfg1 = tiny_config(tmp_path / "a")
        cfg2 = tiny_config(tmp_path / "b")
        rows1 = strip_timing(read_rows(run_alloc_experiment(cfg1)))
        rows2 = strip_timing(read_rows(run_alloc_experiment(cfg2)))
        assert rows1 == rows2

    def test_stays_inside_output_dir(self, tmp_path):
        out = tmp_path / "only_here"
        cfg = tiny_config(out)
        run_alloc_experiment(cfg)
        produced = {p.name for p in tmp_path.rglob("*") if p.is_file()}
        assert produced == {"alloc.csv"}
        assert (out / "alloc.csv").exists()


class TestProfileExperiment:
    def test_three_profiles_with_sanity_column(self, tmp_path):
        cfg = tiny_config(tmp_path, experiment="profile")
        rows = read_rows(run_profile_experiment(cfg))
        trials = [r for r in rows if r["row_kind"] == "trial"]
        assert len(trials) == 3 * cfg.trials
        assert {r["profile"] for r in trials} == {
            "power_law", "exponential_decay", "uniform"
        }
        for r in trials:
            assert float(r["sigma_mismatch"]) <= 1e-8
            assert len(r["gap_guards"].split(";")) == cfg.r_star


class TestNoiseExperiment:
    def test_families_and_counts(self, tmp_path):
        cfg = tiny_config(
            tmp_path, experiment="noise",
            gaussian_kappas=[0.0, 0.1], sparse_kappas=[1.0],
        )
        rows = read_rows(run_noise_experiment(cfg))
        trials = [r for r in rows if r["row_kind"] == "trial"]
        assert len(trials) == 3 * cfg.trials
        sparse = [r for r in trials if r["noise_kind"] == "sparse"]
        m, n = cfg.m, cfg.n_resolved
        assert all(int(r["corrupted_entries"]) == int(0.05 * m * n) for r in sparse)
        zero = [r for r in trials if r["noise_kind"] == "gaussian"
                and float(r["noise_kappa"]) == 0.0]
        assert all(int(r["corrupted_entries"]) == 0 for r in zero)


class TestThresholdExperiment:
    def test_grid_and_sentinels(self, tmp_path):
        cfg = tiny_config(
            tmp_path, experiment="threshold",
            thresholds=[1e-9, 80.0], budget_cap=120,
        )
        rows = read_rows(run_threshold_experiment(cfg))
        trials = [r for r in rows if r["row_kind"] == "trial"]
        # unreachable threshold records the sentinel, loose one a grid budget
        tight = [r for r in trials if float(r["threshold"]) == 1e-9]
        loose = [r for r in trials if float(r["threshold"]) == 80.0]
        assert all(r["iters_to_threshold"] == NOT_REACHED for r in tight)
        assert all(r["iters_to_threshold"] != NOT_REACHED for r in loose)
        summaries = [r for r in rows if r["row_kind"] == "summary"]
        for s in summaries:
            if float(s["threshold"]) == 1e-9:
                assert s["reached_count"] == "0"
                assert float(s["mean_iters"]) == cfg.budget_cap

    def test_budget_grid_caps(self):
        grid = budget_grid(20, 10000)
        assert grid[0] == 20
        assert grid[-1] == 10000
        assert all(b <= 10000 for b in grid)
        assert grid == sorted(set(grid))

    def test_vacuous_threshold_hits_smallest_grid_budget(self, tmp_path):
        # threshold above the target norm is satisfied immediately
        cfg = tiny_config(tmp_path, experiment="threshold",
                          thresholds=[150.0], budget_cap=96)
        rows = read_rows(run_threshold_experiment(cfg))
        trials = [r for r in rows if r["row_kind"] == "trial"]
        smallest = budget_grid(cfg.r, cfg.budget_cap)[0]
        assert all(int(r["iters_to_threshold"]) == smallest for r in trials)


class TestBoundsExperiment:
    def test_reports_and_margins(self, tmp_path):
        cfg = tiny_config(tmp_path, experiment="bounds", total_budget=3000,
                          gd={"max_iters": 10, "grad_tol": 1e-12})
        csv_path, report_path = run_bounds_experiment(cfg)
        rows = read_rows(csv_path)
        assert len(rows) == cfg.trials
        reports = json.loads(Path(report_path).read_text())
        assert len(reports) == cfg.trials
        for row in rows:
            assert row["applicable"] == "true"
            assert float(row["training_margin"]) >= -1e-8

    def test_uniform_profile_rows_inapplicable(self, tmp_path):
        cfg = tiny_config(tmp_path, experiment="bounds", profile="uniform",
                          total_budget=30)
        csv_path, _ = run_bounds_experiment(cfg)
        rows = read_rows(csv_path)
        assert all(r["applicable"] == "false" for r in rows)
        assert all("inapplicable" in r["note"] for r in rows)


def test_solver_failure_becomes_failure_row(tmp_path):
    # absurd fixed step sizes make the subroutine diverge in every trial
    cfg = tiny_config(tmp_path, gd={"step_a": 1e9, "step_b": 1e9, "max_iters": 10})
    rows = read_rows(run_alloc_experiment(cfg))
    failures = [r for r in rows if r["row_kind"] == "failure"]
    assert len(failures) == 3 * cfg.trials
    assert all("diverged" in r["note"] for r in failures)
    summaries = [r for r in rows if r["row_kind"] == "summary"]
    assert all(r["note"] == "no successful trials" for r in summaries)


def test_mean_std_single_value():
    assert mean_std([4.2]) == (4.2, 0.0)


def test_mean_std_sample_std():
    mean, std = mean_std([1.0, 3.0])
    assert mean == 2.0
    assert std == pytest.approx(2.0 ** 0.5)
