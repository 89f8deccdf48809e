"""Seeded experiment suites with CSV persistence.

Every runner follows the same shape: per trial, derive independent seed
streams for the planted target, the data draw, and the subroutine inits from
``base_seed + trial_index``; solve; append one trial row. Mean/std summary
rows (sample standard deviation, 0 for a single trial) close out each
variant. Solver failures abort the trial and land as failure rows, never as
silent skips. All numeric cells are printed with 17 significant digits, so a
rerun with the same config and seed reproduces the CSV byte-for-byte except
for the wall-time column.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds as bnd
from .config import SCHEMA_VERSION, ExperimentConfig
from .datagen import (
    Dataset,
    GroundTruth,
    NoiseSpec,
    Profile,
    generate_w_star,
    make_dataset,
)
from .linalg import (
    RankDeficientError,
    SvdConvergenceError,
    ZeroMatrixError,
    singular_gap,
    singular_values,
    svd,
)
from .solver import (
    DivergenceError,
    SolveTrace,
    make_allocation,
    reconstruct_w,
    solve_exact,
    solve_inexact,
    training_error,
)

NOT_REACHED = "not_reached"

SOLVER_ERRORS = (
    DivergenceError,
    ZeroMatrixError,
    RankDeficientError,
    SvdConvergenceError,
    ValueError,
)

ALLOC_COLUMNS = [
    "schema_version", "config_hash", "experiment", "row_kind", "strategy",
    "trial_index", "seed", "m", "d", "n", "r_star", "r", "profile",
    "noise_kind", "noise_kappa", "total_budget", "budgets",
    "iters_per_component", "delta_fros", "residuals", "train_err",
    "recon_err", "train_err_std", "recon_err_std", "wall_ms", "note",
]
PROFILE_COLUMNS = [
    "schema_version", "config_hash", "experiment", "row_kind", "profile",
    "trial_index", "seed", "m", "d", "n", "r_star", "r", "strategy",
    "total_budget", "gap_guards", "sigma_mismatch", "delta_fros", "train_err",
    "recon_err", "train_err_std", "recon_err_std", "wall_ms", "note",
]
NOISE_COLUMNS = [
    "schema_version", "config_hash", "experiment", "row_kind", "noise_kind",
    "noise_kappa", "trial_index", "seed", "m", "d", "n", "r_star", "r",
    "strategy", "total_budget", "corrupted_entries", "train_err", "recon_err",
    "train_err_std", "recon_err_std", "wall_ms", "note",
]
THRESHOLD_COLUMNS = [
    "schema_version", "config_hash", "experiment", "row_kind", "strategy",
    "threshold", "trial_index", "seed", "budget_grid", "iters_to_threshold",
    "recon_err_final", "mean_iters", "std_iters", "reached_count", "wall_ms",
    "note",
]
BOUNDS_COLUMNS = [
    "schema_version", "config_hash", "experiment", "row_kind", "trial_index",
    "seed", "m", "d", "n", "r_star", "r", "profile", "applicable",
    "conditions_all_ok", "conditions_true_count", "training_bound",
    "observed_training_err", "training_margin", "parameter_bound",
    "observed_recon_err", "parameter_margin", "min_component_margin",
    "noisy_deterministic_bound", "wall_ms", "note",
]

CSV_COLUMNS = {
    "alloc": ALLOC_COLUMNS,
    "profile": PROFILE_COLUMNS,
    "noise": NOISE_COLUMNS,
    "threshold": THRESHOLD_COLUMNS,
    "bounds": BOUNDS_COLUMNS,
}

# Columns that may differ between reruns of the same config (timing only).
TIMING_COLUMNS = ("wall_ms",)


def fmt(value) -> str:
    """Render one CSV cell; floats get 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(fmt(v) for v in value)
    return str(value)


def write_rows(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row.get(col)) for col in columns])


def mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1))


@dataclass(frozen=True)
class TrialRecord:
    """Observables of one solved trial."""

    trial_index: int
    seed: int
    label: str
    delta_fros: list[float]
    train_err: float
    recon_err: float
    iters: list[int]
    wall_ms: float


def trial_streams(base_seed: int, trial: int):
    """Independent (target, data, subroutine) seed streams for one trial."""
    trial_seed = base_seed + trial
    w_ss, data_ss, gd_ss = np.random.SeedSequence(trial_seed).spawn(3)
    return trial_seed, w_ss, data_ss, gd_ss


def _instance(cfg: ExperimentConfig, trial: int, profile=None, noise=None):
    trial_seed, w_ss, data_ss, gd_ss = trial_streams(cfg.base_seed, trial)
    gt = generate_w_star(
        cfg.m, cfg.d, cfg.r_star, profile if profile is not None else cfg.profile,
        cfg.target_fro, w_ss,
    )
    ds = make_dataset(gt, cfg.n_resolved, noise if noise is not None else cfg.noise, data_ss)
    return trial_seed, gt, ds, gd_ss


def _solve_trial(
    cfg: ExperimentConfig, gt: GroundTruth, ds: Dataset, gd_ss, strategy: str,
    trial_index: int, seed: int, label: str,
    total_budget: int | None = None,
) -> tuple[SolveTrace, TrialRecord]:
    start = time.perf_counter()
    plan = make_allocation(strategy, cfg.r, total_budget or cfg.total_budget)
    trace = solve_inexact(ds.x, ds.y, cfg.r, plan, cfg.gd, gd_ss)
    w_hat = reconstruct_w(trace)
    record = TrialRecord(
        trial_index=trial_index,
        seed=seed,
        label=label,
        delta_fros=trace.delta_fros,
        train_err=float(np.linalg.norm(ds.y - w_hat @ ds.x)),
        recon_err=float(np.linalg.norm(gt.w_star - w_hat)),
        iters=[c.iters_used for c in trace.components],
        wall_ms=(time.perf_counter() - start) * 1e3,
    )
    return trace, record


def _base_row(cfg: ExperimentConfig, experiment: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config_hash": cfg.config_hash(),
        "experiment": experiment,
        "m": cfg.m,
        "d": cfg.d,
        "n": cfg.n_resolved,
        "r_star": cfg.r_star,
        "r": cfg.r,
    }


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_alloc_experiment(cfg: ExperimentConfig) -> Path:
    """Allocation-strategy comparison under a fixed total iteration budget."""
    rows: list[dict] = []
    for strategy in cfg.strategies:
        train_errs: list[float] = []
        recon_errs: list[float] = []
        for trial in range(cfg.trials):
            row = _base_row(cfg, "alloc")
            row.update(
                row_kind="trial", strategy=strategy, trial_index=trial,
                profile=cfg.profile.value, noise_kind=cfg.noise.kind,
                noise_kappa=cfg.noise.kappa, total_budget=cfg.total_budget,
            )
            try:
                trial_seed, gt, ds, gd_ss = _instance(cfg, trial)
                row["seed"] = trial_seed
                trace, rec = _solve_trial(cfg, gt, ds, gd_ss, strategy,
                                          trial, trial_seed, strategy)
                row.update(
                    budgets=list(trace.allocation.budgets),
                    iters_per_component=rec.iters,
                    delta_fros=rec.delta_fros,
                    residuals=trace.residuals,
                    train_err=rec.train_err, recon_err=rec.recon_err,
                    wall_ms=rec.wall_ms,
                )
                train_errs.append(rec.train_err)
                recon_errs.append(rec.recon_err)
            except SOLVER_ERRORS as exc:
                row.update(row_kind="failure", note=str(exc))
            rows.append(row)
        rows.append(_summary_row(cfg, "alloc", strategy, train_errs, recon_errs))
    path = _out_dir(cfg) / "alloc.csv"
    write_rows(path, ALLOC_COLUMNS, rows)
    return path


def _summary_row(
    cfg: ExperimentConfig, experiment: str, label: str,
    train_errs: list[float], recon_errs: list[float], **extra,
) -> dict:
    row = _base_row(cfg, experiment)
    row.update(row_kind="summary", total_budget=cfg.total_budget, **extra)
    if experiment == "alloc":
        row.update(strategy=label, profile=cfg.profile.value,
                   noise_kind=cfg.noise.kind, noise_kappa=cfg.noise.kappa)
    elif experiment == "profile":
        row.update(profile=label, strategy=cfg.strategies[0])
    elif experiment == "noise":
        kind, kappa = label.split(":")
        row.update(noise_kind=kind, noise_kappa=float(kappa), strategy=cfg.strategies[0])
    if train_errs:
        t_mean, t_std = mean_std(train_errs)
        r_mean, r_std = mean_std(recon_errs)
        row.update(train_err=t_mean, train_err_std=t_std,
                   recon_err=r_mean, recon_err_std=r_std)
    else:
        row["note"] = "no successful trials"
    return row


def run_profile_experiment(cfg: ExperimentConfig) -> Path:
    """Singular-value profile comparison at matched Frobenius norm and budget.

    Uses the first configured strategy for every profile. Each trial row
    carries the gap guards of the planted spectrum and a sanity column with
    the worst relative mismatch between planted and measured singular values.
    """
    strategy = cfg.strategies[0]
    rows: list[dict] = []
    for profile in (Profile.POWER_LAW, Profile.EXPONENTIAL_DECAY, Profile.UNIFORM):
        train_errs: list[float] = []
        recon_errs: list[float] = []
        for trial in range(cfg.trials):
            row = _base_row(cfg, "profile")
            row.update(
                row_kind="trial", profile=profile.value, trial_index=trial,
                strategy=strategy, total_budget=cfg.total_budget,
            )
            try:
                trial_seed, gt, ds, gd_ss = _instance(cfg, trial, profile=profile)
                row["seed"] = trial_seed
                measured = singular_values(gt.w_star)[: cfg.r_star]
                mismatch = float(np.max(np.abs(measured - gt.sigmas) / gt.sigmas))
                trace, rec = _solve_trial(cfg, gt, ds, gd_ss, strategy,
                                          trial, trial_seed, profile.value)
                row.update(
                    gap_guards=[singular_gap(gt.sigmas, k) for k in range(1, cfg.r_star + 1)],
                    sigma_mismatch=mismatch,
                    delta_fros=rec.delta_fros,
                    train_err=rec.train_err, recon_err=rec.recon_err,
                    wall_ms=rec.wall_ms,
                )
                train_errs.append(rec.train_err)
                recon_errs.append(rec.recon_err)
            except SOLVER_ERRORS as exc:
                row.update(row_kind="failure", note=str(exc))
            rows.append(row)
        rows.append(_summary_row(cfg, "profile", profile.value, train_errs, recon_errs))
    path = _out_dir(cfg) / "profile.csv"
    write_rows(path, PROFILE_COLUMNS, rows)
    return path


def _noise_variants(cfg: ExperimentConfig) -> list[NoiseSpec]:
    variants = [
        NoiseSpec(kind="gaussian", kappa=k) if k > 0 else NoiseSpec()
        for k in cfg.gaussian_kappas
    ]
    variants += [NoiseSpec(kind="sparse", kappa=k) for k in cfg.sparse_kappas]
    return variants


def run_noise_experiment(cfg: ExperimentConfig) -> Path:
    """Noise-level sweep over the Gaussian and sparse families."""
    strategy = cfg.strategies[0]
    rows: list[dict] = []
    for spec in _noise_variants(cfg):
        family = "gaussian" if spec.kind in ("gaussian", "noiseless") else "sparse"
        train_errs: list[float] = []
        recon_errs: list[float] = []
        for trial in range(cfg.trials):
            row = _base_row(cfg, "noise")
            row.update(
                row_kind="trial", noise_kind=family, noise_kappa=spec.kappa,
                trial_index=trial, strategy=strategy, total_budget=cfg.total_budget,
            )
            try:
                trial_seed, gt, ds, gd_ss = _instance(cfg, trial, noise=spec)
                row["seed"] = trial_seed
                _, rec = _solve_trial(cfg, gt, ds, gd_ss, strategy,
                                      trial, trial_seed, f"{family}:{spec.kappa}")
                row.update(
                    corrupted_entries=ds.corrupted_entries,
                    train_err=rec.train_err, recon_err=rec.recon_err,
                    wall_ms=rec.wall_ms,
                )
                train_errs.append(rec.train_err)
                recon_errs.append(rec.recon_err)
            except SOLVER_ERRORS as exc:
                row.update(row_kind="failure", note=str(exc))
            rows.append(row)
        rows.append(
            _summary_row(cfg, "noise", f"{family}:{spec.kappa}", train_errs, recon_errs)
        )
    path = _out_dir(cfg) / "noise.csv"
    write_rows(path, NOISE_COLUMNS, rows)
    return path


def budget_grid(r: int, cap: int) -> list[int]:
    """Geometric budget grid r * 2^i, i = 0..13, clamped at the cap."""
    grid = sorted({min(r * 2**i, cap) for i in range(14)})
    return grid


def run_threshold_experiment(cfg: ExperimentConfig) -> Path:
    """Iterations needed to push the reconstruction error under each threshold.

    Budgets grow along a geometric grid until every threshold is reached or
    the cap ends the search; unreached thresholds record a sentinel. Summary
    means count unreached trials at the cap value, which understates the true
    requirement and so never flatters a slow strategy.
    """
    grid = budget_grid(cfg.r, cfg.budget_cap)
    rows: list[dict] = []
    for strategy in cfg.strategies:
        per_threshold: dict[float, list[int | None]] = {t: [] for t in cfg.thresholds}
        for trial in range(cfg.trials):
            start = time.perf_counter()
            note = None
            reached: dict[float, int] = {}
            final_err = None
            try:
                trial_seed, gt, ds, gd_ss = _instance(cfg, trial)
                for budget in grid:
                    plan = make_allocation(strategy, cfg.r, budget)
                    trace = solve_inexact(ds.x, ds.y, cfg.r, plan, cfg.gd, gd_ss)
                    final_err = float(np.linalg.norm(gt.w_star - reconstruct_w(trace)))
                    for t in cfg.thresholds:
                        if t not in reached and final_err <= t:
                            reached[t] = budget
                    if len(reached) == len(cfg.thresholds):
                        break
            except SOLVER_ERRORS as exc:
                note = str(exc)
            wall = (time.perf_counter() - start) * 1e3
            for t in cfg.thresholds:
                row = {
                    "schema_version": SCHEMA_VERSION,
                    "config_hash": cfg.config_hash(),
                    "experiment": "threshold",
                    "row_kind": "failure" if note else "trial",
                    "strategy": strategy,
                    "threshold": t,
                    "trial_index": trial,
                    "seed": cfg.base_seed + trial,
                    "budget_grid": grid,
                    "recon_err_final": final_err,
                    "wall_ms": wall,
                    "note": note,
                }
                if note is None:
                    row["iters_to_threshold"] = reached.get(t, NOT_REACHED)
                    per_threshold[t].append(reached.get(t))
                rows.append(row)
        for t in cfg.thresholds:
            outcomes = per_threshold[t]
            effective = [v if v is not None else cfg.budget_cap for v in outcomes]
            row = {
                "schema_version": SCHEMA_VERSION,
                "config_hash": cfg.config_hash(),
                "experiment": "threshold",
                "row_kind": "summary",
                "strategy": strategy,
                "threshold": t,
                "budget_grid": grid,
                "reached_count": sum(v is not None for v in outcomes),
            }
            if effective:
                mean, std = mean_std([float(v) for v in effective])
                row.update(mean_iters=mean, std_iters=std)
            else:
                row["note"] = "no successful trials"
            rows.append(row)
    path = _out_dir(cfg) / "threshold.csv"
    write_rows(path, THRESHOLD_COLUMNS, rows)
    return path


def run_bounds_experiment(cfg: ExperimentConfig) -> tuple[Path, Path]:
    """Paired exact/inexact runs with bound values next to observed errors.

    Emits one CSV row per trial plus a JSON file with the full reports.
    Degenerate spectra (zero gaps, as with the uniform profile) surface as
    rows marked inapplicable instead of crashing.
    """
    strategy = cfg.strategies[0]
    rows: list[dict] = []
    reports: list[dict] = []
    for trial in range(cfg.trials):
        start = time.perf_counter()
        row = _base_row(cfg, "bounds")
        row.update(row_kind="trial", trial_index=trial, profile=cfg.profile.value)
        try:
            trial_seed, gt, ds, gd_ss = _instance(cfg, trial)
            row["seed"] = trial_seed
            # The validity conditions need strictly positive gaps in the
            # planted spectrum; the uniform profile has none, and Y's
            # empirical near-ties would only inflate the bound meaninglessly.
            for k in range(1, min(cfg.r, gt.rank) + 1):
                if singular_gap(gt.sigmas, k) == 0.0:
                    raise bnd.DegenerateGapError(
                        f"planted spectrum has zero gap at index {k}"
                    )
            exact = solve_exact(ds.x, ds.y, cfg.r)
            plan = make_allocation(strategy, cfg.r, cfg.total_budget)
            inexact = solve_inexact(ds.x, ds.y, cfg.r, plan, cfg.gd, gd_ss)

            sx = singular_values(ds.x)
            res = svd(ds.y)
            p = res.numerical_rank()
            inputs = bnd.BoundInputs(
                sigmas_y=res.singular_values[:p],
                delta_fros=np.concatenate([[0.0], inexact.delta_fros]),
                sigma_max_x=float(sx[0]),
                sigma_min_x=float(sx[min(ds.x.shape) - 1]),
                r=cfg.r,
                p=p,
                sigmas_w=gt.sigmas,
            )
            kappa = float(sx[0] / sx[min(ds.x.shape) - 1])
            w_hat = reconstruct_w(inexact)
            observed_components = [
                float(np.linalg.norm(np.outer(e.b, e.a) - np.outer(i.b, i.a)))
                for e, i in zip(exact.components, inexact.components)
            ]
            report = bnd.build_report(
                inputs,
                kappa,
                observed_training_err=training_error(w_hat, ds.x, ds.y),
                observed_recon_err=float(np.linalg.norm(gt.w_star - w_hat)),
                observed_component_errs=observed_components,
                epsilon=cfg.noise.kappa if cfg.noise.kind != "noiseless" else 0.0,
                n=cfg.n_resolved,
            )
            reports.append({"trial_index": trial, "seed": trial_seed,
                            "applicable": True, **report.to_dict()})
            row.update(
                applicable=True,
                conditions_all_ok=all(report.condition_ok),
                conditions_true_count=sum(report.condition_ok),
                training_bound=report.training_bound,
                observed_training_err=report.observed_training_err,
                training_margin=report.training_margin,
                parameter_bound=report.parameter_bound,
                observed_recon_err=report.observed_recon_err,
                parameter_margin=report.parameter_margin,
                min_component_margin=min(report.component_margins),
                noisy_deterministic_bound=report.noisy_deterministic_bound,
            )
        except bnd.DegenerateGapError as exc:
            row.update(applicable=False, note=f"bound inapplicable: {exc}")
            reports.append({"trial_index": trial, "applicable": False, "note": str(exc)})
        except SOLVER_ERRORS as exc:
            row.update(row_kind="failure", note=str(exc))
        row["wall_ms"] = (time.perf_counter() - start) * 1e3
        rows.append(row)
    out = _out_dir(cfg)
    path = out / "bounds.csv"
    write_rows(path, BOUNDS_COLUMNS, rows)
    report_path = out / "bound_reports.json"
    with open(report_path, "w") as fh:
        json.dump(reports, fh, indent=2, default=float)
    return path, report_path


RUNNERS = {
    "alloc": run_alloc_experiment,
    "profile": run_profile_experiment,
    "noise": run_noise_experiment,
    "threshold": run_threshold_experiment,
    "bounds": run_bounds_experiment,
}
