"""Figure rendering for experiment CSVs.

One figure per job: mean lines (or bars) with a +-1 standard-deviation band
whenever more than one trial is present. Error axes default to log scale.
Colors come from a fixed colorblind-safe palette keyed by series name so the
same strategy or profile looks identical across figures, and every figure
carries the CSV's config hash in its caption.
"""
from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .schemas import load_rows, split_floats

# Okabe-Ito palette, keyed by series name for cross-figure consistency.
PALETTE = {
    "equal": "#0072B2",
    "more_first": "#009E73",
    "less_first": "#D55E00",
    "power_law": "#009E73",
    "exponential_decay": "#0072B2",
    "uniform": "#D55E00",
    "gaussian": "#0072B2",
    "sparse": "#CC79A7",
    "training": "#0072B2",
    "parameter": "#D55E00",
}
FALLBACK_COLOR = "#999999"


@dataclass(frozen=True)
class PlotJob:
    csv_path: str
    figure_kind: str  # alloc_curves | profile_bars | noise_sweep | threshold_bars | bound_margins
    output_image_path: str
    title: str | None = None
    log_y: bool = True


@dataclass(frozen=True)
class RenderInfo:
    """What ended up in the figure; returned for callers and tests."""

    path: str
    series_labels: tuple[str, ...]
    annotations: tuple[str, ...] = ()
    config_hash: str = ""
    band_drawn: bool = False


def _color(name: str) -> str:
    return PALETTE.get(name, FALLBACK_COLOR)


def _finish(fig, ax, job: PlotJob, default_title: str, config_hash: str):
    ax.set_title(job.title or default_title)
    fig.text(0.99, 0.01, f"config {config_hash}", ha="right", va="bottom",
             fontsize=7, color="#555555")
    fig.tight_layout(rect=(0, 0.03, 1, 1))
    fig.savefig(job.output_image_path, dpi=150)
    plt.close(fig)


def _trial_rows(rows):
    return [r for r in rows if r["row_kind"] == "trial"]


def _summary_rows(rows):
    return [r for r in rows if r["row_kind"] == "summary"]


def _render_alloc_curves(job: PlotJob, rows) -> RenderInfo:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    labels = []
    band = False
    strategies = list(dict.fromkeys(r["strategy"] for r in _trial_rows(rows)))
    for strategy in strategies:
        series = [split_floats(r["residuals"]) for r in _trial_rows(rows)
                  if r["strategy"] == strategy and r["residuals"]]
        if not series:
            continue
        arr = np.array(series)
        x = np.arange(1, arr.shape[1] + 1)
        mean = arr.mean(axis=0)
        ax.plot(x, mean, label=strategy, color=_color(strategy), marker="o", ms=3)
        if arr.shape[0] > 1:
            std = arr.std(axis=0, ddof=1)
            lo = np.maximum(mean - std, np.finfo(float).tiny)
            ax.fill_between(x, lo, mean + std, color=_color(strategy), alpha=0.2, lw=0)
            band = True
        labels.append(strategy)
    ax.set_xlabel("component index")
    ax.set_ylabel("training residual (Frobenius)")
    if job.log_y:
        ax.set_yscale("log")
    ax.legend()
    config_hash = rows[0]["config_hash"]
    _finish(fig, ax, job, "Residual decay per component by allocation strategy", config_hash)
    return RenderInfo(job.output_image_path, tuple(labels), (), config_hash, band)


def _render_profile_bars(job: PlotJob, rows) -> RenderInfo:
    summaries = _summary_rows(rows)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    labels, means, stds = [], [], []
    for r in summaries:
        if not r["recon_err"]:
            continue
        labels.append(r["profile"])
        means.append(float(r["recon_err"]))
        stds.append(float(r["recon_err_std"]))
    trials = len({r["trial_index"] for r in _trial_rows(rows)})
    yerr = stds if trials > 1 else None
    ax.bar(labels, means, yerr=yerr, color=[_color(l) for l in labels], capsize=4)
    ax.set_ylabel("reconstruction error (Frobenius)")
    if job.log_y:
        ax.set_yscale("log")
    config_hash = rows[0]["config_hash"]
    _finish(fig, ax, job, "Reconstruction error by singular-value profile", config_hash)
    return RenderInfo(job.output_image_path, tuple(labels), (), config_hash, yerr is not None)


def _render_noise_sweep(job: PlotJob, rows) -> RenderInfo:
    summaries = [r for r in _summary_rows(rows) if r["recon_err"]]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    labels = []
    band = False
    trials = len({r["trial_index"] for r in _trial_rows(rows)})
    for family in dict.fromkeys(r["noise_kind"] for r in summaries):
        pts = sorted(
            (float(r["noise_kappa"]), float(r["recon_err"]), float(r["recon_err_std"]))
            for r in summaries if r["noise_kind"] == family
        )
        kappas = [p[0] for p in pts]
        means = np.array([p[1] for p in pts])
        stds = np.array([p[2] for p in pts])
        ax.plot(kappas, means, label=family, color=_color(family), marker="s", ms=4)
        if trials > 1:
            lo = np.maximum(means - stds, np.finfo(float).tiny)
            ax.fill_between(kappas, lo, means + stds, color=_color(family),
                            alpha=0.2, lw=0)
            band = True
        labels.append(family)
    ax.set_xlabel("noise scale")
    ax.set_ylabel("reconstruction error (Frobenius)")
    if job.log_y:
        ax.set_yscale("log")
    ax.legend()
    config_hash = rows[0]["config_hash"]
    _finish(fig, ax, job, "Reconstruction error vs noise level", config_hash)
    return RenderInfo(job.output_image_path, tuple(labels), (), config_hash, band)


def _render_threshold_bars(job: PlotJob, rows) -> RenderInfo:
    summaries = _summary_rows(rows)
    trial_rows = _trial_rows(rows)
    thresholds = sorted({float(r["threshold"]) for r in summaries})
    strategies = list(dict.fromkeys(r["strategy"] for r in summaries))
    trials_per = {}
    for r in trial_rows:
        key = (r["strategy"], float(r["threshold"]))
        trials_per[key] = trials_per.get(key, 0) + 1

    fig, ax = plt.subplots(figsize=(7.0, 4.4))
    width = 0.8 / max(len(strategies), 1)
    annotations = []
    for i, strategy in enumerate(strategies):
        xs, ys = [], []
        for j, thr in enumerate(thresholds):
            row = next(
                (r for r in summaries
                 if r["strategy"] == strategy and float(r["threshold"]) == thr),
                None,
            )
            if row is None or not row["mean_iters"]:
                continue
            x = j + (i - (len(strategies) - 1) / 2) * width
            y = float(row["mean_iters"])
            xs.append(x)
            ys.append(y)
            reached = int(row["reached_count"])
            total = trials_per.get((strategy, thr), reached)
            if reached < total:
                note = f"not reached ({total - reached}/{total})"
                ax.annotate(note, (x, y), rotation=90, ha="center", va="bottom",
                            fontsize=7, color="#333333")
                annotations.append(f"{strategy}@{thr}: {note}")
        ax.bar(xs, ys, width=width, label=strategy, color=_color(strategy))
    ax.set_xticks(range(len(thresholds)))
    ax.set_xticklabels([f"{t:g}" for t in thresholds])
    ax.set_xlabel("reconstruction error threshold")
    ax.set_ylabel("mean iterations to reach")
    if job.log_y:
        ax.set_yscale("log")
    ax.legend()
    config_hash = rows[0]["config_hash"]
    _finish(fig, ax, job, "Iterations to reach reconstruction thresholds", config_hash)
    return RenderInfo(job.output_image_path, tuple(strategies), tuple(annotations),
                      config_hash, False)


def _render_bound_margins(job: PlotJob, rows) -> RenderInfo:
    trial_rows = [r for r in rows if r["row_kind"] in ("trial", "failure")]
    fig, ax = plt.subplots(figsize=(6.8, 4.2))
    annotations = []
    xs31, ys31, xs41, ys41 = [], [], [], []
    for r in trial_rows:
        idx = int(r["trial_index"])
        if r["applicable"] == "true" and r["training_margin"]:
            xs31.append(idx)
            ys31.append(float(r["training_margin"]))
            xs41.append(idx)
            ys41.append(float(r["parameter_margin"]))
        else:
            note = "inapplicable"
            ax.annotate(note, (idx, 1.0), rotation=90, ha="center", fontsize=7,
                        color="#333333")
            annotations.append(f"trial {idx}: {note}")
    ax.plot(xs31, ys31, "o", label="training bound margin", color=_color("training"))
    ax.plot(xs41, ys41, "s", label="parameter bound margin", color=_color("parameter"))
    ax.axhline(0.0, color="#555555", lw=0.8, ls="--")
    ax.set_xlabel("trial")
    ax.set_ylabel("bound minus observed error")
    if job.log_y and ys31 and min(ys31 + ys41) > 0:
        ax.set_yscale("log")
    ax.legend()
    config_hash = rows[0]["config_hash"]
    _finish(fig, ax, job, "Bound margins per trial", config_hash)
    return RenderInfo(job.output_image_path, ("training", "parameter"), tuple(annotations),
                      config_hash, False)


_RENDERERS = {
    "alloc_curves": _render_alloc_curves,
    "profile_bars": _render_profile_bars,
    "noise_sweep": _render_noise_sweep,
    "threshold_bars": _render_threshold_bars,
    "bound_margins": _render_bound_margins,
}


def render(job: PlotJob) -> RenderInfo:
    """Render one figure for a validated CSV; never mutates the input."""
    rows = load_rows(job.csv_path, job.figure_kind)
    return _RENDERERS[job.figure_kind](job, rows)
