"""Command-line entry point.

Subcommands: ``gen`` (write a dataset to matrix containers), ``solve`` (one
exact or inexact run, trace to JSON), ``bounds`` (paired runs with bound
reports), and ``exp-alloc`` / ``exp-profile`` / ``exp-noise`` /
``exp-threshold`` (the CSV experiment suites). Every subcommand takes
``--config FILE`` plus the overrides ``--seed``, ``--trials``, ``--out``.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bounds import DegenerateGapError
from .config import (
    SCHEMA_VERSION,
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    load_config,
)
from .datagen import generate_w_star, make_dataset
from .experiments import RUNNERS
from .linalg import RankDeficientError, SvdConvergenceError, ZeroMatrixError
from .matio import MatrixFormatError, read_matrix, write_matrix
from .solver import (
    DivergenceError,
    SolveTrace,
    make_allocation,
    solve_exact,
    solve_inexact,
)

NUMERICAL_ERRORS = (
    DivergenceError,
    ZeroMatrixError,
    RankDeficientError,
    SvdConvergenceError,
    DegenerateGapError,
)

# Fixed instance for `solve` without explicit --x/--y inputs.
TOY_SEED = 20240101
TOY_DIMS = dict(m=6, d=8, n=16, r_star=3)


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="override base seed")
    p.add_argument("--trials", type=int, help="override trial count")
    p.add_argument("--out", help="override output directory")


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return apply_overrides(cfg, seed=args.seed, trials=args.trials, out=args.out)


def _trace_payload(trace: SolveTrace) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": trace.mode,
        "y_fro_initial": trace.y_fro_initial,
        "rank_exhausted": trace.rank_exhausted,
        "allocation": (
            None if trace.allocation is None
            else {"strategy": trace.allocation.strategy,
                  "budgets": list(trace.allocation.budgets)}
        ),
        "components": [
            {
                "a": c.a.tolist(),
                "b": c.b.tolist(),
                "delta_fro": c.delta_fro,
                "iters_used": c.iters_used,
                "residual_fro_after": c.residual_fro_after,
            }
            for c in trace.components
        ],
    }


def _cmd_gen(args) -> int:
    cfg = _load(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ss = np.random.SeedSequence(cfg.base_seed)
    w_ss, data_ss = ss.spawn(2)
    gt = generate_w_star(cfg.m, cfg.d, cfg.r_star, cfg.profile, cfg.target_fro, w_ss)
    ds = make_dataset(gt, cfg.n_resolved, cfg.noise, data_ss)
    write_matrix(out / "w_star.dmat", gt.w_star)
    write_matrix(out / "x.dmat", ds.x)
    write_matrix(out / "y.dmat", ds.y)
    write_matrix(out / "y_star.dmat", ds.y_star)
    meta = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": cfg.config_hash(),
        "m": cfg.m, "d": cfg.d, "n": cfg.n_resolved,
        "r_star": cfg.r_star, "profile": cfg.profile.value,
        "noise": {"kind": cfg.noise.kind, "kappa": cfg.noise.kappa,
                  "sparsity": cfg.noise.sparsity},
        "seed": cfg.base_seed,
        "sigmas": gt.sigmas.tolist(),
        "corrupted_entries": ds.corrupted_entries,
    }
    (out / "dataset.json").write_text(json.dumps(meta, indent=2))
    print(f"wrote dataset to {out}")
    return 0


def _cmd_solve(args) -> int:
    cfg = _load(args)
    if (args.x is None) != (args.y is None):
        raise ConfigError("--x and --y must be given together")
    if args.x is not None:
        x = read_matrix(args.x)
        y = read_matrix(args.y)
    else:
        ss = np.random.SeedSequence(TOY_SEED)
        w_ss, data_ss = ss.spawn(2)
        gt = generate_w_star(
            TOY_DIMS["m"], TOY_DIMS["d"], TOY_DIMS["r_star"], cfg.profile,
            cfg.target_fro, w_ss,
        )
        ds = make_dataset(gt, TOY_DIMS["n"], cfg.noise, data_ss)
        x, y = ds.x, ds.y
    r = args.r if args.r is not None else min(3, min(x.shape[0], y.shape[0]))
    if args.mode == "exact":
        trace = solve_exact(x, y, r)
    else:
        total = args.budget if args.budget is not None else 100 * r
        plan = make_allocation(args.strategy, r, total)
        trace = solve_inexact(x, y, r, plan, cfg.gd, cfg.base_seed)
    out = Path(args.trace_out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(_trace_payload(trace), indent=2))
    print(f"wrote {trace.mode} trace with {len(trace.components)} components to {out}")
    return 0


def _cmd_experiment(args) -> int:
    cfg = _load(args)
    cfg = replace(cfg, experiment=args.experiment_name)
    runner = RUNNERS[cfg.experiment]
    result = runner(cfg)
    paths = result if isinstance(result, tuple) else (result,)
    for p in paths:
        print(f"wrote {p}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="seqrank1", description=__doc__)
    parser.add_argument(
        "--version", action="version",
        version=f"seqrank1 0.1.0 (schema {SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_gen = sub.add_parser("gen", help="generate a dataset and write matrix containers")
    _add_common(p_gen)
    p_gen.set_defaults(func=_cmd_gen)

    p_solve = sub.add_parser("solve", help="run one solve and dump the trace")
    _add_common(p_solve)
    p_solve.add_argument("--mode", choices=("exact", "inexact"), required=True)
    p_solve.add_argument("--r", type=int, help="number of components")
    p_solve.add_argument("--x", help="input matrix container (with --y)")
    p_solve.add_argument("--y", help="label matrix container (with --x)")
    p_solve.add_argument("--budget", type=int, help="total iterations (inexact)")
    p_solve.add_argument("--strategy", default="equal",
                         choices=("equal", "more_first", "less_first"))
    p_solve.add_argument("--trace-out", default="trace.json", help="trace file path")
    p_solve.set_defaults(func=_cmd_solve)

    for name, exp in (
        ("bounds", "bounds"),
        ("exp-alloc", "alloc"),
        ("exp-profile", "profile"),
        ("exp-noise", "noise"),
        ("exp-threshold", "threshold"),
    ):
        p = sub.add_parser(name, help=f"run the {exp} experiment suite")
        _add_common(p)
        p.set_defaults(func=_cmd_experiment, experiment_name=exp)
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ConfigError, MatrixFormatError, FileNotFoundError) as exc:
        print(f"seqrank1: config error: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"seqrank1: numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())
