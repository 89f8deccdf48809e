"""CSV schema validation for the experiment artifacts plotkit consumes.

plotkit only ever reads the documented CSV surfaces; each figure kind is
pinned to one experiment schema and the supported schema version.
"""
from __future__ import annotations

import csv
from pathlib import Path

SUPPORTED_SCHEMA_VERSION = "1"
NOT_REACHED_SENTINEL = "not_reached"

# figure kind -> (experiment value, columns that must be present)
FIGURE_SCHEMAS = {
    "alloc_curves": ("alloc", {"strategy", "residuals", "recon_err", "trial_index"}),
    "profile_bars": ("profile", {"profile", "recon_err", "recon_err_std"}),
    "noise_sweep": ("noise", {"noise_kind", "noise_kappa", "recon_err"}),
    "threshold_bars": ("threshold", {"strategy", "threshold", "mean_iters",
                                     "iters_to_threshold", "reached_count"}),
    "bound_margins": ("bounds", {"training_margin", "parameter_margin", "applicable"}),
}


class SchemaError(ValueError):
    """CSV does not match the schema this figure kind consumes."""


def load_rows(csv_path, figure_kind: str) -> list[dict]:
    """Parse and validate a CSV for the given figure kind."""
    if figure_kind not in FIGURE_SCHEMAS:
        raise SchemaError(f"unknown figure kind {figure_kind!r}")
    experiment, required = FIGURE_SCHEMAS[figure_kind]
    path = Path(csv_path)
    if not path.exists():
        raise SchemaError(f"csv not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = set(reader.fieldnames or ())
        missing = ({"schema_version", "config_hash", "experiment", "row_kind"} | required) - header
        if missing:
            raise SchemaError(f"{path}: missing columns {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    version = rows[0]["schema_version"]
    if version != SUPPORTED_SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: schema version mismatch: "
            f"expected {SUPPORTED_SCHEMA_VERSION}, found {version}"
        )
    found_exp = rows[0]["experiment"]
    if found_exp != experiment:
        raise SchemaError(
            f"{path}: expected {experiment!r} rows for {figure_kind}, found {found_exp!r}"
        )
    return rows


def split_floats(cell: str) -> list[float]:
    return [float(tok) for tok in cell.split(";")] if cell else []
