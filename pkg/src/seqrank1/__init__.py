"""Sequential rank-1 low-rank linear regression with error tracking.

The solver recovers a low-rank regression parameter one rank-1 component at
a time by deflating the label matrix, either exactly (SVD per step) or with a
budgeted gradient-descent subroutine whose per-step numerical error is
measured against the exact minimizer. The ``bounds`` module evaluates the
induced training and parameter-space error bounds; ``experiments`` and the
``seqrank1`` CLI reproduce the synthetic benchmark suites as seeded CSVs.
"""

from .bounds import (
    BoundInputs,
    BoundReport,
    DegenerateGapError,
    error_budget,
    deflation_drift_check,
    training_residual_bound,
    parameter_error_bounds,
    noisy_recovery_deterministic_bound,
    unroll_recurrence,
    wedin_check,
    weyl_check,
)
from .config import ExperimentConfig, load_config
from .datagen import (
    Dataset,
    GroundTruth,
    NoiseSpec,
    Profile,
    generate_w_star,
    make_dataset,
    normalize_frobenius,
    planted_sigmas,
    sample_x,
)
from .linalg import (
    SingularTriple,
    SvdResult,
    align_sign,
    condition_number,
    least_squares_row,
    singular_gap,
    svd,
    top_singular_triple,
)
from .solver import (
    AllocationPlan,
    GdConfig,
    RankOneComponent,
    SolveTrace,
    best_rank1_exact,
    make_allocation,
    measure_delta,
    rank1_gd,
    reconstruct_w,
    solve_exact,
    solve_inexact,
)

__version__ = "0.1.0"
