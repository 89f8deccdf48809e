"""Error-propagation budgets, spectral perturbation checkers, and bound reports.

The central quantity is the accumulated error budget entering step k,

    E(k) = smax(X) * sum_{k'=0}^{k-1} delta_{k'} * prod_{j=k'+1}^{k-1} (2 + 6 sigma_j / T_j),

built from the per-step subroutine errors ``delta_k`` (with ``delta_0 = 0``),
the singular values ``sigma_j`` of the label matrix, and the per-index gap
guards ``T_j = min(min_{j'>j} |sigma_j - sigma_j'|, sigma_j)``. Every product
uses the gap of its own factor index (the per-index form); reports record
that choice. The training and parameter-space bounds below are the same
double sum dressed with spectral tails and, for parameter space, the
condition number of X.

Empty products are 1; a zero gap inside a product that multiplies a nonzero
error raises ``DegenerateGapError`` rather than returning infinity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, singular_gap, singular_values
from .solver import SolveTrace, best_rank1_exact


class DegenerateGapError(ValueError):
    """A needed singular-value gap is zero, so the bound is not evaluable."""


@dataclass(frozen=True)
class BoundInputs:
    """Everything the bound formulas consume, detached from any solver.

    ``sigmas_y`` holds the ``p`` leading singular values of the label matrix,
    ``delta_fros`` the per-step errors for steps 0..r (index 0 is the
    recurrence seed and must be 0), and ``sigmas_w`` the ground-truth
    spectrum (length r*).
    """

    sigmas_y: np.ndarray
    delta_fros: np.ndarray
    sigma_max_x: float
    sigma_min_x: float
    r: int
    p: int
    sigmas_w: np.ndarray = field(default_factory=lambda: np.array([]))

    def __post_init__(self):
        sy = np.asarray(self.sigmas_y, dtype=np.float64)
        df = np.asarray(self.delta_fros, dtype=np.float64)
        object.__setattr__(self, "sigmas_y", sy)
        object.__setattr__(self, "delta_fros", df)
        object.__setattr__(self, "sigmas_w", np.asarray(self.sigmas_w, dtype=np.float64))
        if sy.size != self.p:
            raise ValueError(f"sigmas_y length {sy.size} != p={self.p}")
        if np.any(np.diff(sy) > 1e-12):
            raise ValueError("sigmas_y must be non-increasing")
        if df.size != self.r + 1:
            raise ValueError(f"delta_fros must have length r+1={self.r + 1}, got {df.size}")
        if df[0] != 0.0:
            raise ValueError("delta_fros[0] is the recurrence seed and must be 0")
        if np.any(df < 0.0):
            raise ValueError("delta_fros must be non-negative")
        if self.r < 1 or self.r > self.p:
            raise ValueError(f"r={self.r} outside 1..p={self.p}")
        if self.sigma_max_x < self.sigma_min_x:
            raise ValueError("sigma_max_x < sigma_min_x")

    @property
    def r_star(self) -> int:
        return int(self.sigmas_w.size)


def _gap(sigmas: np.ndarray, j: int) -> float:
    return singular_gap(sigmas, j)


def _amplifier(inputs: BoundInputs, j: int) -> float:
    """Per-index product factor 2 + 6 sigma_j / T_j."""
    t = _gap(inputs.sigmas_y, j)
    if t == 0.0:
        raise DegenerateGapError(f"gap T_{j} is zero; amplification factor undefined")
    return 2.0 + 6.0 * float(inputs.sigmas_y[j - 1]) / t


def _weighted_sum(inputs: BoundInputs, first_kp: int, last_kp: int, last_j: int) -> float:
    """sum_{k'=first..last_kp} delta_{k'} * prod_{j=k'+1}^{last_j} (2 + 6 sigma_j / T_j).

    Terms with delta_{k'} = 0 contribute nothing and skip their product, so a
    zero gap only fails the evaluation when it actually multiplies a nonzero
    error.
    """
    total = 0.0
    for kp in range(first_kp, last_kp + 1):
        delta = float(inputs.delta_fros[kp])
        if delta == 0.0:
            continue
        prod = 1.0
        for j in range(kp + 1, last_j + 1):
            prod *= _amplifier(inputs, j)
        total += delta * prod
    return total


def error_budget(inputs: BoundInputs, k: int) -> float:
    """Accumulated error budget entering step k (E(k) above); E(1) = 0."""
    if not 1 <= k <= inputs.r:
        raise ValueError(f"k={k} outside 1..{inputs.r}")
    return inputs.sigma_max_x * _weighted_sum(inputs, 0, k - 1, k - 1)


def _half_gap_below(inputs: BoundInputs, k: int) -> float:
    """0.5 * min_{j>k} |sigma_k - sigma_j|; +inf when no later index exists."""
    sy = inputs.sigmas_y
    if k >= inputs.p:
        return math.inf
    return 0.5 * float(np.min(np.abs(sy[k - 1] - sy[k:])))


def condition_flags(inputs: BoundInputs) -> list[bool]:
    """Per-step validity flags: E(k) strictly below half the local gap."""
    flags = []
    for k in range(1, inputs.r + 1):
        try:
            flags.append(error_budget(inputs, k) < _half_gap_below(inputs, k))
        except DegenerateGapError:
            flags.append(False)
    return flags


def training_residual_bound(inputs: BoundInputs) -> tuple[float, list[bool]]:
    """Upper bound on the training residual ``||Y - sum b_k a_k^T X||_F``.

    Returns the bound (spectral tail beyond r plus the amplified double sum
    of per-step errors) together with the per-step validity flags under which
    it is guaranteed.
    """
    tail = float(np.sum(inputs.sigmas_y[inputs.r : inputs.p]))
    double = 0.0
    for k in range(1, inputs.r + 1):
        double += _weighted_sum(inputs, 0, k, k)
    return tail + inputs.sigma_max_x * double, condition_flags(inputs)


def parameter_error_bounds(inputs: BoundInputs, kappa_x: float) -> tuple[list[float], float]:
    """Parameter-space bounds in the noiseless generative setting.

    Per component: ``||b*_k a*_k^T - b_k a_k^T||_F`` is bounded by kappa(X)
    times the amplified error sum through step k. Total: ``||W* - sum b a^T||``
    is bounded by the spectral tail over sigma_min(X) plus kappa(X) times the
    double sum (inner index from 1; the seed term is zero either way).
    """
    if inputs.sigma_min_x <= 0:
        raise ValueError("sigma_min_x must be positive for parameter-space bounds")
    component_rhs = [
        kappa_x * _weighted_sum(inputs, 0, k, k) for k in range(1, inputs.r + 1)
    ]
    tail_end = min(inputs.r_star, inputs.p)
    tail = float(np.sum(inputs.sigmas_y[inputs.r : tail_end])) / inputs.sigma_min_x
    double = 0.0
    for k in range(1, inputs.r + 1):
        double += _weighted_sum(inputs, 1, k, k)
    return component_rhs, tail + kappa_x * double


def noisy_recovery_deterministic_bound(inputs: BoundInputs, kappa_x: float) -> float:
    """Deterministic part of the noisy-label generalization bound.

    kappa(X) * (sum_{k=r+1}^{r*} sigma_r(W*) + double error sum). The tail
    term repeats the r-th ground-truth singular value over the unrecovered
    indices, as the bound states it. The stochastic noise term carries an
    unspecified constant and is reported symbolically (see
    ``noise_term_params``), never as a number.
    """
    if inputs.r_star > inputs.r:
        tail = (inputs.r_star - inputs.r) * float(inputs.sigmas_w[inputs.r - 1])
    else:
        tail = 0.0
    double = 0.0
    for k in range(1, inputs.r + 1):
        double += _weighted_sum(inputs, 0, k, k)
    return kappa_x * (tail + double)


def noise_term_params(
    inputs: BoundInputs, epsilon: float | None, n: int | None
) -> dict:
    """Symbolic parameters of the stochastic noise term (no numeric constant)."""
    t_min = None
    try:
        t_min = min(_gap(inputs.sigmas_y, k) for k in range(1, inputs.r + 1))
    except ValueError:
        pass
    return {
        "epsilon": epsilon,
        "n": n,
        "gamma": None,  # failure probability, left free
        "r": inputs.r,
        "t_min": t_min,
        "sigma_min_x": inputs.sigma_min_x,
        "constant": "unspecified",
    }


def weyl_check(m, delta) -> float:
    """Max violation of the singular-value perturbation inequality.

    Returns ``max_i |sigma_i(M + D) - sigma_i(M)| - ||D||_2``; non-positive
    means the inequality holds on this instance.
    """
    m = as_matrix(m, "m")
    d = as_matrix(delta, "delta")
    if m.shape != d.shape:
        raise ValueError(f"shape mismatch: {m.shape} vs {d.shape}")
    s0 = singular_values(m)
    s1 = singular_values(m + d)
    return float(np.max(np.abs(s1 - s0)) - np.linalg.norm(d, 2))


def wedin_check(m, delta, r_block: int) -> tuple[float, float, float]:
    """Both sides of the sin-theta subspace perturbation bound.

    Compares the leading ``r_block`` singular subspaces of M and M + D.
    Returns ``(lhs, rhs, gap)`` where lhs is the summed squared sines of the
    principal angles (left plus right), rhs is
    ``(||U1^T D||_F^2 + ||D V1||_F^2) / gap^2``, and
    ``gap = min(min_{i<=r, j>r} |sigma_i(M) - sigma_j(M+D)|, min_{i<=r} sigma_i(M))``.
    A zero gap is reported (rhs becomes +inf), not raised; callers skip the
    assertion unless the gap is positive.
    """
    m = as_matrix(m, "m")
    d = as_matrix(delta, "delta")
    if m.shape != d.shape:
        raise ValueError(f"shape mismatch: {m.shape} vs {d.shape}")
    p = min(m.shape)
    if not 1 <= r_block <= p:
        raise ValueError(f"r_block={r_block} outside 1..{p}")
    u0, s0, v0t = np.linalg.svd(m, full_matrices=False)
    u1, s1, v1t = np.linalg.svd(m + d, full_matrices=False)
    lead_u, lead_v = u0[:, :r_block], v0t[:r_block].T
    pert_u, pert_v = u1[:, :r_block], v1t[:r_block].T

    gap = float(np.min(s0[:r_block]))
    if r_block < p:
        cross = np.abs(s0[:r_block, None] - s1[None, r_block:])
        gap = min(gap, float(np.min(cross)))

    # ||sin theta||_F^2 = r - ||Q1^T Q2||_F^2 via the principal-angle cosines
    lhs = (r_block - np.linalg.norm(lead_u.T @ pert_u) ** 2) + (
        r_block - np.linalg.norm(lead_v.T @ pert_v) ** 2
    )
    lhs = float(max(lhs, 0.0))
    if gap <= 0.0:
        return lhs, math.inf, gap
    rhs = (
        np.linalg.norm(lead_u.T @ d) ** 2 + np.linalg.norm(d @ lead_v) ** 2
    ) / gap**2
    return lhs, float(rhs), gap


def unroll_recurrence(a_coeffs, b_coeffs) -> list[float]:
    """Closed form of ``Q_{k+1} = a_k Q_k + b_k`` with seed ``Q_1 = b_0``.

    Input lists share a length L; ``a_coeffs[i]`` multiplies the advance out
    of step i+1 and ``b_coeffs[0]`` is the seed. Returns ``[Q_1, ..., Q_L]``
    where ``Q_k = sum_{k'=0}^{k-1} b_{k'} * prod_{j=k'+1}^{k-1} a_j``.
    """
    a = np.asarray(a_coeffs, dtype=np.float64)
    b = np.asarray(b_coeffs, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.size != b.size:
        raise ValueError("coefficient lists must be 1-D and the same length")
    if a.size == 0:
        raise ValueError("empty coefficient lists")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("coefficients must be non-negative")
    out = []
    for k in range(1, a.size + 1):
        total = 0.0
        for kp in range(0, k):
            prod = 1.0
            for j in range(kp + 1, k):
                prod *= a[j - 1]
            total += b[kp] * prod
        out.append(float(total))
    return out


def deflation_drift_check(exact_trace: SolveTrace, approx_trace: SolveTrace, x) -> list[float]:
    """Per-step margins of the deflation-drift inequality.

    For each step k the drift of the realized deflated matrix from the exact
    one grows by at most the best-fit discrepancy plus the propagated
    subroutine error:

        ||Y_{k+1} - Y*_{k+1}||_F <= ||Y_k - Y*_k||_F
                                    + ||b*_k a*_k^T X - bbar_k abar_k^T X||_F
                                    + ||delta_k X||_F.

    Both traces must retain their deflated matrices (``keep_deflated=True``)
    and come from the same (X, Y). Returns RHS - LHS per step; all margins
    should clear -1e-8.
    """
    x = as_matrix(x, "x")
    if exact_trace.mode != "exact":
        raise ValueError("first trace must come from the exact solver")
    if exact_trace.deflated is None or approx_trace.deflated is None:
        raise ValueError("both traces must retain deflated matrices")
    r = len(approx_trace.components)
    if len(exact_trace.components) != r:
        raise ValueError("trace lengths differ")
    if exact_trace.deflated[0].shape != approx_trace.deflated[0].shape:
        raise ValueError("traces come from different label matrices")
    margins = []
    for k in range(r):
        y_k = approx_trace.deflated[k]
        y_star_k = exact_trace.deflated[k]
        a_bar, b_bar = best_rank1_exact(y_k, x)
        comp = approx_trace.components[k]
        star = exact_trace.components[k]
        delta_k = np.outer(comp.b, comp.a) - np.outer(b_bar, a_bar)
        star_fit = np.outer(star.b, x.T @ star.a)
        bar_fit = np.outer(b_bar, x.T @ a_bar)
        lhs = np.linalg.norm(approx_trace.deflated[k + 1] - exact_trace.deflated[k + 1])
        rhs = (
            np.linalg.norm(y_k - y_star_k)
            + np.linalg.norm(star_fit - bar_fit)
            + np.linalg.norm(delta_k @ x)
        )
        margins.append(float(rhs - lhs))
    return margins


@dataclass(frozen=True)
class BoundReport:
    """Bound values and observed errors side by side for one paired run."""

    gap_guards: list[float]
    error_budgets: list[float]
    condition_ok: list[bool]
    training_bound: float
    component_bounds: list[float]
    parameter_bound: float
    noisy_deterministic_bound: float
    observed_training_err: float
    observed_recon_err: float
    observed_component_errs: list[float]
    gap_form: str = "per_index"
    noise_params: dict = field(default_factory=dict)

    @property
    def training_margin(self) -> float:
        return self.training_bound - self.observed_training_err

    @property
    def parameter_margin(self) -> float:
        return self.parameter_bound - self.observed_recon_err

    @property
    def component_margins(self) -> list[float]:
        return [
            rhs - obs
            for rhs, obs in zip(self.component_bounds, self.observed_component_errs)
        ]

    def to_dict(self) -> dict:
        return {
            "gap_guards": self.gap_guards,
            "error_budgets": self.error_budgets,
            "condition_ok": self.condition_ok,
            "training_bound": self.training_bound,
            "component_bounds": self.component_bounds,
            "parameter_bound": self.parameter_bound,
            "noisy_deterministic_bound": self.noisy_deterministic_bound,
            "observed_training_err": self.observed_training_err,
            "observed_recon_err": self.observed_recon_err,
            "observed_component_errs": self.observed_component_errs,
            "training_margin": self.training_margin,
            "parameter_margin": self.parameter_margin,
            "component_margins": self.component_margins,
            "gap_form": self.gap_form,
            "noise_params": self.noise_params,
        }


def build_report(
    inputs: BoundInputs,
    kappa_x: float,
    observed_training_err: float,
    observed_recon_err: float,
    observed_component_errs: list[float],
    epsilon: float | None = None,
    n: int | None = None,
) -> BoundReport:
    """Evaluate every computable bound against the observed errors."""
    training_bound, flags = training_residual_bound(inputs)
    comp_rhs, total_rhs = parameter_error_bounds(inputs, kappa_x)
    det_noisy = noisy_recovery_deterministic_bound(inputs, kappa_x)
    tks = [singular_gap(inputs.sigmas_y, k) for k in range(1, inputs.r + 1)]
    e_vals = [error_budget(inputs, k) for k in range(1, inputs.r + 1)]
    return BoundReport(
        gap_guards=tks,
        error_budgets=e_vals,
        condition_ok=flags,
        training_bound=training_bound,
        component_bounds=comp_rhs,
        parameter_bound=total_rhs,
        noisy_deterministic_bound=det_noisy,
        observed_training_err=observed_training_err,
        observed_recon_err=observed_recon_err,
        observed_component_errs=observed_component_errs,
        noise_params=noise_term_params(inputs, epsilon, n),
    )
