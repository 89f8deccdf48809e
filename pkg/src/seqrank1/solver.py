"""Sequential rank-1 recovery by deflation.

``solve_exact`` peels off the best rank-1 term of the current label matrix at
every step; ``solve_inexact`` replaces that inner step with a fixed-budget
gradient-descent subroutine on the factored objective
``0.5 * ||Y_k - b a^T X||_F^2`` and records the per-step numerical error
(Frobenius gap to the exact minimizer of the same step).

Components are identified only through the product ``b a^T``; the exact
solver normalizes ``||b||_2 = 1`` and carries the magnitude in ``a``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .datagen import Seed, as_seed_sequence
from .linalg import as_matrix, least_squares_row, top_singular_triple

ZERO_RESIDUAL_TOL = 1e-12  # relative to the initial label norm


class DivergenceError(RuntimeError):
    """Gradient descent iterates exploded; carries the step sizes used."""


@dataclass(frozen=True)
class RankOneComponent:
    """One recovered (a, b) pair plus its per-step bookkeeping."""

    a: np.ndarray
    b: np.ndarray
    delta_fro: float
    iters_used: int
    residual_fro_after: float


@dataclass(frozen=True)
class AllocationPlan:
    """Split of a total iteration budget across the sequential components."""

    strategy: str  # equal | more_first | less_first | explicit
    budgets: tuple[int, ...]

    def __post_init__(self):
        if self.strategy not in ("equal", "more_first", "less_first", "explicit"):
            raise ValueError(f"unknown allocation strategy {self.strategy!r}")
        if len(self.budgets) == 0:
            raise ValueError("empty budget list")
        floor = 0 if self.strategy == "explicit" else 1
        if any(b < floor for b in self.budgets):
            raise ValueError(f"budgets must all be >= {floor} for {self.strategy}")

    @property
    def total(self) -> int:
        return int(sum(self.budgets))


@dataclass(frozen=True)
class GdConfig:
    """Gradient-descent subroutine settings.

    ``step_a``/``step_b`` of ``None`` resolve automatically at the start of
    each run to ``1 / (2 * smax(X)^2 * max(|a0||b0|, smax(Yk), 1))`` and are
    never recomputed during the run. ``init_scale`` is the std-dev of the
    random init (zero init is a stationary point and is excluded).
    """

    step_a: float | None = None
    step_b: float | None = None
    init_scale: float = 1e-2
    max_iters: int = 100
    grad_tol: float = 0.0

    def __post_init__(self):
        for name, s in (("step_a", self.step_a), ("step_b", self.step_b)):
            if s is not None and s <= 0:
                raise ValueError(f"{name} must be positive or None (auto)")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.grad_tol < 0:
            raise ValueError("grad_tol must be >= 0")


@dataclass(frozen=True)
class SolveTrace:
    """Full record of one sequential run (components in recovery order)."""

    components: tuple[RankOneComponent, ...]
    mode: str  # exact | inexact
    y_fro_initial: float
    allocation: AllocationPlan | None = None
    rank_exhausted: bool = False
    # Deflated label matrices Y_1..Y_{r+1}; kept only on request since they
    # dominate memory at experiment scale.
    deflated: tuple[np.ndarray, ...] | None = None

    @property
    def delta_fros(self) -> list[float]:
        return [c.delta_fro for c in self.components]

    @property
    def residuals(self) -> list[float]:
        return [c.residual_fro_after for c in self.components]


def spectral_norm_est(m, iters: int = 80) -> float:
    """Deterministic power-iteration estimate of the top singular value."""
    arr = np.asarray(m, dtype=np.float64)
    v = np.full(arr.shape[1], 1.0 / np.sqrt(arr.shape[1]))
    for _ in range(iters):
        u = arr @ v
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        v = arr.T @ (u / nu)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
    return float(np.linalg.norm(arr @ v))


def best_rank1_exact(yk, x) -> tuple[np.ndarray, np.ndarray]:
    """Exact best rank-1 fit of ``yk`` through ``x``.

    Takes the top singular triple (sigma, u, v) of ``yk``, sets ``b = u`` and
    recovers ``a`` by least squares so that ``a^T X ~= sigma v^T``; then
    ``b a^T X`` is the best rank-1 approximation of ``yk`` up to the
    least-squares residual. Requires ``x`` with full numerical row rank.
    """
    triple = top_singular_triple(yk)
    a, _ = least_squares_row(triple.sigma * triple.v, x)
    return a, triple.u.copy()


def measure_delta(yk, x, a, b) -> float:
    """Frobenius gap between ``b a^T`` and the exact minimizer's product.

    This is the per-step numerical error of an inexact subroutine evaluated
    against the same deflated matrix it was given; by construction it is zero
    for the exact solver and invariant under the (c*a, b/c) rescaling.
    """
    yk = as_matrix(yk, "yk")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[0] != x.shape[0] or b.shape[0] != yk.shape[0]:
        raise ValueError("component dimensions inconsistent with (yk, x)")
    a_bar, b_bar = best_rank1_exact(yk, x)
    return float(np.linalg.norm(np.outer(b, a) - np.outer(b_bar, a_bar)))


def _deflate(yk: np.ndarray, x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # b a^T X computed as outer(b, X^T a): avoids the m x d x n product
    return yk - np.outer(b, x.T @ a)


def solve_exact(x, y, r: int, keep_deflated: bool = False) -> SolveTrace:
    """Sequential exact recovery: r rounds of best-rank-1 fit and deflation.

    If the residual hits numerical zero early, the remaining components are
    zero pairs and ``rank_exhausted`` is set.
    """
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    if r < 1:
        raise ValueError("r must be >= 1")
    y0 = float(np.linalg.norm(y))
    yk = y.copy()
    deflated = [yk.copy()] if keep_deflated else None
    components: list[RankOneComponent] = []
    exhausted = False
    for _ in range(r):
        if exhausted or np.linalg.norm(yk) <= ZERO_RESIDUAL_TOL * y0:
            exhausted = True
            components.append(
                RankOneComponent(
                    a=np.zeros(x.shape[0]),
                    b=np.zeros(y.shape[0]),
                    delta_fro=0.0,
                    iters_used=0,
                    residual_fro_after=float(np.linalg.norm(yk)),
                )
            )
            if deflated is not None:
                deflated.append(yk.copy())
            continue
        a, b = best_rank1_exact(yk, x)
        yk = _deflate(yk, x, a, b)
        components.append(
            RankOneComponent(
                a=a, b=b, delta_fro=0.0, iters_used=0,
                residual_fro_after=float(np.linalg.norm(yk)),
            )
        )
        if deflated is not None:
            deflated.append(yk.copy())
    return SolveTrace(
        components=tuple(components),
        mode="exact",
        y_fro_initial=y0,
        rank_exhausted=exhausted,
        deflated=tuple(deflated) if deflated is not None else None,
    )


def _resolve_steps(
    config: GdConfig, x: np.ndarray, yk: np.ndarray, a0: np.ndarray, b0: np.ndarray,
    smax_x: float | None,
) -> tuple[float, float]:
    if config.step_a is not None and config.step_b is not None:
        return config.step_a, config.step_b
    sx = spectral_norm_est(x) if smax_x is None else smax_x
    scale = max(
        float(np.linalg.norm(a0) * np.linalg.norm(b0)),
        spectral_norm_est(yk),
        1.0,
    )
    auto = 1.0 / (2.0 * sx * sx * scale)
    return (
        config.step_a if config.step_a is not None else auto,
        config.step_b if config.step_b is not None else auto,
    )


def rank1_gd(
    yk, x, config: GdConfig, seed: Seed = 0, smax_x: float | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Gradient descent on ``0.5 * ||yk - b a^T x||_F^2`` from a random init.

    Runs the simultaneous coupled updates

        a <- a - eta_a * X (b a^T X - Yk)^T b
        b <- b - eta_b * (b a^T X - Yk) X^T a

    for up to ``max_iters`` steps, stopping early once both gradient norms
    fall to ``grad_tol``. ``a`` and ``b`` start as i.i.d. N(0, init_scale^2)
    draws from ``seed``. ``smax_x`` optionally supplies a precomputed top
    singular value of ``x`` for the automatic step size.

    Raises ``DivergenceError`` when the iterate norm exceeds 1e8 times the
    initial norm.
    """
    yk = as_matrix(yk, "yk")
    x = as_matrix(x, "x")
    if yk.shape[1] != x.shape[1]:
        raise ValueError(f"column mismatch: yk {yk.shape} vs x {x.shape}")
    rng = np.random.default_rng(as_seed_sequence(seed))
    a = rng.normal(0.0, config.init_scale, x.shape[0])
    b = rng.normal(0.0, config.init_scale, yk.shape[0])
    eta_a, eta_b = _resolve_steps(config, x, yk, a, b, smax_x)
    norm0 = float(np.hypot(np.linalg.norm(a), np.linalg.norm(b)))
    iters_used = 0
    for _ in range(config.max_iters):
        ax = x.T @ a
        resid = np.outer(b, ax) - yk
        grad_a = x @ (resid.T @ b)
        grad_b = resid @ ax
        if (
            np.linalg.norm(grad_a) <= config.grad_tol
            and np.linalg.norm(grad_b) <= config.grad_tol
        ):
            break
        a = a - eta_a * grad_a
        b = b - eta_b * grad_b
        iters_used += 1
        if np.hypot(np.linalg.norm(a), np.linalg.norm(b)) > 1e8 * norm0:
            raise DivergenceError(
                f"iterates diverged with step sizes eta_a={eta_a:.3e}, eta_b={eta_b:.3e}"
            )
    return a, b, iters_used


def make_allocation(strategy: str, r: int, total_budget: int) -> AllocationPlan:
    """Budget split for r components under a total of ``total_budget`` iterations.

    equal: floor division with the remainder handed to the earliest
    components. more_first: proportional to (r - k + 1), rounded, with the
    earliest entries adjusted by +-1 to restore the exact total. less_first:
    the reversal of more_first.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if total_budget < r:
        raise ValueError(f"total budget {total_budget} below one iteration per component")
    if strategy == "equal":
        base, rem = divmod(total_budget, r)
        budgets = [base + (1 if i < rem else 0) for i in range(r)]
    elif strategy in ("more_first", "less_first"):
        weights = list(range(r, 0, -1))
        wsum = sum(weights)
        budgets = [max(1, round(total_budget * w / wsum)) for w in weights]
        diff = total_budget - sum(budgets)
        i = 0
        while diff != 0:
            step = 1 if diff > 0 else -1
            if budgets[i % r] + step >= 1:
                budgets[i % r] += step
                diff -= step
            i += 1
        if strategy == "less_first":
            budgets.reverse()
    else:
        raise ValueError(f"unknown allocation strategy {strategy!r}")
    return AllocationPlan(strategy=strategy, budgets=tuple(budgets))


def explicit_allocation(budgets) -> AllocationPlan:
    """Pass validated budgets through unchanged."""
    return AllocationPlan(strategy="explicit", budgets=tuple(int(b) for b in budgets))


def solve_inexact(
    x,
    y,
    r: int,
    plan: AllocationPlan,
    config: GdConfig,
    seed: Seed = 0,
    keep_deflated: bool = False,
) -> SolveTrace:
    """Sequential inexact recovery with a per-component iteration budget.

    Each component runs ``rank1_gd`` with its budget from ``plan`` and a
    sub-seed split off the run seed, records its numerical error via
    ``measure_delta``, then deflates with the realized product. Deterministic
    in ``seed``.
    """
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    if len(plan.budgets) != r:
        raise ValueError(f"plan length {len(plan.budgets)} != r={r}")
    child_seeds = as_seed_sequence(seed).spawn(r)
    smax_x = spectral_norm_est(x)
    y0 = float(np.linalg.norm(y))
    yk = y.copy()
    deflated = [yk.copy()] if keep_deflated else None
    components: list[RankOneComponent] = []
    for k in range(r):
        cfg_k = replace(config, max_iters=int(plan.budgets[k]))
        a, b, used = rank1_gd(yk, x, cfg_k, child_seeds[k], smax_x=smax_x)
        delta = measure_delta(yk, x, a, b)
        yk = _deflate(yk, x, a, b)
        components.append(
            RankOneComponent(
                a=a, b=b, delta_fro=delta, iters_used=used,
                residual_fro_after=float(np.linalg.norm(yk)),
            )
        )
        if deflated is not None:
            deflated.append(yk.copy())
    return SolveTrace(
        components=tuple(components),
        mode="inexact",
        y_fro_initial=y0,
        allocation=plan,
        deflated=tuple(deflated) if deflated is not None else None,
    )


def reconstruct_w(trace: SolveTrace) -> np.ndarray:
    """Sum of the recovered outer products, an m x d parameter estimate."""
    if not trace.components:
        raise ValueError("trace has no components")
    first = trace.components[0]
    w = np.zeros((first.b.shape[0], first.a.shape[0]))
    for c in trace.components:
        w += np.outer(c.b, c.a)
    return w


def training_error(trace_or_w, x, y) -> float:
    """Frobenius residual ``||y - W_hat x||_F`` of a trace or parameter matrix."""
    w = reconstruct_w(trace_or_w) if isinstance(trace_or_w, SolveTrace) else trace_or_w
    return float(np.linalg.norm(y - w @ x))
