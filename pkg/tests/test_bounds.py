import numpy as np
import pytest

from seqrank1.bounds import (
    BoundInputs,
    DegenerateGapError,
    build_report,
    error_budget,
    condition_flags,
    deflation_drift_check,
    training_residual_bound,
    parameter_error_bounds,
    noisy_recovery_deterministic_bound,
    unroll_recurrence,
    wedin_check,
    weyl_check,
)
from seqrank1.datagen import NoiseSpec, Profile, generate_w_star, make_dataset
from seqrank1.linalg import singular_values
from seqrank1.solver import (
    GdConfig,
    make_allocation,
    reconstruct_w,
    solve_exact,
    solve_inexact,
    training_error,
)


def inputs_for(sigmas, deltas, smax=2.0, smin=0.5, r=None, sigmas_w=()):
    sigmas = np.asarray(sigmas, dtype=float)
    r = r if r is not None else len(deltas) - 1
    return BoundInputs(
        sigmas_y=sigmas,
        delta_fros=np.asarray(deltas, dtype=float),
        sigma_max_x=smax,
        sigma_min_x=smin,
        r=r,
        p=len(sigmas),
        sigmas_w=np.asarray(sigmas_w, dtype=float),
    )


class TestComputeEOfK:
    def test_all_zero_deltas(self):
        inp = inputs_for([5.0, 3.0, 1.0], [0.0, 0.0, 0.0, 0.0], r=3)
        for k in (1, 2, 3):
            assert error_budget(inp, k) == 0.0

    def test_first_step_is_seed_only(self):
        inp = inputs_for([5.0], [0.0, 0.7], r=1)
        assert error_budget(inp, 1) == 0.0

    def test_hand_unrolled_three_term(self):
        # frozen from an independent term-by-term evaluation:
        # T = [2, 2, 1]; factors 2 + 6*sigma/T = [17, 11]; sum of
        # delta_1 * 11 + delta_2 * 1 = 0.13, times sigma_max(X) = 2
        inp = inputs_for([5.0, 3.0, 1.0], [0.0, 0.01, 0.02, 0.0], smax=2.0, r=3)
        assert error_budget(inp, 3) == pytest.approx(0.26, rel=1e-12)

    def test_degenerate_gap_raises(self):
        inp = inputs_for([5.0, 4.0, 4.0], [0.0, 0.1, 0.1, 0.0], r=3)
        with pytest.raises(DegenerateGapError):
            error_budget(inp, 3)

    def test_degenerate_gap_harmless_when_delta_zero(self):
        # the zero gap sits only in products multiplying a zero error term
        inp = inputs_for([4.0, 4.0, 1.0], [0.0, 0.0, 0.1], r=2)
        assert error_budget(inp, 2) == 0.0


class TestTrainingResidualBound:
    def test_zero_delta_full_rank_rhs_zero(self):
        inp = inputs_for([5.0, 3.0, 1.0], [0.0, 0.0, 0.0, 0.0], r=3)
        rhs, flags = training_residual_bound(inp)
        assert rhs == 0.0
        assert all(flags)

    def test_zero_delta_partial_rank_rhs_is_tail(self):
        inp = inputs_for([5.0, 3.0, 1.0, 0.5], [0.0, 0.0], r=1)
        rhs, _ = training_residual_bound(inp)
        assert rhs == pytest.approx(3.0 + 1.0 + 0.5)

    def test_exact_solver_attains_zero_bound(self):
        gt = generate_w_star(20, 30, 4, Profile.POWER_LAW, 100.0, seed=1)
        ds = make_dataset(gt, 90, NoiseSpec(), seed=2)
        trace = solve_exact(ds.x, ds.y, 4)
        obs = training_error(trace, ds.x, ds.y)
        assert obs <= 1e-8 * np.linalg.norm(ds.y)

    def test_bound_dominates_observed_on_inexact_run(self):
        report = _paired_report(seed=3, budget_per_comp=1500)
        assert all(report.condition_ok)
        assert report.training_margin >= -1e-8

    def test_linearity_in_delta(self):
        inp = inputs_for([5.0, 3.0, 1.0], [0.0, 0.01, 0.02, 0.005], r=3)
        rhs1, _ = training_residual_bound(inp)
        scaled = inputs_for([5.0, 3.0, 1.0], [0.0, 0.02, 0.04, 0.01], r=3)
        rhs2, _ = training_residual_bound(scaled)
        assert rhs2 == 2.0 * rhs1  # exact: doubling is exact in binary floats

    def test_linearity_in_delta_general_factor(self):
        deltas = np.array([0.0, 0.01, 0.02, 0.005])
        inp = inputs_for([5.0, 3.0, 1.0], deltas, r=3)
        rhs1, _ = training_residual_bound(inp)
        inp3 = inputs_for([5.0, 3.0, 1.0], 3.0 * deltas, r=3)
        rhs3, _ = training_residual_bound(inp3)
        assert rhs3 == pytest.approx(3.0 * rhs1, rel=1e-12)


class TestParameterErrorBounds:
    def test_zero_delta_full_rank(self):
        inp = inputs_for([5.0, 3.0], [0.0, 0.0, 0.0], r=2, sigmas_w=[4.0, 2.0])
        comp, total = parameter_error_bounds(inp, kappa_x=4.0)
        assert comp == [0.0, 0.0]
        assert total == 0.0

    def test_zero_delta_partial_rank_tail(self):
        inp = inputs_for([5.0, 3.0, 1.0], [0.0, 0.0], smin=0.5, r=1,
                         sigmas_w=[4.0, 2.0, 0.8])
        _, total = parameter_error_bounds(inp, kappa_x=4.0)
        assert total == pytest.approx((3.0 + 1.0) / 0.5)

    def test_component_bound_dominates_observed(self):
        report = _paired_report(seed=5, budget_per_comp=1500)
        assert all(report.condition_ok)
        assert min(report.component_margins) >= -1e-8
        assert report.parameter_margin >= -1e-8


class TestNoisyDeterministicBound:
    def test_zero_case(self):
        inp = inputs_for([5.0, 3.0], [0.0, 0.0, 0.0], r=2, sigmas_w=[4.0, 2.0])
        assert noisy_recovery_deterministic_bound(inp, kappa_x=4.0) == 0.0

    def test_partial_rank_reduces_to_spectral_tail_term(self):
        # with zero deltas only the tail survives: kappa * (r*-r) * sigma_r(W*)
        inp = inputs_for([5.0, 3.0, 1.0], [0.0, 0.0], r=1, sigmas_w=[4.0, 2.0, 0.8])
        assert noisy_recovery_deterministic_bound(inp, kappa_x=4.0) == pytest.approx(4.0 * 2 * 4.0)

    def test_noisy_run_records_symbolic_noise_parameters(self):
        report = _paired_report(seed=6, budget_per_comp=800,
                                noise=NoiseSpec(kind="gaussian", kappa=0.1))
        assert report.noisy_deterministic_bound >= 0.0
        params = report.noise_params
        assert params["epsilon"] == 0.1
        assert params["n"] == 120
        assert params["gamma"] is None
        assert params["constant"] == "unspecified"
        assert params["t_min"] is not None


class TestWeyl:
    def test_zero_perturbation(self):
        rng = np.random.default_rng(0)
        m = rng.normal(size=(6, 9))
        assert weyl_check(m, np.zeros_like(m)) <= 0.0

    def test_rank_one_perturbation(self):
        rng = np.random.default_rng(1)
        m = rng.normal(size=(8, 8))
        u = rng.normal(size=8)
        u /= np.linalg.norm(u)
        v = rng.normal(size=8)
        v /= np.linalg.norm(v)
        c = 0.3
        delta = c * np.outer(u, v)
        s0 = singular_values(m)
        s1 = singular_values(m + delta)
        assert np.max(np.abs(s1 - s0)) <= c + 1e-12
        assert weyl_check(m, delta) <= 1e-10

    def test_sweep_100(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            m = rng.normal(size=(20, 30))
            delta = rng.normal(size=(20, 30)) * rng.uniform(0.01, 2.0)
            assert weyl_check(m, delta) <= 1e-10


class TestWedin:
    def test_zero_perturbation(self):
        m = np.diag([5.0, 1.0])
        lhs, rhs, gap = wedin_check(m, np.zeros_like(m), 1)
        assert gap > 0
        assert lhs <= 1e-12
        assert rhs == pytest.approx(0.0, abs=1e-12)

    def test_perturbation_orthogonal_to_leading_block(self):
        m = np.diag([5.0, 1.0])
        delta = np.zeros((2, 2))
        delta[1, 1] = 0.1
        lhs, rhs, gap = wedin_check(m, delta, 1)
        assert gap > 0
        # the perturbation misses the leading row and column entirely, so
        # both sides vanish and the inequality holds with equality
        assert lhs <= 1e-12
        assert rhs == pytest.approx(0.0, abs=1e-12)
        assert lhs <= rhs + 1e-12

    def test_zero_gap_reported_not_raised(self):
        m = np.diag([2.0, 2.0])  # tied spectrum: leading block has no gap
        lhs, rhs, gap = wedin_check(m, np.zeros((2, 2)), 1)
        assert gap == 0.0
        assert rhs == np.inf

    def test_sweep_100_planted_gap(self):
        rng = np.random.default_rng(3)
        checked = 0
        for _ in range(100):
            mm, nn = 12, 16
            u, _ = np.linalg.qr(rng.normal(size=(mm, mm)))
            v, _ = np.linalg.qr(rng.normal(size=(nn, nn)))
            s = np.concatenate([[10.0], rng.uniform(0.1, 1.0, size=mm - 1)])
            s[1:] = np.sort(s[1:])[::-1]
            m = (u * np.concatenate([s, np.zeros(0)])) @ v[:, :mm].T
            delta = rng.normal(size=(mm, nn))
            delta *= 0.5 / np.linalg.norm(delta, 2) * rng.uniform(0.2, 1.0)
            lhs, rhs, gap = wedin_check(m, delta, 1)
            if gap > 0:
                checked += 1
                assert lhs <= rhs + 1e-10
        assert checked == 100


class TestUnrollRecurrence:
    def test_two_step_hand_case(self):
        assert unroll_recurrence([2.0, 2.0], [1.0, 3.0]) == pytest.approx([1.0, 5.0])

    def test_zero_forcing(self):
        assert unroll_recurrence([3.0, 4.0, 5.0], [0.0, 0.0, 0.0]) == [0.0, 0.0, 0.0]

    def test_matches_iterative_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            length = int(rng.integers(1, 11))
            a = rng.uniform(0.0, 3.0, size=length)
            b = rng.uniform(0.0, 2.0, size=length)
            closed = unroll_recurrence(a, b)
            q = [b[0]]
            for t in range(1, length):
                q.append(a[t - 1] * q[-1] + b[t])
            for got, want in zip(closed, q):
                assert got == pytest.approx(want, rel=1e-12, abs=1e-300)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            unroll_recurrence([1.0, -1.0], [0.0, 1.0])


class TestDeflationDrift:
    @staticmethod
    def _paired_traces(budget, seed=9):
        gt = generate_w_star(15, 25, 4, Profile.POWER_LAW, 100.0, seed=seed)
        ds = make_dataset(gt, 75, NoiseSpec(), seed=seed + 1)
        exact = solve_exact(ds.x, ds.y, 4, keep_deflated=True)
        plan = make_allocation("equal", 4, budget)
        inexact = solve_inexact(ds.x, ds.y, 4, plan, GdConfig(max_iters=1),
                                seed=seed + 2, keep_deflated=True)
        return ds, exact, inexact

    def test_exact_paired_with_itself(self):
        ds, exact, _ = self._paired_traces(400)
        margins = deflation_drift_check(exact, exact, ds.x)
        assert all(abs(m) <= 1e-8 for m in margins)

    def test_inexact_margins_nonnegative(self):
        ds, exact, inexact = self._paired_traces(2000)
        margins = deflation_drift_check(exact, inexact, ds.x)
        assert all(m >= -1e-8 for m in margins)

    def test_first_step_seed_is_zero_drift(self):
        ds, exact, inexact = self._paired_traces(400)
        assert np.array_equal(exact.deflated[0], inexact.deflated[0])

    def test_requires_retained_matrices(self):
        gt = generate_w_star(8, 10, 2, Profile.UNIFORM, 10.0, seed=1)
        ds = make_dataset(gt, 30, NoiseSpec(), seed=2)
        exact = solve_exact(ds.x, ds.y, 2)
        with pytest.raises(ValueError, match="retain"):
            deflation_drift_check(exact, exact, ds.x)


def _paired_report(seed, budget_per_comp, noise=NoiseSpec()):
    gt = generate_w_star(30, 60, 4, Profile.POWER_LAW, 100.0, seed=seed)
    ds = make_dataset(gt, 120, noise, seed=seed + 1)
    exact = solve_exact(ds.x, ds.y, 4)
    plan = make_allocation("equal", 4, 4 * budget_per_comp)
    inexact = solve_inexact(ds.x, ds.y, 4, plan, GdConfig(max_iters=1), seed=seed + 2)

    sx = singular_values(ds.x)
    sy = singular_values(ds.y)
    p = int(np.count_nonzero(sy > 1e-12 * sy[0]))
    inputs = BoundInputs(
        sigmas_y=sy[:p],
        delta_fros=np.concatenate([[0.0], inexact.delta_fros]),
        sigma_max_x=float(sx[0]),
        sigma_min_x=float(sx[-1]),
        r=4,
        p=p,
        sigmas_w=gt.sigmas,
    )
    w_hat = reconstruct_w(inexact)
    comps = [
        float(np.linalg.norm(np.outer(e.b, e.a) - np.outer(i.b, i.a)))
        for e, i in zip(exact.components, inexact.components)
    ]
    return build_report(
        inputs,
        kappa_x=float(sx[0] / sx[-1]),
        observed_training_err=training_error(w_hat, ds.x, ds.y),
        observed_recon_err=float(np.linalg.norm(gt.w_star - w_hat)),
        observed_component_errs=comps,
        epsilon=noise.kappa if noise.kind != "noiseless" else 0.0,
        n=120,
    )


def test_exact_run_margins_equal_bounds():
    # with the exact solver every per-step error is zero, so the observed
    # errors vanish and each margin equals its bound
    gt = generate_w_star(20, 30, 4, Profile.POWER_LAW, 100.0, seed=13)
    ds = make_dataset(gt, 90, NoiseSpec(), seed=14)
    exact = solve_exact(ds.x, ds.y, 4)
    sx = singular_values(ds.x)
    sy = singular_values(ds.y)
    p = int(np.count_nonzero(sy > 1e-12 * sy[0]))
    inputs = BoundInputs(
        sigmas_y=sy[:p], delta_fros=np.zeros(5),
        sigma_max_x=float(sx[0]), sigma_min_x=float(sx[-1]),
        r=4, p=p, sigmas_w=gt.sigmas,
    )
    w_hat = reconstruct_w(exact)
    comps = [0.0] * 4
    report = build_report(
        inputs, float(sx[0] / sx[-1]),
        observed_training_err=training_error(w_hat, ds.x, ds.y),
        observed_recon_err=float(np.linalg.norm(gt.w_star - w_hat)),
        observed_component_errs=comps,
    )
    assert report.observed_training_err <= 1e-8 * np.linalg.norm(ds.y)
    assert report.training_margin == pytest.approx(report.training_bound, abs=1e-8)
    assert report.parameter_margin == pytest.approx(report.parameter_bound, abs=1e-6)


def test_condition_flags_vacuous_at_spectrum_end():
    inp = inputs_for([5.0, 3.0], [0.0, 0.1, 0.1], r=2)
    flags = condition_flags(inp)
    assert flags[1]  # no later singular value, so the constraint is vacuous


def test_report_records_gap_form():
    report = _paired_report(seed=11, budget_per_comp=500)
    assert report.gap_form == "per_index"
    d = report.to_dict()
    assert "training_margin" in d and "noise_params" in d
