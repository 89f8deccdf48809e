import numpy as np
import pytest

from seqrank1.linalg import (
    RankDeficientError,
    ZeroMatrixError,
    align_sign,
    as_matrix,
    condition_number,
    least_squares_row,
    singular_gap,
    svd,
    top_singular_triple,
)


def random_matrix(rng, m, n):
    return rng.normal(size=(m, n))


class TestSvd:
    def test_identity(self):
        res = svd(np.eye(3))
        assert np.allclose(res.singular_values, [1.0, 1.0, 1.0])
        assert np.allclose(np.abs(res.left_vectors.T @ res.right_vectors), np.eye(3))

    def test_diagonal(self):
        res = svd(np.diag([5.0, 3.0, 1.0]))
        assert np.allclose(res.singular_values, [5.0, 3.0, 1.0])

    def test_reconstruction_random(self):
        rng = np.random.default_rng(7)
        m = random_matrix(rng, 20, 30)
        res = svd(m)
        err = np.linalg.norm(m - res.reconstruct()) / np.linalg.norm(m)
        assert err <= 1e-8

    def test_result_invariants(self):
        rng = np.random.default_rng(5)
        m = random_matrix(rng, 12, 9)
        res = svd(m)
        s = res.singular_values
        assert np.all(np.diff(s) <= 0)
        assert np.all(s >= 0)
        for block in (res.left_vectors, res.right_vectors):
            gram = block.T @ block
            assert np.all(np.abs(np.diag(gram) - 1.0) <= 1e-10)
            off = gram - np.diag(np.diag(gram))
            assert np.max(np.abs(off)) <= 1e-8

    def test_rank_revealed(self):
        m = np.diag([4.0, 2.0, 0.0])
        assert svd(m).numerical_rank() == 2

    def test_reconstruction_sweep(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            rows = int(rng.integers(1, 51))
            cols = int(rng.integers(1, 81))
            m = random_matrix(rng, rows, cols)
            res = svd(m)
            assert (
                np.linalg.norm(m - res.reconstruct())
                <= 1e-8 * max(np.linalg.norm(m), 1e-30)
            )

    def test_rejects_nan(self):
        bad = np.array([[1.0, np.nan], [0.0, 1.0]])
        with pytest.raises(ValueError):
            svd(bad)


class TestEckartYoung:
    def test_truncation_beats_random_rank_k(self):
        rng = np.random.default_rng(23)
        m = random_matrix(rng, 15, 25)
        res = svd(m)
        for k in range(1, 6):
            trunc = (res.left_vectors[:, :k] * res.singular_values[:k]) @ res.right_vectors[:, :k].T
            best = np.linalg.norm(m - trunc)
            for _ in range(50):
                b = random_matrix(rng, 15, k) @ random_matrix(rng, k, 25)
                assert best <= np.linalg.norm(m - b) + 1e-12


class TestTopSingularTriple:
    def test_rank_one(self):
        m = np.outer(2.0 * np.eye(4)[0], np.eye(5)[1])
        t = top_singular_triple(m)
        assert t.sigma == pytest.approx(2.0)
        assert abs(t.u[0]) == pytest.approx(1.0)
        assert abs(t.v[1]) == pytest.approx(1.0)

    def test_diagonal(self):
        assert top_singular_triple(np.diag([5.0, 3.0])).sigma == pytest.approx(5.0)

    def test_matches_full_svd(self):
        rng = np.random.default_rng(3)
        m = random_matrix(rng, 10, 10)
        t = top_singular_triple(m)
        res = svd(m)
        assert abs(t.sigma - res.singular_values[0]) <= 1e-10
        u, v = align_sign(t.u, t.v, res.left_vectors[:, 0], res.right_vectors[:, 0])
        assert np.linalg.norm(u - res.left_vectors[:, 0]) <= 1e-10
        assert np.linalg.norm(v - res.right_vectors[:, 0]) <= 1e-10

    def test_zero_matrix_rejected(self):
        with pytest.raises(ZeroMatrixError, match="principal direction"):
            top_singular_triple(np.zeros((3, 4)))


class TestAlignSign:
    def setup_method(self):
        rng = np.random.default_rng(9)
        self.u = rng.normal(size=6)
        self.u /= np.linalg.norm(self.u)
        self.v = rng.normal(size=4)
        self.v /= np.linalg.norm(self.v)

    def test_flip_restored(self):
        u, v = align_sign(-self.u, -self.v, self.u, self.v)
        assert np.allclose(u, self.u)
        assert np.allclose(v, self.v)

    def test_identity(self):
        u, v = align_sign(self.u, self.v, self.u, self.v)
        assert np.allclose(u, self.u)
        assert np.allclose(v, self.v)

    def test_orthogonal_tie_breaks_positive(self):
        cand_u = np.array([1.0, 0.0])
        ref_u = np.array([0.0, 1.0])
        u, v = align_sign(cand_u, self.v, ref_u, self.v)
        assert np.allclose(u, cand_u)  # s = +1 on an exact tie

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            align_sign(self.u, self.v, self.u[:-1], self.v)


class TestSingularGap:
    def test_interior(self):
        assert singular_gap([5.0, 3.0, 1.0], 1) == pytest.approx(2.0)

    def test_last_index_convention(self):
        assert singular_gap([5.0, 3.0, 1.0], 3) == pytest.approx(1.0)

    def test_repeated_value(self):
        assert singular_gap([4.0, 4.0, 1.0], 1) == pytest.approx(0.0)

    def test_empty_spectrum(self):
        with pytest.raises(ValueError):
            singular_gap([], 1)

    def test_never_exceeds_sigma_k(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            s = np.sort(rng.uniform(0, 10, size=8))[::-1]
            for k in range(1, 9):
                assert singular_gap(s, k) <= s[k - 1] + 1e-15

    def test_tail_permutation_insensitive(self):
        # only the multiset of later values matters once the input is sorted
        s = [9.0, 7.0, 4.0, 2.0]
        k = 2
        base = singular_gap(s, k)
        assert base == pytest.approx(min(min(abs(7.0 - 4.0), abs(7.0 - 2.0)), 7.0))


class TestConditionNumber:
    def test_identity(self):
        assert condition_number(np.eye(4)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert condition_number(np.diag([10.0, 2.0])) == pytest.approx(5.0)

    def test_row_normalized_gaussian_matches_oracle(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(100, 400))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        s = np.linalg.svd(x, compute_uv=False)
        assert condition_number(x) == pytest.approx(s[0] / s[99], abs=1e-10)

    def test_rank_deficient_rejected(self):
        m = np.outer(np.arange(1.0, 4.0), np.arange(1.0, 5.0))
        with pytest.raises(RankDeficientError):
            condition_number(m)


class TestLeastSquaresRow:
    def test_identity_system(self):
        t = np.array([1.0, -2.0, 0.5])
        a, resid = least_squares_row(t, np.eye(3))
        assert np.allclose(a, t)
        assert resid <= 1e-12

    def test_planted_target_recovered(self):
        rng = np.random.default_rng(4)
        x, _ = np.linalg.qr(rng.normal(size=(20, 8)))
        x = x.T  # orthonormal rows, 8 x 20
        planted = rng.normal(size=8)
        target = x.T @ planted
        a, resid = least_squares_row(target, x)
        assert np.linalg.norm(a - planted) <= 1e-8
        assert resid <= 1e-10

    def test_orthogonal_target_gives_zero(self):
        x = np.zeros((2, 4))
        x[0, 0] = 1.0
        x[1, 1] = 1.0
        target = np.array([0.0, 0.0, 3.0, 4.0])
        a, resid = least_squares_row(target, x)
        assert np.allclose(a, 0.0)
        assert resid == pytest.approx(5.0)

    def test_planted_recovery_sweep(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            d, n = int(rng.integers(2, 12)), int(rng.integers(12, 30))
            x = rng.normal(size=(d, n))
            planted = rng.normal(size=d)
            a, _ = least_squares_row(x.T @ planted, x)
            assert np.linalg.norm(a - planted) <= 1e-8

    def test_rank_deficient_rejected(self):
        x = np.ones((3, 5))
        with pytest.raises(RankDeficientError):
            least_squares_row(np.ones(5), x)


def test_as_matrix_validates():
    with pytest.raises(ValueError):
        as_matrix(np.ones(3))
    with pytest.raises(ValueError):
        as_matrix(np.array([[np.inf, 1.0]]))
