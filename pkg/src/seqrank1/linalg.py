"""Dense-matrix primitives and spectral utilities.

Matrices are plain float64 ``numpy.ndarray`` objects in row-major layout;
``as_matrix``/``as_vector`` are the entry gates that enforce shape and
finiteness. Singular values are always returned in non-increasing order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-12  # numerical-rank cutoff, relative to the top singular value


class SvdConvergenceError(RuntimeError):
    """The underlying SVD factorization failed to converge."""


class ZeroMatrixError(ValueError):
    """Raised when an operation needs a principal direction but got a zero matrix."""


class RankDeficientError(ValueError):
    """Raised when an operation requires full numerical rank and the input lacks it."""


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and return ``m`` as a finite 2-D float64 array."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``M = U diag(s) V^T`` with ``s`` non-increasing.

    ``left_vectors`` is m x p and ``right_vectors`` is n x p with
    p = min(m, n); both have orthonormal columns.
    """

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    def numerical_rank(self) -> int:
        s = self.singular_values
        if s.size == 0 or s[0] == 0.0:
            return 0
        return int(np.count_nonzero(s > RANK_TOL * s[0]))

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


@dataclass(frozen=True)
class SingularTriple:
    """Top singular value with unit left/right singular vectors."""

    sigma: float
    u: np.ndarray
    v: np.ndarray


def svd(m) -> SvdResult:
    """Thin SVD of a dense matrix.

    Raises ``SvdConvergenceError`` (carrying the dimensions) if the
    factorization does not converge.
    """
    arr = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(arr, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(
            f"SVD did not converge for {arr.shape[0]}x{arr.shape[1]} matrix"
        ) from exc
    return SvdResult(singular_values=s, left_vectors=u, right_vectors=vt.T)


def singular_values(m) -> np.ndarray:
    """Singular values only, non-increasing."""
    arr = as_matrix(m)
    try:
        return np.linalg.svd(arr, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(
            f"SVD did not converge for {arr.shape[0]}x{arr.shape[1]} matrix"
        ) from exc


def top_singular_triple(m) -> SingularTriple:
    """Leading singular triple (sigma_1, u_1, v_1) of a nonzero matrix.

    The sign of (u, v) is whatever the factorization produced; use
    ``align_sign`` to fix it against a reference.
    """
    arr = as_matrix(m)
    if not arr.any():
        raise ZeroMatrixError("zero matrix has no principal direction")
    res = svd(arr)
    return SingularTriple(
        sigma=float(res.singular_values[0]),
        u=res.left_vectors[:, 0].copy(),
        v=res.right_vectors[:, 0].copy(),
    )


def align_sign(
    candidate_u: np.ndarray,
    candidate_v: np.ndarray,
    reference_u: np.ndarray,
    reference_v: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Flip ``(candidate_u, candidate_v)`` by a single shared sign.

    The sign s in {+1, -1} minimizes ``||s*candidate_u - reference_u||_2``;
    an exact tie resolves to +1. Both vectors get the same s, preserving the
    outer product.
    """
    cu = as_vector(candidate_u, "candidate_u")
    cv = as_vector(candidate_v, "candidate_v")
    ru = as_vector(reference_u, "reference_u")
    rv = as_vector(reference_v, "reference_v")
    if cu.shape != ru.shape:
        raise ValueError(f"u length mismatch: {cu.shape[0]} vs {ru.shape[0]}")
    if cv.shape != rv.shape:
        raise ValueError(f"v length mismatch: {cv.shape[0]} vs {rv.shape[0]}")
    s = -1.0 if float(cu @ ru) < 0.0 else 1.0
    return s * cu, s * cv


def singular_gap(sigmas, k: int) -> float:
    """Spectral gap guard for index ``k`` (1-based).

    Returns ``min(min_{j>k} |sigma_k - sigma_j|, sigma_k)``. For the last
    index the inner minimum ranges over an empty set and is dropped, leaving
    ``sigma_k``.
    """
    s = np.asarray(sigmas, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("sigmas must be a non-empty 1-D sequence")
    if not 1 <= k <= s.size:
        raise ValueError(f"index k={k} outside 1..{s.size}")
    sk = float(s[k - 1])
    if k == s.size:
        return sk
    return min(float(np.min(np.abs(sk - s[k:]))), sk)


def condition_number(m) -> float:
    """sigma_max / sigma_min over the min(rows, cols) singular values.

    Fails on numerically rank-deficient input, where the ratio is undefined.
    """
    s = singular_values(m)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficientError(
            f"condition number undefined: sigma_min={s[-1]:.3e} vs sigma_max={s[0]:.3e}"
        )
    return float(s[0] / s[-1])


def least_squares_row(target, x) -> tuple[np.ndarray, float]:
    """Solve ``argmin_a ||a^T X - target^T||_2`` for a row factor.

    ``x`` is d x n and must have numerical row rank d (needs n >= d).
    Returns ``(a, residual)`` with residual = ||X^T a - target||_2.
    """
    t = as_vector(target, "target")
    arr = as_matrix(x, "x")
    d, n = arr.shape
    if t.shape[0] != n:
        raise ValueError(f"target length {t.shape[0]} != column count {n}")
    if n < d:
        raise RankDeficientError(f"need n >= d for full row rank, got {d}x{n}")
    sx = singular_values(arr)
    if sx[d - 1] <= RANK_TOL * sx[0]:
        raise RankDeficientError("x is numerically rank-deficient")
    a, _, _, _ = np.linalg.lstsq(arr.T, t, rcond=None)
    residual = float(np.linalg.norm(arr.T @ a - t))
    return a, residual
