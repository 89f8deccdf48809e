"""Seeded synthetic problem generators.

Ground-truth matrices are planted as ``U diag(sigmas) V^T`` with random
orthonormal factors and one of three singular-value profiles, inputs are
row-normalized Gaussian matrices, and labels optionally carry Gaussian or
sparse additive noise. Every generator is a pure function of its arguments
and seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .linalg import as_matrix

Seed = int | np.random.SeedSequence

DEFAULT_TARGET_FRO = 100.0
DEFAULT_SPARSITY = 0.05


class Profile(str, Enum):
    """Shape of the planted singular-value sequence."""

    UNIFORM = "uniform"
    EXPONENTIAL_DECAY = "exponential_decay"
    POWER_LAW = "power_law"


@dataclass(frozen=True)
class NoiseSpec:
    """Additive label-noise model; ``kappa`` is a standard deviation."""

    kind: str = "noiseless"  # noiseless | gaussian | sparse
    kappa: float = 0.0
    sparsity: float = DEFAULT_SPARSITY

    def __post_init__(self):
        if self.kind not in ("noiseless", "gaussian", "sparse"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.kind == "noiseless" and self.kappa != 0.0:
            raise ValueError("noiseless implies kappa = 0")
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValueError("sparsity must lie in [0, 1]")


@dataclass(frozen=True)
class GroundTruth:
    """Planted low-rank target with its exact singular spectrum."""

    w_star: np.ndarray
    sigmas: np.ndarray
    rank: int
    profile: Profile


@dataclass(frozen=True)
class Dataset:
    """One (X, Y) regression instance; ``y = y_star + noise``."""

    x: np.ndarray
    y: np.ndarray
    y_star: np.ndarray
    noise: NoiseSpec
    seed: int | None = None
    corrupted_entries: int = 0


def as_seed_sequence(seed: Seed) -> np.random.SeedSequence:
    """Normalize to a fresh SeedSequence.

    An incoming SeedSequence is rebuilt from its entropy and spawn key so the
    caller's object keeps its spawn counter: repeated calls with the same
    seed always derive the same child streams.
    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(entropy=seed.entropy, spawn_key=seed.spawn_key)
    return np.random.SeedSequence(seed)


def planted_sigmas(profile: Profile, r_star: int) -> np.ndarray:
    """Unnormalized singular values for a profile, strictly positive and non-increasing.

    uniform: all 10. exponential_decay: 100 * (1/100)^((i-1)/(r*-1)), with the
    degenerate single-term case fixed to [100]. power_law: 100 / i^2.
    """
    if r_star < 1:
        raise ValueError("r_star must be >= 1")
    profile = Profile(profile)
    i = np.arange(1, r_star + 1, dtype=np.float64)
    if profile is Profile.UNIFORM:
        return np.full(r_star, 10.0)
    if profile is Profile.EXPONENTIAL_DECAY:
        if r_star == 1:
            return np.array([100.0])
        return 100.0 * (0.01) ** ((i - 1.0) / (r_star - 1.0))
    return 100.0 / i**2


def normalize_frobenius(sigmas, target_fro: float) -> np.ndarray:
    """Rescale so that sqrt(sum sigma_i^2) equals ``target_fro``."""
    s = np.asarray(sigmas, dtype=np.float64)
    norm = float(np.linalg.norm(s))
    if norm == 0.0:
        raise ValueError("cannot normalize an all-zero spectrum")
    if target_fro <= 0:
        raise ValueError("target_fro must be positive")
    return s * (target_fro / norm)


def generate_w_star(
    m: int,
    d: int,
    r_star: int,
    profile: Profile,
    target_fro: float = DEFAULT_TARGET_FRO,
    seed: Seed = 0,
) -> GroundTruth:
    """Plant ``W* = U diag(sigmas) V^T`` with random orthonormal factors.

    U and V come from QR of seeded Gaussian draws; the spectrum follows the
    profile, rescaled to ``target_fro``. Deterministic in ``seed``.
    """
    if r_star > min(m, d):
        raise ValueError(f"r_star={r_star} exceeds min(m, d)={min(m, d)}")
    sig = normalize_frobenius(planted_sigmas(profile, r_star), target_fro)
    rng = np.random.default_rng(as_seed_sequence(seed))
    u, _ = np.linalg.qr(rng.normal(size=(m, r_star)))
    v, _ = np.linalg.qr(rng.normal(size=(d, r_star)))
    w = (u * sig) @ v.T
    return GroundTruth(w_star=w, sigmas=sig, rank=r_star, profile=Profile(profile))


def sample_x_raw(d: int, n: int, seed: Seed = 0) -> np.ndarray:
    """The i.i.d. standard-normal draw behind ``sample_x``, before row scaling."""
    if d < 1 or n < 1:
        raise ValueError("d and n must be >= 1")
    rng = np.random.default_rng(as_seed_sequence(seed))
    return rng.normal(size=(d, n))


def sample_x(d: int, n: int, seed: Seed = 0) -> np.ndarray:
    """Standard-normal d x n input matrix with every row scaled to unit norm."""
    raw = sample_x_raw(d, n, seed)
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def make_dataset(gt: GroundTruth, n: int, noise: NoiseSpec, seed: Seed = 0) -> Dataset:
    """Draw X, form ``y_star = W* X`` and apply the noise model.

    The seed splits into independent streams for X and for the noise, so
    changing the noise model never shifts the input draw. Sparse noise picks
    exactly ``floor(sparsity * m * n)`` entry positions without replacement
    and adds N(0, kappa^2) there; Gaussian perturbs every entry.
    """
    w = as_matrix(gt.w_star, "w_star")
    m = w.shape[0]
    ss = as_seed_sequence(seed)
    x_ss, noise_ss = ss.spawn(2)
    x = sample_x(w.shape[1], n, x_ss)
    y_star = w @ x
    seed_int = seed if isinstance(seed, int) else None

    if noise.kind == "noiseless" or noise.kappa == 0.0:
        return Dataset(x=x, y=y_star.copy(), y_star=y_star, noise=noise, seed=seed_int)

    rng = np.random.default_rng(noise_ss)
    if noise.kind == "gaussian":
        e = rng.normal(0.0, noise.kappa, size=(m, n))
        return Dataset(
            x=x, y=y_star + e, y_star=y_star, noise=noise,
            seed=seed_int, corrupted_entries=m * n,
        )
    count = int(math.floor(noise.sparsity * m * n))
    flat = rng.choice(m * n, size=count, replace=False)
    e = np.zeros(m * n)
    e[flat] = rng.normal(0.0, noise.kappa, size=count)
    return Dataset(
        x=x, y=y_star + e.reshape(m, n), y_star=y_star, noise=noise,
        seed=seed_int, corrupted_entries=count,
    )
