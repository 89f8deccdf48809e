"""Experiment configuration: JSON file loading, flag overrides, hashing.

A config file is a single JSON object; nested ``gd`` and ``noise`` objects
configure the subroutine and the noise model. Command-line flags override
file values. The resolved config (minus the output directory) is hashed into
every CSV row so artifacts are traceable to the exact settings.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .datagen import NoiseSpec, Profile
from .solver import GdConfig

SCHEMA_VERSION = "1"

EXPERIMENTS = ("alloc", "profile", "noise", "threshold", "bounds")
STRATEGIES = ("equal", "more_first", "less_first")


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "alloc"
    m: int = 100
    d: int = 200
    n: int | None = None  # defaults to 2*d when omitted
    r_star: int = 10
    r: int = 10
    profile: Profile = Profile.POWER_LAW
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    target_fro: float = 100.0
    total_budget: int = 1200
    strategies: tuple[str, ...] = STRATEGIES
    trials: int = 5
    base_seed: int = 0
    thresholds: tuple[float, ...] = (1.0, 1.5, 2.0, 2.5)
    gaussian_kappas: tuple[float, ...] = (0.0, 0.01, 0.05, 0.1)
    sparse_kappas: tuple[float, ...] = (1.0, 10.0)
    budget_cap: int = 10000
    gd: GdConfig = field(default_factory=lambda: GdConfig(max_iters=100))
    output_dir: str = "out"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        for name in ("m", "d", "r_star", "r", "trials", "total_budget"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.n is not None and self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.r > min(self.m, self.d):
            raise ConfigError(f"r={self.r} exceeds min(m, d)")
        if self.r_star > min(self.m, self.d):
            raise ConfigError(f"r_star={self.r_star} exceeds min(m, d)")
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad:
            raise ConfigError(f"unknown strategies {bad}")
        if not self.strategies:
            raise ConfigError("strategies must be non-empty")
        if any(t <= 0 for t in self.thresholds):
            raise ConfigError("thresholds must be positive")
        if self.budget_cap < 1:
            raise ConfigError("budget_cap must be >= 1")

    @property
    def n_resolved(self) -> int:
        return self.n if self.n is not None else 2 * self.d

    def to_dict(self) -> dict:
        out = asdict(self)
        out["profile"] = self.profile.value
        out["n"] = self.n_resolved
        out["strategies"] = list(self.strategies)
        out["thresholds"] = list(self.thresholds)
        out["gaussian_kappas"] = list(self.gaussian_kappas)
        out["sparse_kappas"] = list(self.sparse_kappas)
        return out

    def config_hash(self) -> str:
        """Hash of the resolved settings; the output location is excluded."""
        payload = self.to_dict()
        payload.pop("output_dir")
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _build_noise(raw: dict) -> NoiseSpec:
    allowed = {"kind", "kappa", "sparsity"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown noise keys {sorted(unknown)}")
    try:
        return NoiseSpec(**raw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_gd(raw: dict) -> GdConfig:
    allowed = {"step_a", "step_b", "init_scale", "max_iters", "grad_tol"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown gd keys {sorted(unknown)}")
    try:
        return GdConfig(**raw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if "noise" in raw and isinstance(raw["noise"], dict):
        raw["noise"] = _build_noise(raw["noise"])
    if "gd" in raw and isinstance(raw["gd"], dict):
        raw["gd"] = _build_gd(raw["gd"])
    if "profile" in raw:
        try:
            raw["profile"] = Profile(raw["profile"])
        except ValueError as exc:
            raise ConfigError(f"unknown profile {raw['profile']!r}") from exc
    for key in ("strategies", "thresholds", "gaussian_kappas", "sparse_kappas"):
        if key in raw:
            raw[key] = tuple(raw[key])
    try:
        return ExperimentConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {p} must hold a JSON object")
    return config_from_dict(raw)


def apply_overrides(
    cfg: ExperimentConfig,
    seed: int | None = None,
    trials: int | None = None,
    out: str | None = None,
) -> ExperimentConfig:
    """Apply the standard command-line overrides to a loaded config."""
    updates = {}
    if seed is not None:
        updates["base_seed"] = seed
    if trials is not None:
        updates["trials"] = trials
    if out is not None:
        updates["output_dir"] = out
    return replace(cfg, **updates) if updates else cfg
