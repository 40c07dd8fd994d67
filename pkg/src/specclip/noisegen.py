"""Seeded samplers for the contamination mixture and subspace perturbation models.

The RNG is counter-based (Philox) keyed by a (seed, stream) pair, so distinct
streams are independent and every draw is reproducible regardless of thread
schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import InvalidSpecError, RankTooLargeError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class Cauchy:
    """Cauchy(0, gamma) heavy tail; score/curvature constant is 2."""

    gamma: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise InvalidSpecError("cauchy gamma must be > 0")

    def pdf(self, t):
        g = self.gamma
        return g / (np.pi * (g * g + np.asarray(t, dtype=np.float64) ** 2))

    def draw(self, rng: np.random.Generator, shape):
        # inverse-CDF tan transform, kept explicit for bit-reproducibility
        u = rng.random(shape)
        return self.gamma * np.tan(np.pi * (u - 0.5))

    @property
    def score_constant(self) -> float:
        return 2.0

    def to_json(self) -> dict:
        return {"kind": "cauchy", "gamma": self.gamma}


@dataclass(frozen=True)
class StudentT:
    """Student-t with nu degrees of freedom, times a scale factor."""

    nu: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.nu <= 0 or self.scale <= 0:
            raise InvalidSpecError("student_t nu and scale must be > 0")

    def pdf(self, t):
        x = np.asarray(t, dtype=np.float64) / self.scale
        return stats.t.pdf(x, self.nu) / self.scale

    def draw(self, rng: np.random.Generator, shape):
        # nu == 1 is Cauchy: use the cheap inverse-CDF tangent transform
        # (chi-square sampling at half-integer shape is an order of magnitude
        # slower); other nu use the Gaussian / chi-square ratio construction.
        if self.nu == 1.0:
            u = rng.random(shape)
            return self.scale * np.tan(np.pi * (u - 0.5))
        z = rng.standard_normal(shape)
        v = rng.chisquare(self.nu, shape)
        return self.scale * z / np.sqrt(v / self.nu)

    @property
    def score_constant(self) -> float:
        return self.nu + 1.0

    def to_json(self) -> dict:
        return {"kind": "student_t", "nu": self.nu, "scale": self.scale}


HeavySpec = Cauchy | StudentT


def heavy_from_json(obj: dict) -> HeavySpec:
    kind = obj.get("kind")
    if kind == "cauchy":
        return Cauchy(gamma=float(obj.get("gamma", 1.0)))
    if kind == "student_t":
        return StudentT(nu=float(obj.get("nu", 1.0)), scale=float(obj.get("scale", 1.0)))
    raise InvalidSpecError(f"unknown heavy-tail kind {kind!r}")


@dataclass(frozen=True)
class ContaminationSpec:
    """Entry-wise mixture: Gaussian with prob 1-alpha, heavy tail with prob alpha."""

    alpha: float
    sigma: float
    heavy: HeavySpec = field(default_factory=Cauchy)

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise InvalidSpecError("alpha must lie in [0, 1]")
        if self.sigma < 0:
            raise InvalidSpecError("sigma must be >= 0")

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "sigma": self.sigma, "heavy": self.heavy.to_json()}

    @staticmethod
    def from_json(obj: dict) -> "ContaminationSpec":
        heavy = heavy_from_json(obj["heavy"]) if "heavy" in obj else Cauchy()
        return ContaminationSpec(
            alpha=float(obj.get("alpha", 0.0)),
            sigma=float(obj.get("sigma", 1.0)),
            heavy=heavy,
        )


@dataclass(frozen=True)
class SubspaceSpec:
    """Low-rank perturbation: spike * sum of rank-one outer products."""

    spike: float
    rank: int
    orthonormalize: bool = False

    def __post_init__(self):
        if self.spike <= 0:
            raise InvalidSpecError("spike magnitude must be > 0")
        if self.rank < 1:
            raise RankTooLargeError("rank must be >= 1")

    def to_json(self) -> dict:
        return {
            "lambda": self.spike,
            "rank": self.rank,
            "orthonormalize": self.orthonormalize,
        }


def draw_contamination(rng: np.random.Generator, shape, spec: ContaminationSpec) -> np.ndarray:
    """One mixture draw from an existing generator (stream position advances)."""
    gauss = rng.standard_normal(shape) * spec.sigma
    if spec.alpha == 0.0:
        return gauss
    mask = rng.random(shape) < spec.alpha
    heavy = spec.heavy.draw(rng, shape)
    return np.where(mask, heavy, gauss)


def sample_contamination(m: int, n: int, spec: ContaminationSpec, seed: SeedSpec) -> np.ndarray:
    if m < 1 or n < 1:
        raise InvalidSpecError("matrix dimensions must be positive")
    return draw_contamination(seed.generator(), (m, n), spec)


def sample_scalar_noise(spec: ContaminationSpec, count: int, seed: SeedSpec) -> np.ndarray:
    if count < 1:
        raise InvalidSpecError("count must be positive")
    return draw_contamination(seed.generator(), (count,), spec)


def sample_subspace(m: int, n: int, spec: SubspaceSpec, seed: SeedSpec) -> np.ndarray:
    """spike * sum_r u_r v_r^T with unit-sphere factors.

    Columns are independent uniform sphere draws; set `orthonormalize` for
    exactly orthonormal factors instead.
    """
    if spec.rank > min(m, n):
        raise RankTooLargeError(f"rank {spec.rank} exceeds min(m, n) = {min(m, n)}")
    rng = seed.generator()
    u = rng.standard_normal((m, spec.rank))
    v = rng.standard_normal((n, spec.rank))
    if spec.orthonormalize:
        u, _ = np.linalg.qr(u)
        v, _ = np.linalg.qr(v)
    else:
        u = u / np.linalg.norm(u, axis=0)
        v = v / np.linalg.norm(v, axis=0)
    return spec.spike * (u @ v.T)


def gaussian_tail_bound(t: float, sigma: float) -> float:
    """P(|N(0, sigma^2)| >= t) <= 2 exp(-t^2 / (2 sigma^2))."""
    if sigma == 0:
        return 0.0 if t > 0 else 1.0
    return 2.0 * math.exp(-(t * t) / (2.0 * sigma * sigma))


def cauchy_tail_bound(a: float, gamma: float) -> float:
    """One-sided bound P(H > a) <= gamma / (pi a) for Cauchy(0, gamma)."""
    return gamma / (math.pi * a)


def truncated_cauchy_second_moment_bound(a: float, gamma: float) -> float:
    """E min(H^2, a^2) <= 4 gamma a / pi."""
    return 4.0 * gamma * a / math.pi
