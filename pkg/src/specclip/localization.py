"""Localization-ratio diagnostics, first-order top-singular-value prediction,
and the auxiliary tail / correlation statistics used by the noise studies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import (
    DegenerateProjectionError,
    DegenerateSpectrumError,
    InsufficientSamplesError,
    InvalidSpecError,
    LengthMismatchError,
    NonUnitVectorError,
    ZeroNoiseError,
)
from .matrixcore import SVD_MAX_DIM, as_matrix, full_svd, spectral_gap, top_singular_triplet
from .noisegen import SeedSpec

UNIT_TOL = 1e-8


def localization_components(u, v, noise) -> tuple[float, float]:
    """Single-entry and full bilinear projections of the noise onto u v^T.

    Returns (r_max, r): the largest squared single-entry contribution and the
    squared inner product, both as fractions of the squared Frobenius norm.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    e = as_matrix(noise)
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL or abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise NonUnitVectorError("u and v must be unit vectors")
    if e.shape != (u.size, v.size):
        raise LengthMismatchError(f"noise shape {e.shape} incompatible with (u, v)")
    fro2 = float(np.sum(e * e))
    if fro2 == 0.0:
        raise ZeroNoiseError("noise matrix is identically zero")
    weighted = (u[:, None] * e) * v[None, :]
    r_max = float(np.max(weighted * weighted)) / fro2
    r = float(np.sum(weighted)) ** 2 / fro2
    return r_max, r


def localization_ratio(u, v, noise) -> float:
    r_max, r = localization_components(u, v, noise)
    if r == 0.0:
        raise DegenerateProjectionError("noise is orthogonal to the direction pair")
    return r_max / r


def gaussian_baseline_median(u, v, m: int, n: int, draws: int = 256, seed: SeedSpec = SeedSpec(0)) -> float:
    """Median localization ratio of i.i.d. standard Gaussian matrices.

    Uses the same direction pair as the matrix under study; this is the
    normalizer that puts the ratio on a Gaussian-relative scale.
    """
    if draws < 64:
        raise InvalidSpecError("baseline needs at least 64 draws")
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    rng = seed.generator()
    vals = np.empty(draws)
    for i in range(draws):
        e = rng.standard_normal((m, n))
        weighted = (u[:, None] * e) * v[None, :]
        fro2 = np.sum(e * e)
        num = np.max(weighted * weighted) / fro2
        den = np.sum(weighted) ** 2 / fro2
        vals[i] = num / den
    return float(np.median(vals))


@dataclass(frozen=True)
class LocalizationReport:
    r_max: float
    r: float
    ratio: float
    baseline_median: float
    normalized_ratio: float
    sigma1: float
    gap: float

    def to_json(self) -> dict:
        return {
            "r_max": self.r_max,
            "r": self.r,
            "R": self.ratio,
            "baseline_median": self.baseline_median,
            "R_hat": self.normalized_ratio,
            "sigma1": self.sigma1,
            "gap": self.gap,
        }


def localization_report(
    signal,
    noise,
    draws: int = 256,
    seed: SeedSpec = SeedSpec(0),
    direction_index: int = 0,
) -> LocalizationReport:
    """Full diagnostic for one (signal, noise) pair.

    `direction_index` selects the k-th singular direction pair of the signal;
    the ratio is defined for the top pair (index 0), the extension to deeper
    pairs is provided for exploratory sweeps.
    """
    g = as_matrix(signal)
    info = spectral_gap(g)
    if info.degenerate:
        raise DegenerateSpectrumError("signal top singular value is not simple")
    if min(g.shape) <= SVD_MAX_DIM:
        res = full_svd(g)
        u = res.left_vectors[:, direction_index]
        v = res.right_vectors[:, direction_index]
    else:
        if direction_index != 0:
            raise InvalidSpecError("direction_index > 0 needs a dense SVD")
        trip = top_singular_triplet(g)
        u, v = trip.left, trip.right
    r_max, r = localization_components(u, v, noise)
    if r == 0.0:
        raise DegenerateProjectionError("noise is orthogonal to the direction pair")
    ratio = r_max / r
    base = gaussian_baseline_median(u, v, g.shape[0], g.shape[1], draws=draws, seed=seed)
    return LocalizationReport(
        r_max=r_max,
        r=r,
        ratio=ratio,
        baseline_median=base,
        normalized_ratio=ratio / base,
        sigma1=info.sigma1,
        gap=info.gap,
    )


@dataclass(frozen=True)
class TaylorPrediction:
    sigma1_base: float
    first_order_term: float
    predicted: float
    remainder_bound: float
    applicable: bool


def taylor_prediction(signal, noise) -> TaylorPrediction:
    """First-order prediction of the perturbed top singular value.

    predicted = sigma1 + <u1 v1^T, E>; the remainder is bounded by
    4 ||E||_op^2 / gap whenever ||E||_op < gap / 4 (`applicable`).
    """
    g = as_matrix(signal)
    e = as_matrix(noise)
    if g.shape != e.shape:
        raise LengthMismatchError("signal and noise shapes differ")
    info = spectral_gap(g)
    if info.gap <= 0.0:
        raise DegenerateSpectrumError("zero spectral gap")
    res = full_svd(g)
    u, v = res.left_vectors[:, 0], res.right_vectors[:, 0]
    first_order = float(u @ e @ v)
    e_op = float(np.linalg.norm(e, 2))
    return TaylorPrediction(
        sigma1_base=info.sigma1,
        first_order_term=first_order,
        predicted=info.sigma1 + first_order,
        remainder_bound=4.0 * e_op * e_op / info.gap,
        applicable=e_op < info.gap / 4.0,
    )


def spearman_rho(xs, ys) -> float:
    """Rank correlation with average ranks on ties."""
    x = np.asarray(xs, dtype=np.float64).ravel()
    y = np.asarray(ys, dtype=np.float64).ravel()
    if x.size != y.size:
        raise LengthMismatchError("sequences must have equal length")
    if x.size < 3:
        raise LengthMismatchError("need at least 3 pairs")
    rx = rankdata(x, method="average")
    ry = rankdata(y, method="average")
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = math.sqrt(float(np.sum(rx * rx)) * float(np.sum(ry * ry)))
    if denom == 0.0:
        return float("nan")
    return float(np.sum(rx * ry) / denom)


def hill_estimator(samples, k: int | None = None) -> float:
    """Tail-index estimate from the k largest order statistics of |samples|.

    Defaults k to 1% of the sample count, clamped to [10, n/4].
    """
    x = np.abs(np.asarray(samples, dtype=np.float64).ravel())
    x = x[x > 0]
    n = x.size
    if k is None:
        k = min(max(10, math.ceil(0.01 * n)), max(n // 4, 1))
    if k < 10 or k >= n:
        raise InsufficientSamplesError(f"need 10 <= k < positive-sample count, got k={k}, n={n}")
    order = np.sort(x)[::-1]
    logs = np.log(order[:k] / order[k])
    h = float(np.mean(logs))
    if h <= 0.0:
        raise InsufficientSamplesError("degenerate order statistics (constant tail)")
    return 1.0 / h


def delocalized_signal(m: int, n: int, seed: SeedSpec, spectrum=None):
    """Test signal whose top singular pair is exactly flat (|u_i| = 1/sqrt(m)).

    The regime-separation rates assume the top direction pair is delocalized;
    this construction satisfies that premise with constant one.  Returns
    (matrix, u1, v1).
    """
    rng = seed.generator()
    r = min(m, n)
    if spectrum is None:
        spectrum = np.linspace(10.0, 1.0, r)
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if spectrum.size != r:
        raise InvalidSpecError(f"spectrum must provide min(m, n) = {r} values")
    if r >= 2 and (np.any(np.diff(spectrum) > 0) or spectrum[0] <= spectrum[1]):
        raise InvalidSpecError("spectrum must be non-increasing with a simple top value")

    def flat_basis(dim: int) -> np.ndarray:
        lead = rng.choice(np.array([-1.0, 1.0]), size=dim) / math.sqrt(dim)
        mat = rng.standard_normal((dim, dim))
        mat[:, 0] = lead
        q, rr = np.linalg.qr(mat)
        # QR keeps the first column's direction; pin its sign to the draw
        if np.dot(q[:, 0], lead) < 0:
            q[:, 0] = -q[:, 0]
        q[:, 0] = lead  # exact, not merely up to rounding
        return q

    basis_left = flat_basis(m)[:, :r]
    basis_right = flat_basis(n)[:, :r]
    g = (basis_left * spectrum) @ basis_right.T
    return g, basis_left[:, 0], basis_right[:, 0]
