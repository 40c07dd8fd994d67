"""Dense-matrix numerics: norms, SVD accessors, spectral gap, matrix sign.

All operations are pure functions of immutable inputs; matrices are plain
2-D float64 ndarrays validated at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpectrumError,
    DimensionTooLargeError,
    NoConvergenceError,
    NonFiniteError,
    ShapeMismatchError,
    ZeroMatrixError,
)

SVD_MAX_DIM = 512
SVD_TOL = 1e-10
GAP_TOL = 1e-8
RANK_TOL = 1e-12

# Five-step composition of odd quintics x -> a*x + b*x^3 + c*x^5, each step the
# minimax polynomial for the interval produced by the previous one (greedy
# composite, tuned for inputs whose normalized singular values lie in
# [0.0035, 1]).  After the five steps every such value lands in
# [0.9975, 1.0025].  Appending further steps repeats the last tuple, which has
# 1 as an attracting fixed point.
NS_SCHEDULE_TUNED = (
    (8.3612122940, -24.6719250146, 18.2781174749),
    (4.0103959415, -2.9882265010, 0.5668698901),
    (3.4131308511, -2.5587319041, 0.5180105257),
    (2.3882680360, -1.7444344944, 0.4263555257),
    (1.9019085039, -1.2795841113, 0.3779705000),
)

# Classic aggressive tuple used by Muon-style optimizers.  Fast inflation of
# small singular values but no tight fixed point at 1 (steady-state band is
# roughly [0.7, 1.1]); selectable for timing studies.
NS_SCHEDULE_MUON = ((3.4445, -4.7750, 2.0315),)

_NS_SCHEDULES = {"tuned": NS_SCHEDULE_TUNED, "muon": NS_SCHEDULE_MUON}


def as_matrix(a) -> np.ndarray:
    """Validate and return `a` as a 2-D float64 array with finite entries."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ShapeMismatchError("matrix has no entries")
    if not np.isfinite(arr).all():
        raise NonFiniteError("matrix contains NaN or Inf entries")
    return arr


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a)))


def entry_max_norm(a) -> float:
    return float(np.max(np.abs(as_matrix(a))))


def operator_norm(a) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(as_matrix(a), 2))


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD with singular values sorted non-increasing.

    `left_vectors` is m-by-r, `right_vectors` is n-by-r, r = min(m, n).
    Column signs follow the convention that the first entry of each left
    vector with magnitude above 1e-12 of the column max is positive, so
    repeated factorizations of the same matrix are bitwise comparable.
    """

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def _fix_signs(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u = u.copy()
    v = v.copy()
    for i in range(u.shape[1]):
        col = u[:, i]
        peak = np.max(np.abs(col))
        if peak == 0.0:
            continue
        lead = col[np.abs(col) > 1e-12 * peak][0]
        if lead < 0:
            u[:, i] = -col
            v[:, i] = -v[:, i]
    return u, v


def full_svd(a, max_dim: int = SVD_MAX_DIM) -> SvdResult:
    """Thin SVD of a dense matrix.

    Refuses matrices whose short side exceeds `max_dim`; callers needing
    only the top of the spectrum of a larger matrix should use
    `top_singular_triplet`.
    """
    arr = as_matrix(a)
    if min(arr.shape) > max_dim:
        raise DimensionTooLargeError(
            f"min dimension {min(arr.shape)} exceeds max_dim={max_dim}"
        )
    u, s, vt = np.linalg.svd(arr, full_matrices=False)
    u, v = _fix_signs(u, vt.T)
    return SvdResult(singular_values=s, left_vectors=u, right_vectors=v)


@dataclass(frozen=True)
class TopTriplet:
    sigma: float
    left: np.ndarray
    right: np.ndarray
    converged: bool
    iterations: int


def top_singular_triplet(a, tol: float = 1e-10, max_iter: int = 2000) -> TopTriplet:
    """Leading singular triplet by alternating power iteration.

    Starts from the deterministic all-ones direction; if that stalls, makes
    one seeded random restart.  Never raises on non-convergence: the best
    iterate is returned with `converged=False`.
    """
    arr = as_matrix(a)
    if not np.any(arr):
        raise ZeroMatrixError("top singular triplet undefined for the zero matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")

    def sweep(v0: np.ndarray) -> tuple[float, np.ndarray, np.ndarray, bool, int]:
        v = v0 / np.linalg.norm(v0)
        sigma = 0.0
        u = arr @ v
        for it in range(1, max_iter + 1):
            u = arr @ v
            nu = np.linalg.norm(u)
            if nu == 0.0:  # started orthogonal to the row space
                break
            u = u / nu
            w = arr.T @ u
            sigma = np.linalg.norm(w)
            v = w / sigma
            res_r = np.linalg.norm(arr @ v - sigma * u)
            res_l = np.linalg.norm(arr.T @ u - sigma * v)
            if max(res_r, res_l) <= tol * sigma:
                return sigma, u, v, True, it
        return sigma, u, v, False, max_iter

    n = arr.shape[1]
    sigma, u, v, ok, its = sweep(np.ones(n))
    if not ok:
        rng = np.random.Generator(np.random.Philox(key=0x5EED))
        sigma, u, v, ok, its = sweep(rng.standard_normal(n))

    peak = np.max(np.abs(u))
    lead = u[np.abs(u) > 1e-12 * peak][0]
    if lead < 0:
        u, v = -u, -v
    return TopTriplet(sigma=float(sigma), left=u, right=v, converged=ok, iterations=its)


@dataclass(frozen=True)
class SpectralGapInfo:
    sigma1: float
    sigma2: float
    gap: float
    degenerate: bool


def spectral_gap(a, max_dim: int = SVD_MAX_DIM, gap_tol: float = GAP_TOL) -> SpectralGapInfo:
    """Gap between the two leading singular values.

    Sets the `degenerate` flag (rather than raising) when the gap is below
    gap_tol * sigma1; diagnostics that need a strict gap raise on that flag.
    """
    arr = as_matrix(a)
    if min(arr.shape) < 2:
        raise ShapeMismatchError("spectral gap needs min dimension >= 2")
    if min(arr.shape) <= max_dim:
        s = np.linalg.svd(arr, compute_uv=False)
        s1, s2 = float(s[0]), float(s[1])
    else:
        # two-stage deflated power iteration for matrices past the dense limit
        t1 = top_singular_triplet(arr)
        deflated = arr - t1.sigma * np.outer(t1.left, t1.right)
        t2 = top_singular_triplet(deflated)
        s1, s2 = t1.sigma, t2.sigma
    gap = s1 - s2
    return SpectralGapInfo(sigma1=s1, sigma2=s2, gap=gap, degenerate=gap < gap_tol * s1)


def nuclear_norm(a, max_dim: int = SVD_MAX_DIM) -> float:
    arr = as_matrix(a)
    if min(arr.shape) > max_dim:
        raise DimensionTooLargeError(
            f"min dimension {min(arr.shape)} exceeds max_dim={max_dim}"
        )
    return float(np.sum(np.linalg.svd(arr, compute_uv=False)))


def _ns_schedule(iters: int, schedule) -> list[tuple[float, float, float]]:
    if isinstance(schedule, str):
        base = _NS_SCHEDULES[schedule]
    else:
        base = tuple(tuple(float(x) for x in step) for step in schedule)
    steps = [base[min(i, len(base) - 1)] for i in range(iters)]
    return steps


def msign(
    a,
    method: str = "exact_svd",
    iters: int = 5,
    schedule="tuned",
    rank_tol: float = RANK_TOL,
    ns_tol: float = 0.01,
    check: bool = True,
) -> np.ndarray:
    """Orthogonal polar factor U V^T, with singular values set to one.

    `exact_svd` keeps only directions with singular value above
    rank_tol * sigma1.  `newton_schulz` runs `iters` odd-quintic steps on the
    Frobenius-normalized input; by default the post-check verifies the output
    singular values on the numerical row space lie in [1-ns_tol, 1+ns_tol]
    and raises NoConvergenceError otherwise.
    """
    arr = as_matrix(a)
    if not np.any(arr):
        raise ZeroMatrixError("msign undefined for the zero matrix")

    if method == "exact_svd":
        res = full_svd(arr)
        keep = res.singular_values > rank_tol * res.singular_values[0]
        u = res.left_vectors[:, keep]
        v = res.right_vectors[:, keep]
        return u @ v.T

    if method != "newton_schulz":
        raise ValueError(f"unknown msign method: {method!r}")

    transpose = arr.shape[0] > arr.shape[1]
    x = arr.T if transpose else arr
    x = x / np.linalg.norm(x)
    for coef_a, coef_b, coef_c in _ns_schedule(iters, schedule):
        p = x @ x.T
        x = coef_a * x + (coef_b * p + coef_c * (p @ p)) @ x
    out = x.T if transpose else x

    if check:
        s_in = np.linalg.svd(arr, compute_uv=False)
        numerical_rank = int(np.sum(s_in > rank_tol * s_in[0]))
        s_out = np.linalg.svd(out, compute_uv=False)[:numerical_rank]
        if np.any(np.abs(s_out - 1.0) > ns_tol):
            worst = float(np.max(np.abs(s_out - 1.0)))
            raise NoConvergenceError(
                f"newton_schulz singular values deviate by {worst:.3e} > ns_tol={ns_tol}"
            )
    return out
