"""Clipped-update rules, the prescribed thresholds and step sizes, and the
numerical verification suite for the scalar bias/variance estimates behind
the convergence guarantees."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erfc

from .clipops import ClipSpec, apply_clip
from .errors import (
    InvalidConstantsError,
    InvalidSpecError,
    QuadratureFailureError,
    ShapeMismatchError,
    ThresholdBelowBoundError,
)
from .matrixcore import as_matrix, msign
from .noisegen import Cauchy, ContaminationSpec, SeedSpec

THRESHOLD_KINDS = ("post_hard", "post_smooth", "pre_hard", "pre_smooth")


def normal_upper_tail(t: float) -> float:
    """P(N(0,1) >= t) via the complementary error function."""
    return 0.5 * erfc(t / math.sqrt(2.0))


@dataclass(frozen=True)
class TheoremConstants:
    """Problem constants the threshold and step-size prescriptions consume.

    grad_bound is the entry-wise bound on the true gradient, smoothness the
    Lipschitz constant of the gradient, suboptimality the initial objective
    gap.  Noise scales follow the contamination mixture.
    """

    grad_bound: float
    smoothness: float
    suboptimality: float
    alpha: float
    sigma: float
    gamma: float
    rows: int
    cols: int

    def __post_init__(self):
        if self.grad_bound < 0 or self.smoothness <= 0 or self.suboptimality <= 0:
            raise InvalidConstantsError("need grad_bound >= 0, smoothness > 0, suboptimality > 0")
        if not 0 <= self.alpha <= 1 or self.sigma < 0:
            raise InvalidConstantsError("need alpha in [0,1] and sigma >= 0")
        if self.alpha > 0 and self.gamma <= 0:
            raise InvalidConstantsError("heavy-tail scale gamma must be > 0 when alpha > 0")
        if self.rows < 1 or self.cols < 1:
            raise InvalidConstantsError("dimensions must be positive")

    @property
    def dim(self) -> int:
        return self.rows * self.cols

    @property
    def min_dim(self) -> int:
        return min(self.rows, self.cols)

    @property
    def max_dim(self) -> int:
        return max(self.rows, self.cols)

    @property
    def aspect(self) -> float:
        return math.sqrt(self.max_dim / self.min_dim)


def threshold(kind: str, tc: TheoremConstants) -> float:
    """Minimal admissible clipping threshold for the given update family."""
    b, a, s, g = tc.grad_bound, tc.alpha, tc.sigma, tc.gamma
    r = tc.min_dim
    if kind == "post_hard":
        return b + max(s * math.sqrt(2.0 * math.log(8.0)), 8.0 * a * g / math.pi)
    if kind == "post_smooth":
        lead = 4.0 * (b + math.sqrt(8.0 / math.pi) * (1.0 - a) * s)
        tail = (64.0 * a * g / math.pi) * math.log(math.e + 64.0 * a / math.pi)
        return max(lead, tail)
    if kind == "pre_hard":
        sq = math.sqrt(r)
        return b + max(
            s * math.sqrt(2.0 * math.log(16.0 * sq)), 16.0 * a * g * sq / math.pi
        )
    if kind == "pre_smooth":
        sq = math.sqrt(r)
        lead = 8.0 * sq * (b + math.sqrt(8.0 / math.pi) * (1.0 - a) * s)
        tail = (128.0 * a * g * sq / math.pi) * math.log(math.e + 128.0 * a * sq / math.pi)
        return max(lead, tail)
    raise InvalidSpecError(f"unknown threshold kind {kind!r}")


@dataclass(frozen=True)
class BiasVarianceBounds:
    rho: float
    variance: float


def bias_variance_bounds(phi: str, thr: float, tc: TheoremConstants) -> BiasVarianceBounds:
    """Closed-form relative-bias coefficient and variance bound for a map.

    phi is "hard" (threshold tau, must exceed grad_bound) or "smooth"
    (threshold c).
    """
    b, a, s, g = tc.grad_bound, tc.alpha, tc.sigma, tc.gamma
    if phi == "hard":
        if thr <= b:
            raise ThresholdBelowBoundError(f"tau={thr} must exceed grad_bound={b}")
        gauss = 0.0 if s == 0 else 2.0 * (1.0 - a) * normal_upper_tail((thr - b) / s)
        cauchy = 0.0
        if a > 0:
            cauchy = (a * g / math.pi) * (1.0 / (thr - b) + 1.0 / (thr + b))
        rho = gauss + cauchy
        var = (1.0 - a) * s * s + 4.0 * a * g * thr / math.pi
        return BiasVarianceBounds(rho=rho, variance=var)
    if phi == "smooth":
        if thr <= 0:
            raise InvalidConstantsError("c must be > 0")
        rho = (b + math.sqrt(8.0 / math.pi) * (1.0 - a) * s) / thr
        if a > 0:
            rho += (8.0 * a * g / (math.pi * thr)) * math.log(math.e + thr / g)
        var = (1.0 - a) * s * s + 8.0 * a * g * thr / (math.pi * math.e)
        return BiasVarianceBounds(rho=rho, variance=var)
    raise InvalidSpecError(f"unknown map {phi!r}")


def hard_map(x, tau: float):
    return np.clip(x, -tau, tau)


def smooth_map(x, c: float):
    x = np.asarray(x, dtype=np.float64)
    return x * np.exp(-np.abs(x) / c)


def smooth_map_deriv(x, c: float):
    x = np.asarray(x, dtype=np.float64)
    t = np.abs(x) / c
    return np.exp(-t) * (1.0 - t)


def _quad_pieces(f, breakpoints) -> float:
    """Adaptive quadrature over the real line split at integrand kinks."""
    pts = sorted(float(p) for p in breakpoints)
    edges = [-np.inf] + pts + [np.inf]
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            if lo == hi:
                continue
            try:
                val, _ = integrate.quad(f, lo, hi, epsabs=1e-12, epsrel=1e-10, limit=300)
            except integrate.IntegrationWarning as exc:
                raise QuadratureFailureError(f"quad on [{lo}, {hi}]: {exc}") from exc
            total += val
    return total


def relative_bias_oracle(phi: str, thr: float, g: float, noise: ContaminationSpec) -> float:
    """Processed mean E[phi(g + xi)] by branch-wise quadrature.

    Independent of the closed-form bias coefficients; used to check the
    relative-bias property |E phi(g+xi) - g| <= rho |g| numerically.
    """
    if phi == "hard":
        scalar = lambda x: float(np.clip(x, -thr, thr))
        kinks_x = (-thr, thr)
    elif phi == "smooth":
        scalar = lambda x: x * math.exp(-abs(x) / thr)
        kinks_x = (0.0,)
    else:
        raise InvalidSpecError(f"unknown map {phi!r}")
    breakpoints = [k - g for k in kinks_x]

    total = 0.0
    if noise.alpha < 1.0:
        if noise.sigma == 0.0:
            gauss_mean = scalar(g)
        else:
            s = noise.sigma
            dens = lambda t: math.exp(-t * t / (2 * s * s)) / (s * math.sqrt(2 * math.pi))
            gauss_mean = _quad_pieces(lambda t: scalar(g + t) * dens(t), breakpoints)
        total += (1.0 - noise.alpha) * gauss_mean
    if noise.alpha > 0.0:
        hpdf = noise.heavy.pdf
        heavy_mean = _quad_pieces(lambda t: scalar(g + t) * float(hpdf(t)), breakpoints)
        total += noise.alpha * heavy_mean
    return total


def log_device_check(a: float, s: float, x: float) -> bool:
    """True when both the premise x >= 2sa log(e+2sa) and the conclusion
    a log(e+x)/x <= 1/s hold (the lemma is one-directional; a failing
    premise makes the check vacuously false, not an assertion error)."""
    if a < 0 or s < 1:
        return False
    premise = x >= 2.0 * s * a * math.log(math.e + 2.0 * s * a)
    if not premise:
        return False
    if x == 0.0:
        return a == 0.0
    return a * math.log(math.e + x) / x <= 1.0 / s + 1e-15


def post_clip_step(x, grad_sample, clip: ClipSpec | None, eta: float) -> np.ndarray:
    """One post-clipped update: x - eta * phi(grad_sample)."""
    xm = as_matrix(x)
    gm = as_matrix(grad_sample)
    if xm.shape != gm.shape:
        raise ShapeMismatchError("iterate and gradient shapes differ")
    if eta < 0:
        raise InvalidSpecError("eta must be >= 0")
    update = gm if clip is None else apply_clip(gm, clip)
    return xm - eta * update


def pre_clip_step(
    x,
    samples,
    clip: ClipSpec | None,
    eta: float,
    scale_mode: str = "unit",
    msign_method: str = "exact_svd",
    ns_iters: int = 5,
) -> np.ndarray:
    """One pre-clipped matrix-sign update.

    Clips each gradient sample, averages, takes the matrix sign, rescales
    (`unit` or the 0.2*sqrt(max dim) convention) and steps.
    """
    xm = as_matrix(x)
    if eta < 0:
        raise InvalidSpecError("eta must be >= 0")
    if not samples:
        raise InvalidSpecError("need at least one gradient sample")
    acc = np.zeros_like(xm)
    for sample in samples:
        gm = as_matrix(sample)
        if gm.shape != xm.shape:
            raise ShapeMismatchError("iterate and sample shapes differ")
        acc += gm if clip is None else apply_clip(gm, clip)
    acc /= len(samples)
    direction = msign(acc, method=msign_method, iters=ns_iters)
    if scale_mode == "unit":
        scale = 1.0
    elif scale_mode == "dims":
        scale = 0.2 * math.sqrt(max(xm.shape))
    else:
        raise InvalidSpecError(f"unknown scale mode {scale_mode!r}")
    return xm - eta * scale * direction


def step_size(kind: str, tc: TheoremConstants, horizon: int, thr: float | None = None) -> float:
    """Prescribed constant step size for a run of `horizon` iterations."""
    if horizon < 1:
        raise InvalidConstantsError("horizon must be >= 1")
    l, delta = tc.smoothness, tc.suboptimality
    if kind in ("post_hard", "post_smooth"):
        if thr is None or thr <= 0:
            raise InvalidConstantsError("post step size needs the clipping threshold")
        reach = thr if kind == "post_hard" else thr / math.e
        return math.sqrt(2.0 * delta / (l * reach * reach * tc.dim * horizon))
    if kind == "pre":
        return math.sqrt(2.0 * delta / (l * tc.min_dim * horizon))
    raise InvalidSpecError(f"unknown step-size kind {kind!r}")


def complexity_budget(kind: str, tc: TheoremConstants, eps: float, thr: float) -> dict:
    """Iteration (and sample) counts sufficient for eps-stationarity."""
    if eps <= 0:
        raise InvalidConstantsError("eps must be > 0")
    l, delta = tc.smoothness, tc.suboptimality
    if kind == "post_hard":
        return {"iterations": math.ceil(8.0 * l * delta * tc.dim * thr**2 / eps**4)}
    if kind == "post_smooth":
        return {"iterations": math.ceil(8.0 * l * delta * tc.dim * thr**2 / (math.e**2 * eps**4))}
    if kind in ("pre_hard", "pre_smooth"):
        phi = "hard" if kind == "pre_hard" else "smooth"
        v = bias_variance_bounds(phi, thr, tc).variance
        r = tc.min_dim
        return {
            "iterations": math.ceil(32.0 * l * r * delta / eps**2),
            "samples_per_iteration": math.ceil(64.0 * tc.aspect**2 * r**3 * v / eps**2),
        }
    raise InvalidSpecError(f"unknown budget kind {kind!r}")


# ---------------------------------------------------------------------------
# numerical lemma suite (the `verify` command)

@dataclass(frozen=True)
class LemmaCheck:
    name: str
    passed: bool
    measured: float
    bound: float
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": self.measured,
            "bound": self.bound,
            "detail": self.detail,
        }


def _bias_grid(b: float, points: int = 82) -> np.ndarray:
    # 41 symmetric magnitudes, zero excluded
    return np.linspace(-b, b, points)[::2]


def _relative_bias_check(phi: str, tc: TheoremConstants, kind: str, quad_slack: float = 1e-8) -> LemmaCheck:
    thr = threshold(kind, tc)
    rho = bias_variance_bounds(phi, thr, tc).rho
    noise = ContaminationSpec(alpha=tc.alpha, sigma=tc.sigma, heavy=Cauchy(tc.gamma))
    worst = 0.0
    for g in _bias_grid(tc.grad_bound):
        m = relative_bias_oracle(phi, thr, float(g), noise)
        worst = max(worst, abs(m - g) / abs(g))
    return LemmaCheck(
        name=f"relative_bias_{phi}",
        passed=worst <= rho + quad_slack,
        measured=worst,
        bound=rho,
        detail=f"threshold={thr:.6g} over 41-point grid",
    )


def _variance_check(phi: str, tc: TheoremConstants, kind: str, draws: int, seed: SeedSpec) -> LemmaCheck:
    thr = threshold(kind, tc)
    v = bias_variance_bounds(phi, thr, tc).variance
    noise = ContaminationSpec(alpha=tc.alpha, sigma=tc.sigma, heavy=Cauchy(tc.gamma))
    rng = seed.generator()
    worst_excess = -math.inf
    worst_g = 0.0
    measured_at_worst = 0.0
    for g in (0.0, tc.grad_bound / 2.0, tc.grad_bound):
        z = rng.standard_normal(draws) * noise.sigma
        mask = rng.random(draws) < noise.alpha
        heavy = noise.heavy.draw(rng, draws)
        xi = np.where(mask, heavy, z)
        vals = hard_map(g + xi, thr) if phi == "hard" else smooth_map(g + xi, thr)
        sample_var = float(np.var(vals, ddof=1))
        centered_sq = (vals - vals.mean()) ** 2
        se = math.sqrt(max(float(np.var(centered_sq, ddof=1)), 0.0) / draws)
        excess = sample_var - (v + 5.0 * se)
        if excess > worst_excess:
            worst_excess = excess
            worst_g = g
            measured_at_worst = sample_var
    return LemmaCheck(
        name=f"variance_{phi}",
        passed=worst_excess <= 0.0,
        measured=measured_at_worst,
        bound=v,
        detail=f"threshold={threshold(kind, tc):.6g}, worst g={worst_g}, {draws} draws, 5 SE slack",
    )


def _deficit_checks(tc: TheoremConstants, kind: str, quad_slack: float = 1e-8) -> list[LemmaCheck]:
    c = threshold(kind, tc)
    s, g = tc.sigma, tc.gamma
    out = []
    dens_g = lambda t: math.exp(-t * t / (2 * s * s)) / (s * math.sqrt(2 * math.pi))
    mu = _quad_pieces(lambda t: float(smooth_map_deriv(t, c)) * dens_g(t), [0.0])
    bound_g = math.sqrt(8.0 / math.pi) * s / c
    out.append(
        LemmaCheck(
            name="derivative_deficit_gaussian",
            passed=(1.0 - mu) <= bound_g + quad_slack,
            measured=1.0 - mu,
            bound=bound_g,
            detail=f"c={c:.6g}",
        )
    )
    hpdf = Cauchy(g).pdf
    kappa = _quad_pieces(lambda t: float(smooth_map_deriv(t, c)) * float(hpdf(t)), [0.0])
    bound_h = (8.0 * g / (math.pi * c)) * math.log(math.e + c / g)
    out.append(
        LemmaCheck(
            name="derivative_deficit_cauchy",
            passed=(1.0 - kappa) <= bound_h + quad_slack,
            measured=1.0 - kappa,
            bound=bound_h,
            detail=f"c={c:.6g}",
        )
    )
    return out


def _log_device_lattice() -> LemmaCheck:
    avals = np.concatenate([[0.0], np.logspace(-3, 3, 19)])
    svals = np.logspace(0, 3, 20)
    failures = 0
    for a in avals:
        for s in svals:
            x0 = 2.0 * s * a * math.log(math.e + 2.0 * s * a)
            for mult in (1.0, 1.5, 10.0):
                x = x0 * mult if x0 > 0 else mult  # a = 0: any positive x
                if not log_device_check(float(a), float(s), float(x)):
                    failures += 1
    return LemmaCheck(
        name="log_device",
        passed=failures == 0,
        measured=float(failures),
        bound=0.0,
        detail="20x20 (a, s) lattice, premise-satisfying x",
    )


_LATTICE_B = (0.1, 1.0, 10.0)
_LATTICE_SIGMA = (0.0, 0.5, 2.0)
_LATTICE_GAMMA = (0.1, 1.0, 10.0)
_LATTICE_ALPHA = (0.0, 0.1, 0.5, 0.9, 1.0)


def _threshold_lattice_check(stage: str, r_values=(1,)) -> LemmaCheck:
    worst_ratio = 0.0
    count = 0
    for r in r_values:
        target = 0.5 if stage == "post" else 1.0 / (4.0 * math.sqrt(r))
        for b in _LATTICE_B:
            for s in _LATTICE_SIGMA:
                for g in _LATTICE_GAMMA:
                    for a in _LATTICE_ALPHA:
                        tc = TheoremConstants(
                            grad_bound=b, smoothness=1.0, suboptimality=1.0,
                            alpha=a, sigma=s, gamma=g, rows=r, cols=r,
                        )
                        for phi, kind in (("hard", f"{stage}_hard"), ("smooth", f"{stage}_smooth")):
                            thr = threshold(kind, tc)
                            if phi == "hard" and thr <= b:
                                # alpha = 0 with sigma = 0: noiseless, bias is zero
                                count += 1
                                continue
                            rho = bias_variance_bounds(phi, thr, tc).rho
                            worst_ratio = max(worst_ratio, rho / target)
                            count += 1
    return LemmaCheck(
        name=f"threshold_{stage}",
        passed=worst_ratio <= 1.0 + 1e-12,
        measured=worst_ratio,
        bound=1.0,
        detail=f"{count} lattice points, rho relative to its cap",
    )


def verify_lemmas(
    tc: TheoremConstants | None = None,
    mc_draws: int = 1_000_000,
    seed: SeedSpec = SeedSpec(2024, 77),
) -> list[LemmaCheck]:
    """Run the full scalar-lemma suite; every check must pass for exit 0."""
    if tc is None:
        tc = TheoremConstants(
            grad_bound=1.0, smoothness=1.0, suboptimality=1.0,
            alpha=0.3, sigma=1.0, gamma=1.0, rows=8, cols=8,
        )
    checks = [
        _relative_bias_check("hard", tc, "post_hard"),
        _relative_bias_check("smooth", tc, "post_smooth"),
        _variance_check("hard", tc, "post_hard", mc_draws, seed),
        _variance_check("smooth", tc, "post_smooth", mc_draws, SeedSpec(seed.seed, seed.stream + 1)),
        *_deficit_checks(tc, "post_smooth"),
        _log_device_lattice(),
        _threshold_lattice_check("post"),
        _threshold_lattice_check("pre", r_values=(1, 4, 16, 64)),
    ]
    return checks
