"""Random Gaussian feature regression harness: corrupted-gradient training,
joint learning-rate / clipping-quantile sweeps, and the speedup / spectral /
subspace metrics reported per run."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .clipops import quantile_threshold
from .errors import (
    DegenerateSpectrumError,
    InvalidSpecError,
    ShapeMismatchError,
    ZeroMatrixError,
)
from .matrixcore import as_matrix, full_svd
from .noisegen import ContaminationSpec, SeedSpec, StudentT, draw_contamination

PROBLEM_STREAM = 0
NOISE_STREAM = 1

METHODS = ("gd", "spectral_gd")
CLIPS = ("none", "hard", "smooth")


@dataclass(frozen=True)
class RegressionProblem:
    """Realizable least squares: targets are exactly weights_true @ features."""

    weights_true: np.ndarray   # d_out x d_h
    features: np.ndarray       # d_h  x n
    targets: np.ndarray        # d_out x n

    @property
    def n(self) -> int:
        return self.features.shape[1]

    def loss(self, w) -> float:
        resid = w @ self.features - self.targets
        return 0.5 * float(np.sum(resid * resid)) / self.n


def make_problem(d_out: int, d_h: int, n: int, seed: int) -> RegressionProblem:
    if min(d_out, d_h, n) < 1:
        raise InvalidSpecError("problem dimensions must be positive")
    rng = SeedSpec(seed, PROBLEM_STREAM).generator()
    w_true = rng.standard_normal((d_out, d_h))
    features = rng.standard_normal((d_h, n))
    return RegressionProblem(weights_true=w_true, features=features, targets=w_true @ features)


def true_gradient(w, problem: RegressionProblem) -> np.ndarray:
    wm = as_matrix(w)
    if wm.shape != problem.weights_true.shape:
        raise ShapeMismatchError("weight shape does not match the problem")
    return (wm @ problem.features - problem.targets) @ problem.features.T / problem.n


@dataclass(frozen=True)
class RunConfig:
    method: str
    clip: str
    lr: float
    noise: ContaminationSpec
    quantile: float | None = None
    steps: int = 500
    subspace_k: int = 4
    spectral_scale: str = "unit"

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidSpecError(f"unknown method {self.method!r}")
        if self.clip not in CLIPS:
            raise InvalidSpecError(f"unknown clip {self.clip!r}")
        if self.lr <= 0:
            raise InvalidSpecError("lr must be > 0")
        if self.steps < 1:
            raise InvalidSpecError("steps must be >= 1")
        if self.clip != "none" and not (self.quantile and 0 < self.quantile < 1):
            raise InvalidSpecError("clipped runs need a quantile in (0, 1)")

    @property
    def stage(self) -> str:
        return "post" if self.method == "gd" else "pre"


@dataclass
class RunResult:
    loss_curve: np.ndarray
    final_loss: float
    diverged: bool
    spectral_error_curve: np.ndarray | None
    subspace_angle_curve: np.ndarray | None
    spectral_err_final: float
    subspace_angle_final: float
    wall_time_s: float


def subspace_recovery(g_clipped, g_true, k: int) -> float:
    """Largest principal angle (radians) between the top-k left singular
    subspaces of the two matrices, via the smallest singular value of the
    cross-Gram of the bases."""
    a = as_matrix(g_clipped)
    b = as_matrix(g_true)
    if a.shape != b.shape:
        raise ShapeMismatchError("matrices must have equal shape")
    if k < 1 or k > min(a.shape):
        raise InvalidSpecError("k must satisfy 1 <= k <= min(m, n)")
    if not np.any(a) or not np.any(b):
        raise ZeroMatrixError("subspace recovery undefined for the zero matrix")
    ua = full_svd(a)
    ub = full_svd(b)
    if ua.singular_values[k - 1] <= 0 or ub.singular_values[k - 1] <= 0:
        raise DegenerateSpectrumError(f"rank below k={k}")
    cross = ua.left_vectors[:, :k].T @ ub.left_vectors[:, :k]
    cosines = np.linalg.svd(cross, compute_uv=False)
    return float(np.arccos(np.clip(cosines[-1], 0.0, 1.0)))


def _clip_update(gt: np.ndarray, clip: str, q: float) -> np.ndarray:
    # threshold recomputed per step from the raw |entries| of the noisy update
    tau = quantile_threshold(gt, q)
    if clip == "hard":
        return np.clip(gt, -tau, tau)
    return gt * np.exp(-np.abs(gt) / tau)


def run_training(
    problem: RegressionProblem,
    config: RunConfig,
    seed: int,
    metrics: str = "full",
) -> RunResult:
    """Train on the regression problem with per-step resampled noise.

    `metrics="full"` records the spectral-error and subspace-angle curves at
    every step (two extra SVDs per step); `"final"` evaluates them only at
    the last completed step, which the sweep uses.  The trajectory itself is
    identical in both modes.
    """
    if metrics not in ("full", "final"):
        raise InvalidSpecError("metrics must be 'full' or 'final'")
    t0 = time.perf_counter()
    a = problem.features
    y = problem.targets
    inv_n = 1.0 / problem.n
    w = np.zeros_like(problem.weights_true)
    rng = SeedSpec(seed, NOISE_STREAM).generator()
    steps = config.steps
    losses = np.full(steps, np.inf)
    want_curves = metrics == "full"
    spec_curve = np.full(steps, np.nan) if want_curves else None
    angle_curve = np.full(steps, np.nan) if want_curves else None
    spec_final = math.nan
    angle_final = math.nan
    diverged = False
    resid = w @ a - y
    scale = 1.0 if config.spectral_scale == "unit" else 0.2 * math.sqrt(max(w.shape))
    clip_kind, quantile, spectral, lr = config.clip, config.quantile, config.method == "spectral_gd", config.lr
    noise_spec, at = config.noise, a.T
    shape = w.shape

    for k in range(steps):
        g_true = resid @ at * inv_n
        noise = draw_contamination(rng, shape, noise_spec)
        g_noisy = g_true + noise
        if not np.isfinite(g_noisy).all():
            diverged = True
            break
        clipped = g_noisy if clip_kind == "none" else _clip_update(g_noisy, clip_kind, quantile)
        if spectral:
            if np.any(clipped):
                u, _, vt = np.linalg.svd(clipped, full_matrices=False)
                update = scale * (u @ vt)
            else:
                update = clipped
        else:
            update = clipped
        w -= lr * update
        resid -= lr * (update @ a)
        loss = 0.5 * float(np.sum(resid * resid)) * inv_n
        if not math.isfinite(loss):
            diverged = True
            break
        losses[k] = loss
        measure = want_curves or k == steps - 1
        if measure and np.any(g_true):
            s_true = np.linalg.svd(g_true, compute_uv=False)[0]
            s_clip = np.linalg.svd(clipped, compute_uv=False)[0] if np.any(clipped) else 0.0
            spec_final = abs(s_clip - s_true)
            try:
                angle_final = subspace_recovery(clipped, g_true, config.subspace_k)
            except (ZeroMatrixError, DegenerateSpectrumError):
                angle_final = math.nan
            if want_curves:
                spec_curve[k] = spec_final
                angle_curve[k] = angle_final

    final = float(losses[-1]) if not diverged else math.inf
    return RunResult(
        loss_curve=losses,
        final_loss=final,
        diverged=diverged,
        spectral_error_curve=spec_curve,
        subspace_angle_curve=angle_curve,
        spectral_err_final=spec_final,
        subspace_angle_final=angle_final,
        wall_time_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# speedup metric


def time_to_target(curve, target: float) -> float | None:
    """First 1-based step (linearly interpolated) at which the curve reaches
    the target loss, or None if it never does."""
    c = np.asarray(curve, dtype=np.float64)
    if c.size == 0:
        return None
    if c[0] <= target:
        return 1.0
    below = np.nonzero(c <= target)[0]
    if below.size == 0:
        return None
    j = int(below[0])
    prev, cur = c[j - 1], c[j]
    frac = (prev - target) / (prev - cur) if prev > cur else 1.0
    return float(j + frac)  # step j is time j+1; interpolate from time j


@dataclass(frozen=True)
class SpeedupResult:
    speedup: float
    reached: bool
    steps_to_target: float | None


def speedup_metric(baseline_curve, method_curve) -> SpeedupResult:
    """Steps-to-reach-the-baseline-final-loss ratio, interpolated.

    When the method never reaches the target, falls back to the final-loss
    ratio (flagged, always < 1).  A diverged baseline is measured against the
    best loss it attained before diverging.
    """
    base = np.asarray(baseline_curve, dtype=np.float64)
    target = float(base[-1]) if base.size else math.nan
    if not math.isfinite(target):
        finite = base[np.isfinite(base)]
        if finite.size == 0:
            return SpeedupResult(speedup=math.nan, reached=False, steps_to_target=None)
        target = float(np.min(finite))
    t_base = time_to_target(base, target)
    t_method = time_to_target(method_curve, target)
    if t_method is None or t_base is None:
        meth = np.asarray(method_curve, dtype=np.float64)
        final = float(meth[-1]) if meth.size else math.inf
        ratio = 0.0 if not math.isfinite(final) or final <= 0 else target / final
        return SpeedupResult(speedup=min(ratio, 1.0), reached=False, steps_to_target=None)
    return SpeedupResult(speedup=t_base / t_method, reached=True, steps_to_target=t_method)


# ---------------------------------------------------------------------------
# grid sweep


@dataclass(frozen=True)
class SweepConfig:
    d_out: int = 32
    d_h: int = 32
    n: int = 128
    methods: tuple = METHODS
    clips: tuple = CLIPS
    alphas: tuple = (0.0, 1e-3, 1e-2, 5e-2, 1e-1, 0.5, 0.8, 1.0)
    lrs: tuple = (0.001, 0.005, 0.01, 0.02, 0.05, 0.1)
    quantiles: tuple = (0.90, 0.95, 0.99, 0.995, 0.999, 0.9995, 0.99999)
    seeds: tuple = tuple(range(10))
    sigma: float = 1.0
    heavy: object = field(default_factory=lambda: StudentT(nu=1.0, scale=3.0))
    steps: int = 500
    subspace_k: int = 4
    spectral_scale: str = "unit"

    def noise_for(self, alpha: float) -> ContaminationSpec:
        return ContaminationSpec(alpha=alpha, sigma=self.sigma, heavy=self.heavy)

    def run_config(self, method: str, clip: str, alpha: float, lr: float, q) -> RunConfig:
        return RunConfig(
            method=method,
            clip=clip,
            lr=lr,
            noise=self.noise_for(alpha),
            quantile=q,
            steps=self.steps,
            subspace_k=self.subspace_k,
            spectral_scale=self.spectral_scale,
        )


@dataclass(frozen=True)
class RunRow:
    method: str
    clip: str
    stage: str
    alpha: float
    lr: float
    quantile: float | None
    seed: int
    final_loss: float
    diverged: bool
    steps_to_target: float | None
    speedup: float
    spectral_err_final: float
    subspace_angle_final: float


@dataclass(frozen=True)
class BestRow:
    method: str
    clip: str
    stage: str
    alpha: float
    lr: float
    quantile: float | None
    median_final_loss: float
    median_speedup: float


@dataclass
class SweepResult:
    rows: list
    best: list
    wall_time_s: float


def _baseline_task(args):
    cfg, method, alpha, seed = args
    problem = make_problem(cfg.d_out, cfg.d_h, cfg.n, seed)
    out = []
    for lr in cfg.lrs:
        rc = cfg.run_config(method, "none", alpha, lr, None)
        res = run_training(problem, rc, seed, metrics="final")
        out.append(
            (lr, res.final_loss, res.diverged, res.spectral_err_final,
             res.subspace_angle_final, np.asarray(res.loss_curve, dtype=np.float64))
        )
    return out


def _clipped_task(args):
    cfg, method, clip, alpha, seed, target_curve = args
    problem = make_problem(cfg.d_out, cfg.d_h, cfg.n, seed)
    rows = []
    for lr in cfg.lrs:
        for q in cfg.quantiles:
            rc = cfg.run_config(method, clip, alpha, lr, q)
            res = run_training(problem, rc, seed, metrics="final")
            sp = speedup_metric(target_curve, res.loss_curve)
            rows.append(
                RunRow(
                    method=method, clip=clip, stage=rc.stage, alpha=alpha, lr=lr,
                    quantile=q, seed=seed, final_loss=res.final_loss,
                    diverged=res.diverged, steps_to_target=sp.steps_to_target,
                    speedup=sp.speedup, spectral_err_final=res.spectral_err_final,
                    subspace_angle_final=res.subspace_angle_final,
                )
            )
    return rows


def _median(values) -> float:
    return float(np.median(np.asarray(values, dtype=np.float64)))


def resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get("SPECCLIP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def grid_sweep(cfg: SweepConfig, threads: int | None = None) -> SweepResult:
    """Full factorial sweep; rows come back in deterministic grid order.

    Baselines (clip "none") run first; for each (method, alpha) the
    best-by-median learning rate defines the per-seed target curves against
    which every run's speedup is measured.
    """
    t0 = time.perf_counter()
    nworkers = resolve_threads(threads)
    use_none = "none" in cfg.clips
    clip_kinds = [c for c in cfg.clips if c != "none"]

    base_tasks = [
        (cfg, method, alpha, seed)
        for method in cfg.methods
        for alpha in cfg.alphas
        for seed in cfg.seeds
    ]

    def run_tasks(fn, tasks):
        if nworkers == 1 or len(tasks) <= 1:
            return [fn(t) for t in tasks]
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            return list(pool.map(fn, tasks, chunksize=1))

    base_out = dict(zip([(m, a, s) for (_, m, a, s) in base_tasks], run_tasks(_baseline_task, base_tasks)))

    # pick the best baseline lr per (method, alpha) by median final loss
    target_curves: dict = {}
    best_none_lr: dict = {}
    for method in cfg.methods:
        for alpha in cfg.alphas:
            med_by_lr = []
            for i, lr in enumerate(cfg.lrs):
                finals = [base_out[(method, alpha, s)][i][1] for s in cfg.seeds]
                med_by_lr.append(_median(finals))
            i_best = int(np.nanargmin(med_by_lr))
            best_none_lr[(method, alpha)] = i_best
            for s in cfg.seeds:
                target_curves[(method, alpha, s)] = base_out[(method, alpha, s)][i_best][5]

    clip_tasks = []
    clip_task_index = {}
    for method in cfg.methods:
        for clip in clip_kinds:
            for alpha in cfg.alphas:
                for seed in cfg.seeds:
                    clip_task_index[(method, clip, alpha, seed)] = len(clip_tasks)
                    clip_tasks.append(
                        (cfg, method, clip, alpha, seed, target_curves[(method, alpha, seed)])
                    )
    clip_out = run_tasks(_clipped_task, clip_tasks)

    rows: list = []
    for method in cfg.methods:
        for clip in cfg.clips:
            if clip == "none":
                if not use_none:
                    continue
                for alpha in cfg.alphas:
                    for lr_i, lr in enumerate(cfg.lrs):
                        for seed in cfg.seeds:
                            lr_, final, div, spec_f, ang_f, curve = base_out[(method, alpha, seed)][lr_i]
                            sp = speedup_metric(target_curves[(method, alpha, seed)], curve)
                            rows.append(
                                RunRow(
                                    method=method, clip="none",
                                    stage="post" if method == "gd" else "pre",
                                    alpha=alpha, lr=lr, quantile=None, seed=seed,
                                    final_loss=final, diverged=div,
                                    steps_to_target=sp.steps_to_target, speedup=sp.speedup,
                                    spectral_err_final=spec_f, subspace_angle_final=ang_f,
                                )
                            )
            else:
                for alpha in cfg.alphas:
                    for seed in cfg.seeds:
                        rows.extend(clip_out[clip_task_index[(method, clip, alpha, seed)]])

    best = _reduce_best(cfg, rows, best_none_lr)
    return SweepResult(rows=rows, best=best, wall_time_s=time.perf_counter() - t0)


def _reduce_best(cfg: SweepConfig, rows, best_none_lr) -> list:
    by_cell: dict = {}
    for row in rows:
        by_cell.setdefault(
            (row.method, row.clip, row.alpha, row.lr, row.quantile), []
        ).append(row)
    best_rows = []
    for method in cfg.methods:
        for clip in cfg.clips:
            for alpha in cfg.alphas:
                candidates = []
                lr_list = cfg.lrs
                q_list = [None] if clip == "none" else cfg.quantiles
                for lr in lr_list:
                    for q in q_list:
                        cell = by_cell.get((method, clip, alpha, lr, q))
                        if not cell:
                            continue
                        candidates.append(
                            (
                                _median([r.final_loss for r in cell]),
                                lr,
                                q,
                                _median([r.speedup for r in cell]),
                            )
                        )
                if not candidates:
                    continue
                med_vals = np.array([c[0] for c in candidates])
                i_best = int(np.nanargmin(med_vals))
                med, lr, q, sp = candidates[i_best]
                best_rows.append(
                    BestRow(
                        method=method, clip=clip,
                        stage="post" if method == "gd" else "pre",
                        alpha=alpha, lr=lr, quantile=q,
                        median_final_loss=med, median_speedup=sp,
                    )
                )
    return best_rows
