"""Command-line front end: clip, diagnose, noise, bayes, verify, bench.

Every file-producing command writes a manifest.json next to its outputs; all
CSV output uses the canonical 17-significant-digit float form so reruns with
the same config are byte-identical (wall-clock timings live only in the
manifest).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bayes import ChannelSpec, surrogate_error_profile
from .bench import SweepConfig, grid_sweep, make_problem, resolve_threads, run_training
from .clipops import ClipSpec, apply_clip, resolve_threshold
from .errors import MatrixFormatError, SpecclipError
from .localization import (
    delocalized_signal,
    hill_estimator,
    localization_report,
    spearman_rho,
)
from .matio import format_float, load_matrix, save_matrix
from .matrixcore import entry_max_norm, frobenius_norm, operator_norm
from .noisegen import (
    ContaminationSpec,
    SeedSpec,
    SubspaceSpec,
    heavy_from_json,
    sample_contamination,
    sample_scalar_noise,
    sample_subspace,
)
from .optim import TheoremConstants, verify_lemmas

SCHEMA = "specclip/1"

_CLI_CLIP_KINDS = {
    "hard": "hard_coordinate",
    "global": "global",
    "spectral": "spectral",
    "smooth": "smooth_shrinkage",
}


class ConfigError(Exception):
    """Configuration file missing, malformed, or schema-invalid."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    digest = hashlib.sha256(canonical_json(obj).encode("utf-8")).digest()
    return f"{int.from_bytes(digest[:8], 'big'):016x}"


def load_config(path) -> dict:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    if obj.get("schema") != SCHEMA:
        raise ConfigError(f'config must declare "schema": "{SCHEMA}"')
    return obj


def write_manifest(out_dir: Path, command: str, config_obj, outputs, seeds, timings=None) -> None:
    manifest = {
        "schema": SCHEMA,
        "command": command,
        "config_hash": config_hash(config_obj),
        "tool_version": __version__,
        "seeds": list(seeds),
        "created_at": datetime.now(timezone.utc).isoformat(),
        "outputs": sorted(outputs),
        "timings": timings or {},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _fmt_field(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format_float(float(value))


def rows_to_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt_field(v) for v in row))
    return "\n".join(lines) + "\n"


RESULTS_HEADER = [
    "method", "clip", "stage", "alpha", "lr", "quantile", "seed", "final_loss",
    "diverged", "steps_to_target", "speedup", "spectral_err_final",
    "subspace_angle_final", "wall_time_s",
]

BEST_HEADER = [
    "method", "clip", "stage", "alpha", "lr", "quantile",
    "median_final_loss", "median_speedup",
]


def results_csv(rows) -> str:
    # wall_time_s is pinned to 0 in the table so reruns are byte-identical;
    # measured timings are reported in the manifest instead.
    payload = [
        (
            r.method, r.clip, r.stage, r.alpha, r.lr, r.quantile, r.seed,
            r.final_loss, r.diverged, r.steps_to_target, r.speedup,
            r.spectral_err_final, r.subspace_angle_final, 0.0,
        )
        for r in rows
    ]
    return rows_to_csv(RESULTS_HEADER, payload)


def best_csv(rows) -> str:
    payload = [
        (
            r.method, r.clip, r.stage, r.alpha, r.lr, r.quantile,
            r.median_final_loss, r.median_speedup,
        )
        for r in rows
    ]
    return rows_to_csv(BEST_HEADER, payload)


# ---------------------------------------------------------------------------
# commands


def cmd_clip(args) -> int:
    try:
        matrix = load_matrix(args.input, fmt=args.format)
    except FileNotFoundError:
        print(f"error: input file not found: {args.input}", file=sys.stderr)
        return 2
    except (MatrixFormatError, SpecclipError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    kind = _CLI_CLIP_KINDS[args.kind]
    spec = ClipSpec(
        kind=kind,
        threshold=args.threshold,
        quantile=args.quantile,
        beta=args.beta,
    )
    thr = resolve_threshold(spec, matrix)
    clipped = apply_clip(matrix, spec)
    save_matrix(args.output, clipped, fmt=args.format or "csv")
    report = {
        "kind": kind,
        "threshold": thr,
        "input": {
            "entry_max": entry_max_norm(matrix),
            "frobenius": frobenius_norm(matrix),
            "sigma1": operator_norm(matrix),
        },
        "output": {
            "entry_max": entry_max_norm(clipped),
            "frobenius": frobenius_norm(clipped),
            "sigma1": operator_norm(clipped),
        },
    }
    print(json.dumps(report, sort_keys=True))
    return 0


def _seed_spec(cfg: dict, args, default_stream: int = 0) -> SeedSpec:
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    return SeedSpec(seed=seed, stream=int(cfg.get("stream", default_stream)))


def cmd_noise(args) -> int:
    cfg = load_config(args.config)
    out_dir = _ensure_out_dir(args)
    seed = _seed_spec(cfg, args)
    kind = cfg.get("kind")
    fmt = args.format or "csv"
    ext = "csv" if fmt == "csv" else "bin"
    if kind == "contamination":
        spec = ContaminationSpec.from_json(cfg["spec"])
        sample = sample_contamination(int(cfg["rows"]), int(cfg["cols"]), spec, seed)
        name = f"contamination.{ext}"
        save_matrix(out_dir / name, sample, fmt=fmt)
    elif kind == "subspace":
        spec = SubspaceSpec(
            spike=float(cfg["spec"]["lambda"]),
            rank=int(cfg["spec"]["rank"]),
            orthonormalize=bool(cfg["spec"].get("orthonormalize", False)),
        )
        sample = sample_subspace(int(cfg["rows"]), int(cfg["cols"]), spec, seed)
        name = f"subspace.{ext}"
        save_matrix(out_dir / name, sample, fmt=fmt)
    elif kind == "scalar":
        spec = ContaminationSpec.from_json(cfg["spec"])
        sample = sample_scalar_noise(spec, int(cfg["count"]), seed)
        name = f"scalar.{ext}"
        save_matrix(out_dir / name, sample.reshape(1, -1), fmt=fmt)
    else:
        raise ConfigError(f"unknown noise kind {kind!r}")
    write_manifest(out_dir, "noise", cfg, [name], [seed.seed])
    print(json.dumps({"written": name, "out_dir": str(out_dir)}))
    return 0


def _synthetic_noise(cfg: dict, rows: int, cols: int, seed: SeedSpec) -> np.ndarray:
    kind = cfg.get("kind", "contamination")
    if kind == "contamination":
        return sample_contamination(rows, cols, ContaminationSpec.from_json(cfg), seed)
    if kind == "subspace":
        spec = SubspaceSpec(
            spike=float(cfg["lambda"]),
            rank=int(cfg["rank"]),
            orthonormalize=bool(cfg.get("orthonormalize", False)),
        )
        return sample_subspace(rows, cols, spec, seed)
    if kind == "gaussian":
        return float(cfg.get("sigma", 1.0)) * seed.generator().standard_normal((rows, cols))
    raise ConfigError(f"unknown synthetic noise kind {kind!r}")


def cmd_diagnose(args) -> int:
    cfg = load_config(args.config)
    out_dir = _ensure_out_dir(args)
    base_seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    draws = int(cfg.get("baseline_draws", 256))

    if "signal_file" in cfg:
        signal = load_matrix(cfg["signal_file"])
        noise_mats = [load_matrix(cfg["noise_file"])]
        signals = [signal]
    else:
        spec_sig = cfg.get("signal", {})
        rows = int(spec_sig.get("rows", 64))
        cols = int(spec_sig.get("cols", 64))
        realizations = int(cfg.get("realizations", 1))
        signals = []
        noise_mats = []
        for i in range(realizations):
            sig_seed = SeedSpec(base_seed, 2 * i)
            noise_seed = SeedSpec(base_seed, 2 * i + 1)
            if spec_sig.get("kind", "delocalized") == "delocalized":
                g, _, _ = delocalized_signal(rows, cols, sig_seed)
            else:
                g = sig_seed.generator().standard_normal((rows, cols))
            signals.append(g)
            noise_mats.append(_synthetic_noise(cfg.get("noise", {}), rows, cols, noise_seed))

    reports = []
    maxima = []
    sigma1s = []
    for i, (g, e) in enumerate(zip(signals, noise_mats)):
        rep = localization_report(g, e, draws=draws, seed=SeedSpec(base_seed, 10_000 + i))
        reports.append(rep)
        maxima.append(entry_max_norm(e))
        sigma1s.append(operator_norm(e))

    pooled = np.concatenate([np.abs(e).ravel() for e in noise_mats])
    try:
        hill = hill_estimator(pooled)
    except SpecclipError:
        hill = None
    spearman = spearman_rho(maxima, sigma1s) if len(reports) >= 3 else None

    med = lambda xs: float(np.median(np.asarray(xs)))
    report = {
        "realizations": len(reports),
        "r_max": med([r.r_max for r in reports]),
        "r": med([r.r for r in reports]),
        "R": med([r.ratio for r in reports]),
        "baseline_median": med([r.baseline_median for r in reports]),
        "R_hat": med([r.normalized_ratio for r in reports]),
        "sigma1": med([r.sigma1 for r in reports]),
        "gap": med([r.gap for r in reports]),
        "spearman": spearman,
        "hill": hill,
    }
    (out_dir / "diagnose_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    write_manifest(out_dir, "diagnose", cfg, ["diagnose_report.json"], [base_seed])
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_bayes(args) -> int:
    cfg = load_config(args.config)
    out_dir = _ensure_out_dir(args)
    channel = cfg.get("channel", {})
    spec = ChannelSpec(
        sigma_x=float(channel.get("sigma_x", 1.0)),
        noise=ContaminationSpec.from_json(channel.get("noise", {"alpha": 0.1, "sigma": 1.0})),
    )
    grid_cfg = cfg.get("y_grid", {"start": 0.0, "stop": 10.0, "points": 41, "spacing": "linear"})
    start, stop = float(grid_cfg["start"]), float(grid_cfg["stop"])
    points = int(grid_cfg.get("points", 41))
    if grid_cfg.get("spacing", "linear") == "log":
        ys = np.logspace(np.log10(start), np.log10(stop), points)
    else:
        ys = np.linspace(start, stop, points)
    tau = float(cfg.get("tau", spec.sigma_x))
    profile = surrogate_error_profile(spec, tau, ys)
    header = ["y", "pi", "bayes_mean", "surrogate", "abs_err"]
    payload = list(zip(profile.y, profile.retention, profile.bayes_mean, profile.surrogate, profile.abs_err))
    (out_dir / "bayes_profile.csv").write_bytes(rows_to_csv(header, payload).encode("ascii"))
    write_manifest(
        out_dir, "bayes", cfg, ["bayes_profile.csv"], [],
        timings={"best_tau": profile.best_tau, "best_max_err": profile.best_max_err},
    )
    print(json.dumps({"best_tau": profile.best_tau, "best_max_err": profile.best_max_err}))
    return 0


def cmd_verify(args) -> int:
    tc = None
    mc_draws = 1_000_000
    cfg: dict = {"schema": SCHEMA, "command": "verify", "defaults": True}
    if args.config:
        cfg = load_config(args.config)
        consts = cfg.get("constants")
        if consts:
            tc = TheoremConstants(
                grad_bound=float(consts.get("B", 1.0)),
                smoothness=float(consts.get("L", 1.0)),
                suboptimality=float(consts.get("Delta", 1.0)),
                alpha=float(consts.get("alpha", 0.3)),
                sigma=float(consts.get("sigma", 1.0)),
                gamma=float(consts.get("gamma", 1.0)),
                rows=int(consts.get("m", 8)),
                cols=int(consts.get("n", 8)),
            )
        mc_draws = int(cfg.get("mc_draws", mc_draws))
    t0 = time.perf_counter()
    checks = verify_lemmas(tc, mc_draws=mc_draws)
    elapsed = time.perf_counter() - t0
    for check in checks:
        status = "pass" if check.passed else "FAIL"
        print(f"{status}  {check.name}: measured={check.measured:.6g} bound={check.bound:.6g}  [{check.detail}]")
    report = {"checks": [c.to_json() for c in checks], "all_passed": all(c.passed for c in checks)}
    if args.out_dir:
        out_dir = _ensure_out_dir(args)
        (out_dir / "verify_report.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        write_manifest(out_dir, "verify", cfg, ["verify_report.json"], [], timings={"seconds": elapsed})
    return 0 if report["all_passed"] else 1


def sweep_config_from_json(cfg: dict) -> SweepConfig:
    heavy = heavy_from_json(cfg.get("heavy", {"kind": "student_t", "nu": 1.0, "scale": 3.0}))
    problem = cfg.get("problem", {})
    return SweepConfig(
        d_out=int(problem.get("d_out", 32)),
        d_h=int(problem.get("d_h", 32)),
        n=int(problem.get("n", 128)),
        methods=tuple(cfg.get("methods", ["gd", "spectral_gd"])),
        clips=tuple(cfg.get("clips", ["none", "hard", "smooth"])),
        alphas=tuple(float(a) for a in cfg.get("alphas", [0.0, 1e-3, 1e-2, 5e-2, 1e-1, 0.5, 0.8, 1.0])),
        lrs=tuple(float(x) for x in cfg.get("lrs", [0.001, 0.005, 0.01, 0.02, 0.05, 0.1])),
        quantiles=tuple(float(q) for q in cfg.get("quantiles", [0.90, 0.95, 0.99, 0.995, 0.999, 0.9995, 0.99999])),
        seeds=tuple(int(s) for s in cfg.get("seeds", list(range(10)))),
        sigma=float(cfg.get("sigma", 1.0)),
        heavy=heavy,
        steps=int(cfg.get("steps", 500)),
        subspace_k=int(cfg.get("subspace_k", 4)),
        spectral_scale=str(cfg.get("spectral_scale", "unit")),
    )


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    sweep_cfg = sweep_config_from_json(cfg)
    out_dir = _ensure_out_dir(args)
    threads = args.threads if args.threads is not None else cfg.get("threads")
    result = grid_sweep(sweep_cfg, threads=resolve_threads(threads))
    outputs = ["results.csv", "best.csv"]
    (out_dir / "results.csv").write_bytes(results_csv(result.rows).encode("ascii"))
    (out_dir / "best.csv").write_bytes(best_csv(result.best).encode("ascii"))
    if args.emit_plot_data:
        name = _emit_plot_data(out_dir, sweep_cfg, result)
        outputs.append(name)
    write_manifest(
        out_dir, "bench", cfg, outputs, list(sweep_cfg.seeds),
        timings={"sweep_seconds": result.wall_time_s},
    )
    print(json.dumps({"rows": len(result.rows), "out_dir": str(out_dir)}))
    return 0


def _emit_plot_data(out_dir: Path, cfg: SweepConfig, result) -> str:
    header = [
        "method", "clip", "alpha", "lr", "quantile", "seed", "step",
        "loss", "spectral_err", "subspace_angle",
    ]
    payload = []
    for best in result.best:
        for seed in cfg.seeds:
            problem = make_problem(cfg.d_out, cfg.d_h, cfg.n, seed)
            rc = cfg.run_config(best.method, best.clip, best.alpha, best.lr, best.quantile)
            res = run_training(problem, rc, seed, metrics="full")
            for step in range(cfg.steps):
                payload.append(
                    (
                        best.method, best.clip, best.alpha, best.lr, best.quantile,
                        seed, step + 1, res.loss_curve[step],
                        res.spectral_error_curve[step], res.subspace_angle_curve[step],
                    )
                )
    (out_dir / "curves.csv").write_bytes(rows_to_csv(header, payload).encode("ascii"))
    return "curves.csv"


def _ensure_out_dir(args) -> Path:
    out = Path(args.out_dir or "specclip-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specclip")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out-dir", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker count (falls back to SPECCLIP_THREADS, then CPU count)")
    parser.add_argument("--format", choices=["csv", "bin"], default=None,
                        help="matrix file format for reads and writes")
    sub = parser.add_subparsers(dest="command", required=True)

    p_clip = sub.add_parser("clip", help="clip a matrix file")
    p_clip.add_argument("--input", required=True)
    p_clip.add_argument("--output", required=True)
    p_clip.add_argument("--kind", choices=sorted(_CLI_CLIP_KINDS), required=True)
    p_clip.add_argument("--threshold", type=float, default=None)
    p_clip.add_argument("--quantile", type=float, default=None)
    p_clip.add_argument("--beta", type=float, default=1.0)
    p_clip.set_defaults(func=cmd_clip)

    for name, func in (
        ("diagnose", cmd_diagnose),
        ("noise", cmd_noise),
        ("bayes", cmd_bayes),
        ("bench", cmd_bench),
    ):
        p = sub.add_parser(name)
        p.add_argument("config")
        p.set_defaults(func=func)
    sub.choices["bench"].add_argument("--emit-plot-data", action="store_true")

    p_verify = sub.add_parser("verify", help="run the scalar-lemma suite")
    p_verify.add_argument("config", nargs="?", default=None)
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, MatrixFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SpecclipError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
