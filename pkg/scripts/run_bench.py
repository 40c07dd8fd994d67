#!/usr/bin/env python3
"""Run the regression-clipping sweep with the default grids (or a quick
subset) and print the per-contamination comparison of the best hard-clip and
smooth-shrinkage cells."""

import argparse
import time

from specclip.bench import SweepConfig, grid_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true",
                    help="reduced grids and seeds for a fast smoke run")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--steps", type=int, default=500)
    args = ap.parse_args()

    if args.quick:
        cfg = SweepConfig(
            alphas=(0.0, 0.1, 0.5, 1.0),
            lrs=(0.01, 0.05, 0.1),
            quantiles=(0.9, 0.99, 0.999),
            seeds=tuple(range(4)),
            steps=min(args.steps, 200),
        )
    else:
        cfg = SweepConfig(steps=args.steps)

    t0 = time.time()
    result = grid_sweep(cfg, threads=args.threads)
    print(f"{len(result.rows)} runs in {time.time() - t0:.0f}s")

    best = {(b.method, b.clip, b.alpha): b for b in result.best}
    print(f"{'method':12s} {'alpha':>7s} {'none':>12s} {'hard':>12s} {'smooth':>12s}")
    for method in cfg.methods:
        for alpha in cfg.alphas:
            cells = [best.get((method, clip, alpha)) for clip in ("none", "hard", "smooth")]
            vals = [f"{c.median_final_loss:12.4g}" if c else " " * 12 for c in cells]
            print(f"{method:12s} {alpha:7.3g} {' '.join(vals)}")


if __name__ == "__main__":
    main()
