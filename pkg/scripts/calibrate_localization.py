#!/usr/bin/env python3
"""Calibration sweep for the localization-ratio tolerance bands.

Draws many independent 64-realization batches per noise regime and prints the
distribution of the batch medians, which is how the regime thresholds used by
the diagnostics and the acceptance suite were fixed.  Rerun after changing
the baseline draw count or the signal construction.
"""

import argparse

import numpy as np

from specclip.localization import delocalized_signal, localization_report
from specclip.noisegen import ContaminationSpec, SeedSpec, StudentT, sample_contamination


def batch_medians(batch_index: int, m: int, n: int, realizations: int, draws: int) -> dict:
    rng = np.random.default_rng(88_000 + batch_index)
    contam = ContaminationSpec(alpha=0.05, sigma=1.0, heavy=StudentT(nu=2.0, scale=1.0))
    out = {"gauss": [], "spike": [], "aligned": [], "contam": []}
    for i in range(realizations):
        tag = batch_index * realizations + i
        g, u, v = delocalized_signal(m, n, SeedSpec(500_000 + tag))
        base_seed = SeedSpec(700_000 + tag)
        out["gauss"].append(
            localization_report(g, rng.standard_normal((m, n)), draws=draws, seed=base_seed).normalized_ratio
        )
        spike = np.zeros((m, n))
        spike[int(np.argmax(np.abs(u))), int(np.argmax(np.abs(v)))] = 1.0
        out["spike"].append(localization_report(g, spike, draws=draws, seed=base_seed).normalized_ratio)
        out["aligned"].append(
            localization_report(g, 3.0 * np.outer(u, v), draws=draws, seed=base_seed).normalized_ratio
        )
        e = sample_contamination(m, n, contam, SeedSpec(900_000 + tag))
        out["contam"].append(localization_report(g, e, draws=draws, seed=base_seed).normalized_ratio)
    return {k: float(np.median(vs)) for k, vs in out.items()}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--batches", type=int, default=8)
    ap.add_argument("--realizations", type=int, default=64)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--baseline-draws", type=int, default=256)
    args = ap.parse_args()

    rows = [
        batch_medians(b, args.size, args.size, args.realizations, args.baseline_draws)
        for b in range(args.batches)
    ]
    print(f"{args.batches} batches of {args.realizations} realizations at {args.size}x{args.size}")
    for key in ("gauss", "spike", "aligned", "contam"):
        vals = np.array([r[key] for r in rows])
        print(
            f"{key:8s} batch-median range [{vals.min():.4g}, {vals.max():.4g}] "
            f"median {np.median(vals):.4g}"
        )
    print("bands in use: gauss in [0.2, 5], spike >= 50, aligned <= 0.02, contam > 5")


if __name__ == "__main__":
    main()
