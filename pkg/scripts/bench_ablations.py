#!/usr/bin/env python3
"""Benchmark every ablation variant and print a throughput comparison.

Runs the synthetic-patch benchmark for each standard pipeline variant
(baseline only, full pipeline, novel-only, shuffled order, and each
baseline+single-novel setup) and reports per-patch cost plus the projected
epoch time, so the overhead of each appearance transform can be read off
directly.

Usage:
    python3 scripts/bench_ablations.py [--patch 96,96,96] [--iters 10]
                                       [--warmup 3] [--seed 0] [--json PATH]
"""

from __future__ import annotations

import argparse
import json
import sys

from voxelaug import ablation_variants, make_ablation_config, run_benchmark


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--patch", default="96,96,96")
    ap.add_argument("--iters", type=int, default=10)
    ap.add_argument("--warmup", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="write all reports to this JSON file")
    ns = ap.parse_args()

    patch = tuple(int(p) for p in ns.patch.split(","))
    if len(patch) != 3:
        ap.error("--patch expects three comma-separated integers")

    reports = {}
    width = max(len(v) for v in ablation_variants())
    print(f"{'variant':<{width}}  {'ms/patch':>10}  {'patches/s':>10}  {'epoch (s)':>10}")
    for variant in ablation_variants():
        cfg = make_ablation_config(ns.seed, variant)
        rep = run_benchmark(
            cfg,
            patch_dims=patch,
            iterations=ns.iters,
            warmup=ns.warmup,
            config_name=variant,
        )
        reports[variant] = rep.to_dict()
        print(
            f"{variant:<{width}}  {rep.ms_per_patch:>10.2f}  "
            f"{rep.patches_per_s:>10.2f}  {rep.epoch_seconds:>10.1f}"
        )

    if ns.json:
        with open(ns.json, "w") as fh:
            json.dump(reports, fh, indent=2)
        print(f"\nwrote {ns.json}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
