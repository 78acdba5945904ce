#!/usr/bin/env python3
"""Write a small synthetic NIfTI dataset for trying out the CLI.

Creates N image/label pairs under the output directory:

    <outdir>/images/subNNN.nii.gz
    <outdir>/labels/subNNN.nii.gz

Each pair is deterministic in (--seed, subject index), so the dataset can be
regenerated exactly.

Usage:
    python3 scripts/make_demo_data.py --outdir demo --count 4 [--dims 64,64,64]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from voxelaug import make_synthetic_sample, save_nifti


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", required=True)
    ap.add_argument("--count", type=int, default=4)
    ap.add_argument("--dims", default="64,64,64")
    ap.add_argument("--seed", type=int, default=0)
    ns = ap.parse_args()

    dims = tuple(int(p) for p in ns.dims.split(","))
    if len(dims) != 3:
        ap.error("--dims expects three comma-separated integers")

    outdir = Path(ns.outdir)
    (outdir / "images").mkdir(parents=True, exist_ok=True)
    (outdir / "labels").mkdir(parents=True, exist_ok=True)
    for i in range(ns.count):
        sample = make_synthetic_sample(dims, seed=ns.seed + i)
        save_nifti(sample.image, outdir / "images" / f"sub{i:03d}.nii.gz")
        save_nifti(sample.labels, outdir / "labels" / f"sub{i:03d}.nii.gz")
        print(f"sub{i:03d}: dims={dims}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
