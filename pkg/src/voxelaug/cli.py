"""Command-line interface.

Subcommands bind the library into file-in/file-out batch workflows:

- ``preprocess``  reorient + resample + (optional) relabel an image/label pair
- ``augment``     apply one named transform with explicit JSON params
- ``pipeline``    apply a full pipeline config to an image/label pair
- ``ablate``      materialize every ablation variant config into a directory
- ``eval``        Dice CSVs + significance matrix from prediction/reference dirs
- ``bench``       throughput measurement on synthetic patches
- ``preview``     montage volume showing each novel transform side by side

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
All randomness is surfaced through ``--seed`` / ``--sample-id`` / ``--epoch``
so any output can be regenerated exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bench import run_benchmark
from .errors import (
    ConfigError,
    DataError,
    DegenerateDataError,
    UsageError,
    VoxelAugError,
)
from .kernels import worker_count
from .metrics import DiceReport, aggregate_subjects, dice_per_class, wilcoxon_signed_rank
from .nifti import load_labels, load_volume, save_nifti
from .pipeline import (
    NOVEL_TRANSFORMS,
    REGISTRY,
    _params_from_dict,
    ablation_variants,
    apply_pipeline,
    load_config,
    make_ablation_config,
    make_default_config,
    save_config,
)
from .rng import RngStream, derive_substream
from .synth import make_synthetic_sample
from .volume import LabelMap, LabelMapping, Sample, Volume, relabel, reorient, resample

_CLASS_COLUMNS = {1: "dice_vertebra", 2: "dice_ivd", 3: "dice_canal"}


class _Parser(argparse.ArgumentParser):
    """argparse that raises a UsageError instead of calling sys.exit(2)."""

    def error(self, message: str):  # noqa: D102 - argparse hook
        raise UsageError(f"{self.prog}: {message}")


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _triple(text: str, flag: str, cast=float) -> tuple:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"{flag} expects three comma-separated values, got {text!r}")
    try:
        return tuple(cast(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"{flag}: {exc}") from exc


def _parse_label_mapping(text: str, strict: bool) -> LabelMapping:
    """Mapping syntax: inline "9:1,10:2,11:3" or a path to a JSON object."""
    entries: dict[int, int] = {}
    candidate = Path(text)
    if candidate.suffix == ".json" or candidate.is_file():
        try:
            doc = json.loads(candidate.read_text())
        except OSError as exc:
            raise DataError(f"cannot read label mapping {text}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"label mapping {text} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise DataError(f"label mapping {text} must be a JSON object")
        items = doc.items()
    else:
        items = []
        for chunk in text.split(","):
            if ":" not in chunk:
                raise UsageError(f"bad label mapping entry {chunk!r}; expected SRC:DST")
            src, dst = chunk.split(":", 1)
            items.append((src, dst))
    for src, dst in items:
        try:
            entries[int(src)] = int(dst)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"label mapping entries must be integers: {src!r}:{dst!r}") from exc
    try:
        return LabelMapping(entries, strict=strict)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# subcommands


def _cmd_preprocess(ns) -> int:
    if (ns.labels is None) != (ns.out_labels is None):
        raise UsageError("--labels and --out-labels must be given together")
    spacing = _triple(ns.spacing, "--spacing", float)
    image = load_volume(ns.image)
    image = reorient(image, ns.orientation)
    image = resample(image, spacing, "trilinear")
    if ns.labels is not None:
        labels = load_labels(ns.labels)
        labels = reorient(labels, ns.orientation)
        labels = resample(labels, spacing, "nearest")
        if ns.label_mapping is not None:
            mapping = _parse_label_mapping(ns.label_mapping, strict=ns.strict_mapping)
            labels = relabel(labels, mapping)
        Sample(image=image, labels=labels)  # validates shared geometry
        save_nifti(labels, ns.out_labels)
    save_nifti(image, ns.out_image)
    return 0


def _augment_sample(ns) -> Sample:
    entry = REGISTRY.get(ns.transform)
    if entry is None:
        raise UsageError(f"unknown transform {ns.transform!r}; known: {sorted(REGISTRY)}")
    try:
        raw = json.loads(ns.params)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--params is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError("--params must be a JSON object")
    try:
        params = _params_from_dict(ns.transform, raw, "--params")
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    image = load_volume(ns.image)
    if ns.labels is not None:
        labels = load_labels(ns.labels)
    else:
        labels = LabelMap(np.zeros(image.dims, dtype=np.uint8), image.affine.copy())
    sample = Sample(image=image, labels=labels)
    rng = RngStream(ns.seed, derive_substream(ns.sample_id, ns.epoch, 0))
    return entry.apply(sample, rng, params)


def _cmd_augment(ns) -> int:
    out = _augment_sample(ns)
    save_nifti(out.image, ns.out_image)
    if ns.out_labels is not None:
        save_nifti(out.labels, ns.out_labels)
    return 0


def _cmd_pipeline(ns) -> int:
    cfg = load_config(ns.config)
    if ns.seed is not None:
        cfg = replace(cfg, global_seed=ns.seed)
    image = load_volume(ns.image)
    labels = load_labels(ns.labels)
    sample = Sample(image=image, labels=labels)
    out = apply_pipeline(sample, cfg, sample_id=ns.sample_id, epoch=ns.epoch)
    save_nifti(out.image, ns.out_image)
    if ns.out_labels is not None:
        save_nifti(out.labels, ns.out_labels)
    return 0


def _cmd_ablate(ns) -> int:
    outdir = Path(ns.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for variant in ablation_variants():
        cfg = make_ablation_config(ns.seed, variant)
        path = outdir / f"{variant}.json"
        save_config(cfg, path)
        print(f"{variant}: {path}")
    return 0


def _nifti_stems(directory: Path) -> dict[str, Path]:
    if not directory.is_dir():
        raise DataError(f"not a directory: {directory}")
    out: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        name = path.name
        if name.endswith(".nii.gz"):
            stem = name[: -len(".nii.gz")]
        elif name.endswith(".nii"):
            stem = name[: -len(".nii")]
        else:
            continue
        if stem in out:
            _warn(f"duplicate stem {stem!r} in {directory}; keeping {out[stem].name}")
            continue
        out[stem] = path
    return out


def _dice_columns(classes: tuple[int, ...]) -> list[str]:
    return [_CLASS_COLUMNS.get(c, f"dice_class_{c}") for c in classes]


def _eval_one_set(
    name: str,
    pred_dir: Path,
    refs: dict[str, Path],
    classes: tuple[int, ...],
    workers: int,
) -> list[tuple[str, DiceReport]]:
    preds = _nifti_stems(pred_dir)
    stems = sorted(set(refs) & set(preds))
    for stem in sorted(set(refs) - set(preds)):
        _warn(f"{name}: reference {stem} has no prediction; skipped")
    for stem in sorted(set(preds) - set(refs)):
        _warn(f"{name}: prediction {stem} has no reference; skipped")
    if not stems:
        raise DataError(f"{name}: no prediction/reference pairs found")

    def one(stem: str) -> tuple[str, DiceReport]:
        report = dice_per_class(load_labels(preds[stem]), load_labels(refs[stem]), classes)
        return stem, report

    if workers > 1 and len(stems) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, stems))
    else:
        rows = [one(stem) for stem in stems]
    rows.sort(key=lambda r: r[0])
    return rows


def _cmd_eval(ns) -> int:
    classes = _triple(ns.classes, "--classes", int) if ns.classes else (1, 2, 3)
    refs = _nifti_stems(Path(ns.ref))
    outdir = Path(ns.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    named_preds: list[tuple[str, Path]] = []
    for spec in ns.pred:
        if "=" in spec:
            name, _, path = spec.partition("=")
        else:
            name, path = Path(spec).name, spec
        if not name:
            raise UsageError(f"empty prediction-set name in {spec!r}")
        if any(name == n for n, _ in named_preds):
            raise UsageError(f"duplicate prediction-set name {name!r}")
        named_preds.append((name, Path(path)))

    workers = worker_count()
    columns = _dice_columns(classes)
    per_set: dict[str, list[tuple[str, DiceReport]]] = {}
    for name, pred_dir in named_preds:
        rows = _eval_one_set(name, pred_dir, refs, classes, workers)
        per_set[name] = rows
        with open(outdir / f"{name}_per_subject.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["subject_id"] + columns + ["dice_global"])
            for stem, report in rows:
                writer.writerow(
                    [stem]
                    + [f"{report.per_class[c]:.6f}" for c in classes]
                    + [f"{report.global_dice:.6f}"]
                )

    with open(outdir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prediction_set", "n_subjects"] + columns + ["dice_global"])
        for name, _ in named_preds:
            rows = per_set[name]
            reports = [r for _, r in rows]
            class_means = [
                sum(r.per_class[c] for r in reports) / len(reports) for c in classes
            ]
            writer.writerow(
                [name, len(rows)]
                + [f"{m:.6f}" for m in class_means]
                + [f"{aggregate_subjects(reports):.6f}"]
            )
            print(
                f"{name}: n={len(rows)} "
                + " ".join(f"{col}={m:.4f}" for col, m in zip(columns, class_means))
                + f" dice_global={aggregate_subjects(reports):.4f}"
            )

    if len(named_preds) > 1:
        names = [n for n, _ in named_preds]
        globals_by_set = {
            n: {stem: rep.global_dice for stem, rep in per_set[n]} for n in names
        }
        with open(outdir / "significance.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([""] + names)
            for row_name in names:
                cells = [row_name]
                for col_name in names:
                    if row_name == col_name:
                        cells.append("")
                        continue
                    common = sorted(set(globals_by_set[row_name]) & set(globals_by_set[col_name]))
                    a = [globals_by_set[row_name][s] for s in common]
                    b = [globals_by_set[col_name][s] for s in common]
                    try:
                        res = wilcoxon_signed_rank(a, b)
                        cells.append(f"p={res.p_value:.6g};sig={int(res.significant)}")
                    except DegenerateDataError:
                        cells.append("p=nan;sig=0")
                writer.writerow(cells)
    return 0


def _cmd_bench(ns) -> int:
    cfg = load_config(ns.config) if ns.config else make_default_config(0)
    patch = _triple(ns.patch, "--patch", int)
    try:
        report = run_benchmark(
            cfg,
            patch_dims=patch,
            iterations=ns.iters,
            warmup=ns.warmup,
            mode=ns.mode,
            workers=ns.workers,
            config_name=Path(ns.config).stem if ns.config else "default",
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(report.format_table())
    if ns.json:
        Path(ns.json).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return 0


def _cmd_preview(ns) -> int:
    if ns.image is not None:
        image = load_volume(ns.image)
        if ns.labels is not None:
            labels = load_labels(ns.labels)
        else:
            labels = LabelMap(np.zeros(image.dims, dtype=np.uint8), image.affine.copy())
        sample = Sample(image=image, labels=labels)
    else:
        dims = _triple(ns.dims, "--dims", int)
        sample = make_synthetic_sample(dims, seed=ns.seed)

    panels: list[tuple[str, np.ndarray]] = [("original", sample.image.voxels)]
    for position, name in enumerate(NOVEL_TRANSFORMS):
        entry = REGISTRY[name]
        rng = RngStream(ns.seed, derive_substream(ns.sample_id, ns.epoch, position))
        out = entry.apply(sample, rng, entry.params_cls())
        panels.append((name, out.image.voxels))

    gap_width = 2
    fill = float(sample.image.voxels.min())
    dims = sample.image.dims
    gap = np.full((dims[0], dims[1], gap_width), fill, dtype=np.float32)
    slabs: list[np.ndarray] = []
    for i, (_, arr) in enumerate(panels):
        if i:
            slabs.append(gap)
        slabs.append(arr)
    mosaic = np.concatenate(slabs, axis=2)
    save_nifti(Volume(np.ascontiguousarray(mosaic), sample.image.affine.copy()), ns.out)
    print(f"panel order (axis 2, gap {gap_width} voxels):")
    for i, (name, _) in enumerate(panels):
        print(f"  {i}: {name}")
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="voxelaug",
        description="Deterministic volumetric augmentation and evaluation toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("preprocess", help="reorient, resample, and relabel a volume")
    p.add_argument("--image", required=True)
    p.add_argument("--labels")
    p.add_argument("--out-image", required=True)
    p.add_argument("--out-labels")
    p.add_argument("--orientation", default="PIR")
    p.add_argument("--spacing", default="1,1,1", help="target spacing in mm: a,b,c")
    p.add_argument("--label-mapping", help='inline "SRC:DST,..." or a JSON file')
    p.add_argument("--strict-mapping", action="store_true",
                   help="error on label values missing from the mapping")
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("augment", help="apply one named transform")
    p.add_argument("--transform", required=True)
    p.add_argument("--params", default="{}", help="JSON object of transform parameters")
    p.add_argument("--image", required=True)
    p.add_argument("--labels")
    p.add_argument("--out-image", required=True)
    p.add_argument("--out-labels")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-id", type=int, default=0)
    p.add_argument("--epoch", type=int, default=0)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("pipeline", help="apply a full pipeline config")
    p.add_argument("--config", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out-image", required=True)
    p.add_argument("--out-labels")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config's global_seed")
    p.add_argument("--sample-id", type=int, default=0)
    p.add_argument("--epoch", type=int, default=0)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("ablate", help="write every ablation variant config")
    p.add_argument("--outdir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("eval", help="Dice + significance from label directories")
    p.add_argument("--ref", required=True, help="reference label directory")
    p.add_argument("--pred", required=True, action="append",
                   help="prediction directory, optionally NAME=DIR (repeatable)")
    p.add_argument("--outdir", required=True)
    p.add_argument("--classes", default=None, help="three class ids, default 1,2,3")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench", help="measure augmentation throughput")
    p.add_argument("--config", help="pipeline config JSON (default: built-in pipeline)")
    p.add_argument("--patch", default="128,128,128")
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--mode", choices=("pipeline", "per-transform"), default="pipeline")
    p.add_argument("--json", help="also write the report as JSON to this path")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("preview", help="montage volume of every novel transform")
    p.add_argument("--image", help="input image (default: synthetic sample)")
    p.add_argument("--labels")
    p.add_argument("--out", required=True)
    p.add_argument("--dims", default="96,96,96", help="synthetic sample dims")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-id", type=int, default=0)
    p.add_argument("--epoch", type=int, default=0)
    p.set_defaults(func=_cmd_preview)

    return parser


def run_command(argv=None) -> int:
    """Parse and dispatch; returns the process exit code (0/1/2/3)."""
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
        return ns.func(ns)
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return code if isinstance(code, int) else 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VoxelAugError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception:
        traceback.print_exc()
        return 3


def main(argv=None) -> int:
    return run_command(argv)


if __name__ == "__main__":
    sys.exit(main())
