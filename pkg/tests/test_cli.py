"""Command-line interface driven in-process: flows, formats, exit codes."""

from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from voxelaug import load_labels, load_volume, make_synthetic_sample, save_nifti
from voxelaug.cli import main, run_command
from voxelaug.pipeline import ablation_variants, load_config, make_default_config, save_config


def _write_sample(tmp_path, name="s", dims=(14, 12, 10), seed=0, spacing=(1, 1, 1), orientation="PIR"):
    s = make_synthetic_sample(dims, seed=seed, spacing=spacing, orientation=orientation)
    img = tmp_path / f"{name}_img.nii.gz"
    lab = tmp_path / f"{name}_lab.nii.gz"
    save_nifti(s.image, img)
    save_nifti(s.labels, lab)
    return s, img, lab


# ---------------------------------------------------------------------------
# exit taxonomy


def test_no_arguments_is_usage_error(capsys):
    assert run_command([]) == 1
    assert "error" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert run_command(["--help"]) == 0
    assert "preprocess" in capsys.readouterr().out


def test_unknown_subcommand(capsys):
    assert run_command(["rotate"]) == 1


def test_missing_required_flag(capsys):
    assert run_command(["pipeline"]) == 1


def test_main_is_run_command():
    assert main(["--help"]) == 0


# ---------------------------------------------------------------------------
# preprocess


def test_preprocess_identity_roundtrip(tmp_path, capsys):
    s, img, lab = _write_sample(tmp_path)
    out_img = tmp_path / "out_img.nii.gz"
    out_lab = tmp_path / "out_lab.nii.gz"
    code = run_command(
        ["preprocess", "--image", str(img), "--labels", str(lab),
         "--out-image", str(out_img), "--out-labels", str(out_lab),
         "--orientation", "PIR", "--spacing", "1,1,1"]
    )
    assert code == 0
    got = load_volume(out_img)
    assert np.array_equal(got.voxels, s.image.voxels)
    assert np.allclose(got.affine, s.image.affine, atol=1e-5)
    assert np.array_equal(load_labels(out_lab).voxels, s.labels.voxels)


def test_preprocess_reorients_and_resamples(tmp_path):
    s, img, lab = _write_sample(
        tmp_path, dims=(10, 12, 14), spacing=(2.0, 2.0, 2.0), orientation="RAS"
    )
    out_img = tmp_path / "o.nii.gz"
    out_lab = tmp_path / "ol.nii.gz"
    code = run_command(
        ["preprocess", "--image", str(img), "--labels", str(lab),
         "--out-image", str(out_img), "--out-labels", str(out_lab)]
    )
    assert code == 0
    got = load_volume(out_img)
    assert got.orientation == "PIR"
    assert got.spacing == pytest.approx((1.0, 1.0, 1.0))
    # RAS(10,12,14) → PIR permutes to (12,14,10); 2 mm → 1 mm doubles each
    assert got.dims == (24, 28, 20)
    labs = load_labels(out_lab)
    assert labs.dims == got.dims
    assert set(np.unique(labs.voxels)) <= {0, 1, 2, 3}


def test_preprocess_label_mapping_inline(tmp_path):
    s, img, lab = _write_sample(tmp_path)
    out_img = tmp_path / "o.nii.gz"
    out_lab = tmp_path / "ol.nii.gz"
    code = run_command(
        ["preprocess", "--image", str(img), "--labels", str(lab),
         "--out-image", str(out_img), "--out-labels", str(out_lab),
         "--label-mapping", "1:1,2:1,3:2"]
    )
    assert code == 0
    got = load_labels(out_lab)
    assert set(np.unique(got.voxels)) <= {0, 1, 2}
    merged = (s.labels.voxels == 1) | (s.labels.voxels == 2)
    assert np.array_equal(got.voxels == 1, merged)


def test_preprocess_label_mapping_json_file(tmp_path):
    s, img, lab = _write_sample(tmp_path)
    mapping = tmp_path / "map.json"
    mapping.write_text(json.dumps({"1": 3, "2": 2, "3": 1}))
    out_lab = tmp_path / "ol.nii.gz"
    code = run_command(
        ["preprocess", "--image", str(img), "--labels", str(lab),
         "--out-image", str(tmp_path / "o.nii.gz"), "--out-labels", str(out_lab),
         "--label-mapping", str(mapping)]
    )
    assert code == 0
    got = load_labels(out_lab)
    assert np.array_equal(got.voxels == 3, s.labels.voxels == 1)


def test_preprocess_strict_mapping_failure(tmp_path, capsys):
    _, img, lab = _write_sample(tmp_path)
    code = run_command(
        ["preprocess", "--image", str(img), "--labels", str(lab),
         "--out-image", str(tmp_path / "o.nii.gz"), "--out-labels", str(tmp_path / "ol.nii.gz"),
         "--label-mapping", "1:1", "--strict-mapping"]
    )
    assert code == 2  # unmapped labels present in the data
    assert "error" in capsys.readouterr().err


def test_preprocess_labels_flag_pairing(tmp_path, capsys):
    _, img, lab = _write_sample(tmp_path)
    code = run_command(
        ["preprocess", "--image", str(img), "--labels", str(lab),
         "--out-image", str(tmp_path / "o.nii.gz")]
    )
    assert code == 1


def test_preprocess_bad_spacing(tmp_path):
    _, img, _ = _write_sample(tmp_path)
    code = run_command(
        ["preprocess", "--image", str(img), "--out-image", str(tmp_path / "o.nii.gz"),
         "--spacing", "1,1"]
    )
    assert code == 1


def test_preprocess_missing_input_is_data_error(tmp_path):
    code = run_command(
        ["preprocess", "--image", str(tmp_path / "absent.nii.gz"),
         "--out-image", str(tmp_path / "o.nii.gz")]
    )
    assert code == 2


# ---------------------------------------------------------------------------
# augment


def test_augment_deterministic(tmp_path):
    _, img, lab = _write_sample(tmp_path)
    outs = []
    for tag in ("a", "b"):
        out_img = tmp_path / f"{tag}.nii.gz"
        code = run_command(
            ["augment", "--transform", "bias_field", "--image", str(img),
             "--out-image", str(out_img), "--seed", "3"]
        )
        assert code == 0
        outs.append(out_img.read_bytes())
    assert outs[0] == outs[1]


def test_augment_with_params_and_labels(tmp_path):
    s, img, lab = _write_sample(tmp_path)
    out_img = tmp_path / "o.nii.gz"
    out_lab = tmp_path / "ol.nii.gz"
    code = run_command(
        ["augment", "--transform", "redistribute_seg",
         "--params", '{"alpha_range": [0.5, 0.5], "bins": 32}',
         "--image", str(img), "--labels", str(lab),
         "--out-image", str(out_img), "--out-labels", str(out_lab)]
    )
    assert code == 0
    assert np.array_equal(load_labels(out_lab).voxels, s.labels.voxels)
    assert not np.array_equal(load_volume(out_img).voxels, s.image.voxels)


def test_augment_unknown_transform(tmp_path, capsys):
    _, img, _ = _write_sample(tmp_path)
    code = run_command(
        ["augment", "--transform", "motion_blur", "--image", str(img),
         "--out-image", str(tmp_path / "o.nii.gz")]
    )
    assert code == 1
    assert "unknown transform" in capsys.readouterr().err


def test_augment_bad_params(tmp_path):
    _, img, _ = _write_sample(tmp_path)
    base = ["augment", "--transform", "bias_field", "--image", str(img),
            "--out-image", str(tmp_path / "o.nii.gz")]
    assert run_command(base + ["--params", "{not json"]) == 1
    assert run_command(base + ["--params", '{"order": 0}']) == 1
    assert run_command(base + ["--params", '{"wavelength": 3}']) == 1
    assert run_command(base + ["--params", "[1,2]"]) == 1


# ---------------------------------------------------------------------------
# pipeline


def test_pipeline_runs_and_is_byte_deterministic(tmp_path):
    _, img, lab = _write_sample(tmp_path)
    cfg_path = tmp_path / "cfg.json"
    save_config(make_default_config(11), cfg_path)
    blobs = []
    for tag in ("a", "b"):
        out_img = tmp_path / f"{tag}.nii.gz"
        out_lab = tmp_path / f"{tag}l.nii.gz"
        code = run_command(
            ["pipeline", "--config", str(cfg_path), "--image", str(img), "--labels", str(lab),
             "--out-image", str(out_img), "--out-labels", str(out_lab),
             "--sample-id", "4", "--epoch", "2"]
        )
        assert code == 0
        blobs.append(out_img.read_bytes() + out_lab.read_bytes())
    assert blobs[0] == blobs[1]


def test_pipeline_seed_override_changes_output(tmp_path):
    _, img, lab = _write_sample(tmp_path)
    cfg_path = tmp_path / "cfg.json"
    save_config(make_default_config(0), cfg_path)
    outs = []
    for seed in ("0", "1"):
        out_img = tmp_path / f"s{seed}.nii.gz"
        code = run_command(
            ["pipeline", "--config", str(cfg_path), "--image", str(img), "--labels", str(lab),
             "--out-image", str(out_img), "--seed", seed]
        )
        assert code == 0
        outs.append(load_volume(out_img).voxels)
    assert not np.array_equal(outs[0], outs[1])


def test_pipeline_config_errors(tmp_path):
    _, img, lab = _write_sample(tmp_path)
    args = ["pipeline", "--image", str(img), "--labels", str(lab),
            "--out-image", str(tmp_path / "o.nii.gz")]
    assert run_command(args + ["--config", str(tmp_path / "absent.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"novel": [{"name": "bias_field", "weight": 2}]}')
    assert run_command(args + ["--config", str(bad)]) == 2


# ---------------------------------------------------------------------------
# ablate


def test_ablate_writes_all_variants(tmp_path, capsys):
    outdir = tmp_path / "cfgs"
    assert run_command(["ablate", "--outdir", str(outdir), "--seed", "5"]) == 0
    names = sorted(p.stem for p in outdir.glob("*.json"))
    assert names == sorted(ablation_variants())
    assert len(names) == 12
    for variant in ablation_variants():
        cfg = load_config(outdir / f"{variant}.json")
        assert cfg.global_seed == 5
    out = capsys.readouterr().out
    assert "ours_random_order" in out


# ---------------------------------------------------------------------------
# eval


def _write_label_dir(tmp_path, dirname, stems, mutate=None):
    d = tmp_path / dirname
    d.mkdir(exist_ok=True)
    for i, stem in enumerate(stems):
        s = make_synthetic_sample((12, 12, 12), seed=i)
        labels = s.labels
        if mutate is not None:
            arr = labels.voxels.copy()
            mutate(arr, i)
            labels = labels.with_voxels(arr)
        save_nifti(labels, d / f"{stem}.nii.gz")
    return d


def test_eval_self_comparison_is_perfect(tmp_path, capsys):
    stems = ["subB", "subA", "subC"]
    ref = _write_label_dir(tmp_path, "ref", stems)
    pred = _write_label_dir(tmp_path, "pred", stems)
    outdir = tmp_path / "report"
    code = run_command(
        ["eval", "--ref", str(ref), "--pred", f"model={pred}", "--outdir", str(outdir)]
    )
    assert code == 0
    with open(outdir / "model_per_subject.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["subject_id", "dice_vertebra", "dice_ivd", "dice_canal", "dice_global"]
    assert [r[0] for r in rows[1:]] == ["subA", "subB", "subC"]  # sorted
    assert all(v == "1.000000" for r in rows[1:] for v in r[1:])
    with open(outdir / "summary.csv") as fh:
        srows = list(csv.reader(fh))
    assert srows[1][0] == "model"
    assert srows[1][1] == "3"
    assert srows[1][-1] == "1.000000"
    assert "dice_global=1.0000" in capsys.readouterr().out


def test_eval_imperfect_prediction_scores_below_one(tmp_path):
    stems = ["s1", "s2", "s3", "s4", "s5", "s6"]
    ref = _write_label_dir(tmp_path, "ref", stems)

    def damage(arr, i):
        arr[: arr.shape[0] // 2] = 0

    pred = _write_label_dir(tmp_path, "pred", stems, mutate=damage)
    outdir = tmp_path / "report"
    assert run_command(
        ["eval", "--ref", str(ref), "--pred", f"model={pred}", "--outdir", str(outdir)]
    ) == 0
    with open(outdir / "summary.csv") as fh:
        srows = list(csv.reader(fh))
    assert float(srows[1][-1]) < 1.0


def test_eval_unpaired_stems_warn_and_skip(tmp_path, capsys):
    ref = _write_label_dir(tmp_path, "ref", ["a", "b", "c"])
    pred = _write_label_dir(tmp_path, "pred", ["b", "c", "d"])
    outdir = tmp_path / "report"
    code = run_command(
        ["eval", "--ref", str(ref), "--pred", f"m={pred}", "--outdir", str(outdir)]
    )
    assert code == 0
    err = capsys.readouterr().err
    assert "no prediction" in err and "no reference" in err
    with open(outdir / "m_per_subject.csv") as fh:
        rows = list(csv.reader(fh))
    assert [r[0] for r in rows[1:]] == ["b", "c"]


def test_eval_no_pairs_is_data_error(tmp_path, capsys):
    ref = _write_label_dir(tmp_path, "ref", ["a"])
    pred = _write_label_dir(tmp_path, "pred", ["z"])
    code = run_command(
        ["eval", "--ref", str(ref), "--pred", f"m={pred}", "--outdir", str(tmp_path / "r")]
    )
    assert code == 2


def test_eval_significance_matrix(tmp_path):
    stems = [f"s{i}" for i in range(8)]
    ref = _write_label_dir(tmp_path, "ref", stems)
    good = _write_label_dir(tmp_path, "good", stems)

    def erode(arr, i):
        arr[:: 2] = 0

    rough = _write_label_dir(tmp_path, "rough", stems, mutate=erode)
    outdir = tmp_path / "report"
    code = run_command(
        ["eval", "--ref", str(ref), "--pred", f"good={good}", "--pred", f"rough={rough}",
         "--outdir", str(outdir)]
    )
    assert code == 0
    with open(outdir / "significance.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["", "good", "rough"]
    assert rows[1][1] == ""  # diagonal empty
    cell = rows[1][2]
    assert cell.startswith("p=") and ";sig=" in cell
    # matrix is symmetric in content
    assert rows[2][1] == cell


def test_eval_degenerate_pairs_report_nan(tmp_path):
    stems = ["s1", "s2", "s3"]
    ref = _write_label_dir(tmp_path, "ref", stems)
    p1 = _write_label_dir(tmp_path, "p1", stems)
    p2 = _write_label_dir(tmp_path, "p2", stems)  # identical scores → zero diffs
    outdir = tmp_path / "report"
    assert run_command(
        ["eval", "--ref", str(ref), "--pred", f"p1={p1}", "--pred", f"p2={p2}",
         "--outdir", str(outdir)]
    ) == 0
    with open(outdir / "significance.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[1][2] == "p=nan;sig=0"


def test_eval_duplicate_set_name(tmp_path):
    ref = _write_label_dir(tmp_path, "ref", ["a"])
    code = run_command(
        ["eval", "--ref", str(ref), "--pred", f"m={ref}", "--pred", f"m={ref}",
         "--outdir", str(tmp_path / "r")]
    )
    assert code == 1


def test_eval_missing_ref_dir(tmp_path):
    pred = _write_label_dir(tmp_path, "pred", ["a"])
    code = run_command(
        ["eval", "--ref", str(tmp_path / "nowhere"), "--pred", f"m={pred}",
         "--outdir", str(tmp_path / "r")]
    )
    assert code == 2


# ---------------------------------------------------------------------------
# bench


def test_bench_cli_json_report(tmp_path, capsys):
    report_path = tmp_path / "bench.json"
    code = run_command(
        ["bench", "--patch", "12,12,12", "--iters", "3", "--warmup", "1",
         "--json", str(report_path)]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "per patch" in out
    doc = json.loads(report_path.read_text())
    assert doc["iterations"] == 3
    assert doc["patch_dims"] == [12, 12, 12]
    assert doc["ms_per_patch"] > 0


def test_bench_cli_validation():
    assert run_command(["bench", "--patch", "12,12"]) == 1
    assert run_command(["bench", "--patch", "12,12,12", "--iters", "0"]) == 1
    assert run_command(["bench", "--mode", "fastest"]) == 1


def test_bench_cli_custom_config(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    save_config(make_default_config(0), cfg_path)
    code = run_command(
        ["bench", "--config", str(cfg_path), "--patch", "10,10,10", "--iters", "2",
         "--warmup", "0", "--mode", "per-transform"]
    )
    assert code == 0
    assert "random_spatial" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# preview


def test_preview_synthetic_mosaic(tmp_path, capsys):
    out = tmp_path / "mosaic.nii.gz"
    code = run_command(["preview", "--out", str(out), "--dims", "12,12,12", "--seed", "2"])
    assert code == 0
    legend = capsys.readouterr().out
    assert "original" in legend
    for name in ("intensity_inversion", "function_transform"):
        assert name in legend
    vol = load_volume(out)
    # 9 panels of depth 12 plus 8 gaps of width 2 along axis 2
    assert vol.dims == (12, 12, 9 * 12 + 8 * 2)


def test_preview_from_file(tmp_path):
    _, img, lab = _write_sample(tmp_path, dims=(10, 10, 10))
    out = tmp_path / "mosaic.nii.gz"
    code = run_command(
        ["preview", "--image", str(img), "--labels", str(lab), "--out", str(out)]
    )
    assert code == 0
    assert load_volume(out).dims == (10, 10, 9 * 10 + 8 * 2)
