"""CLI tests: the full pipeline through the click runner, exit-code
contract, run manifests, and argv-determinism of artifacts."""

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from vdpkit.cli import main
from vdpkit.metrics import RatingTable, fleiss_kappa, match_rates


def _run(*argv, expect=0):
    runner = CliRunner()
    result = runner.invoke(main, [str(a) for a in argv], catch_exceptions=False)
    assert result.exit_code == expect, result.output
    return result


def _tree_digest(root: Path, skip=("run_manifest.json",)) -> str:
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.name not in skip:
            h.update(str(path.relative_to(root)).encode())
            h.update(path.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One shared generate/split/train pass for the read-only tests."""
    root = tmp_path_factory.mktemp("cli")
    _run(
        "generate", "--style", "sdv1", "--rules", "1-2,27-30", "--count", 20,
        "--size", 64, "--out", root / "corpus", "--seed", 5, "--workers", 1,
    )
    _run(
        "split", "--manifest", root / "corpus" / "manifest.jsonl",
        "--out", root / "splits", "--fraction", 0.8, "--seed", 1,
    )
    _run(
        "train", "--manifest", root / "splits" / "train.jsonl",
        "--classes", 2, "--epochs", 2, "--batch", 8,
        "--out", root / "run", "--seed", 0,
    )
    return root


def test_generate_writes_corpus_and_manifest(pipeline):
    corpus = pipeline / "corpus"
    pngs = list((corpus / "images").glob("*.png"))
    assert len(pngs) == 20
    lines = (corpus / "manifest.jsonl").read_text().splitlines()
    assert len(lines) == 20
    run_manifest = json.loads((corpus / "run_manifest.json").read_text())
    assert run_manifest["command"] == "generate"
    assert run_manifest["seed"] == 5
    assert "vdpkit" in run_manifest["versions"]


def test_generate_rejects_bad_rules():
    runner = CliRunner()
    result = runner.invoke(
        main, ["generate", "--rules", "40", "--count", "1", "--out", "x"]
    )
    assert result.exit_code == 2


def test_generate_deterministic_across_workers(tmp_path):
    for name, workers in (("a", 1), ("b", 2)):
        _run(
            "generate", "--rules", "1-2", "--count", 6, "--size", 48,
            "--out", tmp_path / name, "--seed", 9, "--workers", workers,
        )
    assert _tree_digest(tmp_path / "a") == _tree_digest(tmp_path / "b")


def test_split_fraction_outputs(pipeline):
    splits = pipeline / "splits"
    train_lines = (splits / "train.jsonl").read_text().splitlines()
    val_lines = (splits / "val.jsonl").read_text().splitlines()
    assert len(train_lines) == 16
    assert len(val_lines) == 4
    # paths resolve from the split manifest's directory
    entry = json.loads(train_lines[0])
    assert (splits / entry["path"]).resolve().exists()
    summary = json.loads((splits / "split_summary.json").read_text())
    assert summary == {"train": 16, "val": 4}


def test_split_requires_exactly_one_mode(pipeline):
    runner = CliRunner()
    result = runner.invoke(
        main,
        [
            "split", "--manifest",
            str(pipeline / "corpus" / "manifest.jsonl"),
            "--out", "unused",
        ],
    )
    assert result.exit_code == 2


def test_train_artifacts(pipeline):
    run = pipeline / "run"
    for name in ("checkpoint.npz", "history.csv", "curves.png", "report.json",
                 "run_manifest.json"):
        assert (run / name).exists()
    report = json.loads((run / "report.json").read_text())
    assert len(report["epochs"]) == 2
    assert report["label_order"] == ["color", "progressive"]


def test_train_tail_average_flag(pipeline, tmp_path):
    _run(
        "train", "--manifest", pipeline / "splits" / "train.jsonl",
        "--classes", 2, "--epochs", 2, "--batch", 8, "--tail-average", 2,
        "--out", tmp_path / "tail", "--seed", 0,
    )
    report = json.loads((tmp_path / "tail" / "report.json").read_text())
    assert report["retained"] == "tail-2"


def test_train_class_count_mismatch_exits_one(pipeline, tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main,
        [
            "train", "--manifest", str(pipeline / "splits" / "train.jsonl"),
            "--classes", "9", "--epochs", "1",
            "--out", str(tmp_path / "no"),
        ],
    )
    assert result.exit_code == 1
    err = json.loads(result.output.strip().splitlines()[-1])
    assert err["error"] == "error" or "classes" in err["message"]


def test_evaluate_reports(pipeline, tmp_path):
    out = tmp_path / "eval"
    _run(
        "evaluate", "--manifest", pipeline / "splits" / "val.jsonl",
        "--checkpoint", pipeline / "run" / "checkpoint.npz",
        "--out", out, "--seed", 0,
    )
    summary = json.loads((out / "summary.json").read_text())
    assert summary["items"] == 4
    assert 0.0 <= summary["top1"] <= summary["top2"] <= 1.0
    assert (out / "confusion.png").exists()
    rows = (out / "predictions.csv").read_text().splitlines()
    assert len(rows) == 5
    assert rows[0].startswith("path,actual,pred1,prob1")
    conf = (out / "confusion.csv").read_text().splitlines()
    assert conf[0] == "predicted\\actual,color,progressive"


def test_gradcam_outputs(pipeline, tmp_path):
    image = next((pipeline / "corpus" / "images").glob("*.png"))
    out = tmp_path / "cam"
    _run(
        "gradcam", "--checkpoint", pipeline / "run" / "checkpoint.npz",
        "--out", out, "--alpha", 0.5, image,
    )
    assert (out / f"{image.stem}_overlay.png").exists()
    heat = np.load(out / f"{image.stem}_heatmap.npy")
    assert heat.shape == (64, 64)
    assert heat.min() >= 0.0
    rows = (out / "targets.csv").read_text().splitlines()
    assert len(rows) == 2


def test_gradcam_rejects_unknown_target(pipeline, tmp_path):
    image = next((pipeline / "corpus" / "images").glob("*.png"))
    runner = CliRunner()
    result = runner.invoke(
        main,
        [
            "gradcam", "--checkpoint",
            str(pipeline / "run" / "checkpoint.npz"),
            "--out", str(tmp_path / "cam2"), "--target", "flowing",
            str(image),
        ],
    )
    assert result.exit_code == 1


def test_augment_preview(pipeline, tmp_path):
    image = next((pipeline / "corpus" / "images").glob("*.png"))
    out = tmp_path / "aug"
    _run("augment-preview", "--image", image, "--count", 3, "--out", out,
         "--seed", 4)
    assert len(list(out.glob("variant_*.png"))) == 3
    assert (out / "preview.png").exists()
    plans = (out / "plans.csv").read_text().splitlines()
    assert len(plans) == 4


def test_agreement_matches_metrics(tmp_path):
    table = RatingTable()
    rng = np.random.default_rng(17)
    labels = ("color", "shape", "regular")
    for i in range(12):
        for rater in ("h1", "h2", "h3"):
            depth = int(rng.integers(0, 4))
            table.add(
                f"i{i:02d}", rater,
                tuple(rng.permutation(labels)[:depth].tolist()),
            )
    path = tmp_path / "ratings.jsonl"
    table.to_jsonl(path)
    result = _run("agreement", "--ratings", path)
    payload = json.loads(result.output)
    direct = fleiss_kappa(table)
    assert payload["kappa"] == pytest.approx(direct)
    a, b = table.column("h1"), table.column("h2")
    expected = match_rates(a, b).as_dict()
    got = payload["pairwise"]["h1|h2"]
    for key, value in expected.items():
        assert got[key] == pytest.approx(value)
    out = tmp_path / "report"
    _run("agreement", "--ratings", path, "--out", out)
    assert (out / "agreement.json").exists()
    assert (out / "distribution.png").exists()
    saved = json.loads((out / "agreement.json").read_text())
    assert saved["kappa"] == payload["kappa"]


def test_missing_manifest_is_usage_error(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["train", "--manifest", str(tmp_path / "nope.jsonl"), "--out", "x"],
    )
    assert result.exit_code == 2
