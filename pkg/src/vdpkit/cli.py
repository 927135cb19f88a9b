"""Command line entry point wiring the whole pipeline together.

Subcommands follow the experiment order: generate a corpus, preview
augmentations, split it, train, evaluate, compute rater agreement, draw
class-activation overlays, and serve the annotation app.  Every command
takes --seed, writes data only under its --out location, logs to stderr,
and drops a run_manifest.json describing inputs, seeds, and versions.
Usage mistakes exit 2; runtime failures exit 1 with a JSON error line on
stderr.
"""

from __future__ import annotations

import functools
import json
import math
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .augment import apply_plan, sample_plan
from .composition import (
    CLASS_LABELS,
    GenerationConfig,
    generate_dataset,
    rule_ids,
)
from .dataset import (
    SCHEMES,
    SplitScheme,
    apply_scheme,
    read_manifest,
    resolve_path,
    scheme_summary,
    split as split_entries,
    write_manifest,
)
from .errors import VdpError
from .gradcam import gradcam as compute_gradcam, overlay, save_heatmap
from .metrics import (
    RatingTable,
    confusion,
    class_report,
    fleiss_details,
    match_rates,
    topk_accuracy,
)
from .nn import (
    CnnModel,
    TrainConfig,
    label_order_for,
    load_checkpoint,
    predict_topk,
    save_checkpoint,
    train as train_model,
)
from .raster import load_png, save_png
from . import reports


def _fail(exc: Exception) -> None:
    payload = exc.to_json() if isinstance(exc, VdpError) else {
        "error": "error",
        "message": str(exc),
    }
    click.echo(json.dumps(payload), err=True)
    sys.exit(1)


def _runtime_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (VdpError, OSError, ValueError) as exc:
            _fail(exc)

    return wrapper


def _write_run_manifest(out_dir: Path, command: str, seed: int, **inputs):
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "seed": seed,
        "inputs": inputs,
        "versions": {
            "vdpkit": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    path = out_dir / "run_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _parse_rules(text: str) -> tuple[int, ...]:
    """Comma list with ranges: "1-2,11,27-30"."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    known = set(rule_ids())
    bad = [r for r in out if r not in known]
    if bad:
        raise click.BadParameter(f"unknown rule ids {bad}")
    return tuple(dict.fromkeys(out))


@click.group()
@click.version_option(version=__version__)
def main():
    """Synthetic design-principle corpora: generate, train, evaluate."""


@main.command()
@click.option("--style", type=click.Choice(["sdv1", "sdv2"]), default="sdv1")
@click.option("--rules", default="1-32", help="rule ids, e.g. 1-2,11,27-30")
@click.option("--count", type=int, required=True)
@click.option("--size", type=int, default=300)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--seed", type=int, default=0)
@click.option("--workers", type=int, default=1)
@click.option("--texture-dir", type=click.Path(exists=True), default=None)
@_runtime_errors
def generate(style, rules, count, size, out_dir, seed, workers, texture_dir):
    """Render a labeled corpus of PNGs plus its manifest."""
    config = GenerationConfig(
        count=count,
        style=style,
        rules=_parse_rules(rules),
        base_seed=seed,
        size=size,
        workers=workers,
        texture_dir=texture_dir,
    )
    entries = generate_dataset(config, out_dir)
    _write_run_manifest(
        out_dir,
        "generate",
        seed,
        style=style,
        rules=list(config.rules),
        count=count,
        size=size,
        workers=workers,
    )
    click.echo(f"wrote {len(entries)} images under {out_dir}", err=True)


@main.command("augment-preview")
@click.option("--image", "image_path", type=click.Path(exists=True), required=True)
@click.option("--count", type=int, default=8)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--seed", type=int, default=0)
@_runtime_errors
def augment_preview(image_path, count, out_dir, seed):
    """Sample augmentation plans for one image and render the variants."""
    out_dir.mkdir(parents=True, exist_ok=True)
    base = load_png(image_path)
    images = [base]
    titles = ["original"]
    rows = []
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        plan = sample_plan(rng)
        variant = apply_plan(base, plan)
        name = f"variant_{i:02d}.png"
        save_png(variant, out_dir / name)
        images.append(variant)
        titles.append(name.removesuffix(".png"))
        bg = plan.bg
        rows.append(
            [
                i,
                plan.flip_x,
                plan.flip_y,
                plan.rotate,
                plan.gbt_delta,
                "" if bg is None else bg.axis_angle,
                "" if bg is None else bg.strength,
            ]
        )
    reports.write_delimited(
        out_dir / "plans.csv",
        ["index", "flip_x", "flip_y", "rotate", "gbt_delta", "bg_angle", "bg_strength"],
        rows,
    )
    reports.save_image_grid(images, out_dir / "preview.png", titles=titles)
    _write_run_manifest(
        out_dir, "augment-preview", seed, image=str(image_path), count=count
    )
    click.echo(f"wrote {count} variants under {out_dir}", err=True)


@main.command("split")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--fraction", type=float, default=None, help="train fraction")
@click.option("--scheme", type=click.Choice(SCHEMES), default=None)
@click.option("--test-per-cell", type=int, default=50)
@click.option("--seed", type=int, default=0)
@_runtime_errors
def split_cmd(manifest_path, out_dir, fraction, scheme, test_per_cell, seed):
    """Split a manifest by fraction, or materialize a balancing scheme."""
    if (fraction is None) == (scheme is None):
        raise click.UsageError("pass exactly one of --fraction or --scheme")
    entries = read_manifest(manifest_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    # rewrite image paths relative to the output manifests' directory
    entries = [
        type(e)(
            os.path.relpath(resolve_path(manifest_path, e), start=out_dir),
            e.label, e.rule_id, e.domain, e.split, e.seed,
        )
        for e in entries
    ]
    if fraction is not None:
        train_part, val_part = split_entries(entries, fraction, seed=seed)
        write_manifest(train_part, out_dir / "train.jsonl")
        write_manifest(val_part, out_dir / "val.jsonl")
        summary = {"train": len(train_part), "val": len(val_part)}
    else:
        train_part, test_part = apply_scheme(
            entries, SplitScheme(scheme, test_per_cell), seed=seed
        )
        write_manifest(train_part, out_dir / "train.jsonl")
        write_manifest(test_part, out_dir / "test.jsonl")
        summary = scheme_summary(train_part, test_part)
    (out_dir / "split_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    _write_run_manifest(
        out_dir,
        "split",
        seed,
        manifest=str(manifest_path),
        fraction=fraction,
        scheme=scheme,
        test_per_cell=test_per_cell,
    )
    click.echo(json.dumps(summary), err=True)


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True)
@click.option("--classes", type=int, default=None, help="expected class count")
@click.option("--epochs", type=int, default=15)
@click.option("--batch", type=int, default=16)
@click.option("--lr0", type=float, default=0.0256)
@click.option("--val-fraction", type=float, default=0.1)
@click.option("--augment/--no-augment", default=True)
@click.option("--tail-average", type=int, default=0,
              help="keep the mean of the last N epochs instead of best-val")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--seed", type=int, default=0)
@_runtime_errors
def train(manifest_path, classes, epochs, batch, lr0, val_fraction, augment,
          tail_average, out_dir, seed):
    """Train the classifier and write checkpoint, history, and curves."""
    entries = read_manifest(manifest_path)
    order = label_order_for(entries, CLASS_LABELS)
    if classes is not None and len(order) != classes:
        raise VdpError(
            f"manifest has {len(order)} classes, expected {classes}",
            labels=list(order),
        )
    model = CnnModel(num_classes=len(order), seed=seed)
    config = TrainConfig(
        epochs=epochs,
        batch=batch,
        lr0=lr0,
        seed=seed,
        val_fraction=val_fraction,
        augment=augment,
        tail_average=tail_average,
    )
    report = train_model(model, entries, Path(manifest_path).parent, config,
                         taxonomy=CLASS_LABELS)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(
        model,
        out_dir / "checkpoint.npz",
        meta={"labels": list(report.label_order), "train_manifest": str(manifest_path)},
    )
    (out_dir / "report.json").write_text(
        json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    )
    reports.write_training_curves_delimited(report.epochs, out_dir / "history.csv")
    reports.save_training_curves(report.epochs, out_dir / "curves.png")
    _write_run_manifest(
        out_dir,
        "train",
        seed,
        manifest=str(manifest_path),
        epochs=epochs,
        batch=batch,
        lr0=lr0,
        val_fraction=val_fraction,
        augment=augment,
        tail_average=tail_average,
    )
    click.echo(
        f"best val top-1 {report.best_val_top1:.3f} at epoch {report.best_epoch}"
        f" (retained {report.retained})",
        err=True,
    )


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True)
@click.option("--checkpoint", "ckpt_path", type=click.Path(exists=True), required=True)
@click.option("--split", "which_split", default="all",
              type=click.Choice(["all", "train", "val", "test"]))
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--seed", type=int, default=0)
@_runtime_errors
def evaluate(manifest_path, ckpt_path, which_split, out_dir, seed):
    """Score a manifest: top-k accuracy, confusion matrix, class report."""
    model, meta = load_checkpoint(ckpt_path)
    order = tuple(meta["labels"])
    entries = read_manifest(manifest_path)
    if which_split != "all":
        entries = [e for e in entries if e.split == which_split]
    if not entries:
        raise VdpError(f"no entries for split {which_split!r}")
    k = min(3, model.num_classes)
    ranked: list[list[str]] = []
    pred_rows = []
    for e in entries:
        image = load_png(resolve_path(manifest_path, e))
        top = predict_topk(model, image, k)
        names = [order[i] for i, _ in top]
        ranked.append(names)
        pred_rows.append(
            [e.path, e.label]
            + [x for i, p in top for x in (order[i], round(p, 6))]
        )
    actuals = [e.label for e in entries]
    cm = confusion([r[0] for r in ranked], actuals, labels=order)
    rep = class_report(cm)
    summary = {
        "items": len(entries),
        "split": which_split,
        "macro_f1": rep.macro_f1,
        "labels": list(order),
    }
    for i in range(1, k + 1):
        summary[f"top{i}"] = topk_accuracy(ranked, actuals, i)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    header = ["path", "actual"]
    for i in range(1, k + 1):
        header += [f"pred{i}", f"prob{i}"]
    reports.write_delimited(out_dir / "predictions.csv", header, pred_rows)
    reports.write_confusion_delimited(cm, out_dir / "confusion.csv")
    reports.save_confusion_figure(cm, out_dir / "confusion.png")
    reports.write_class_report_delimited(rep, out_dir / "class_report.csv")
    _write_run_manifest(
        out_dir,
        "evaluate",
        seed,
        manifest=str(manifest_path),
        checkpoint=str(ckpt_path),
        split=which_split,
    )
    click.echo(json.dumps(summary), err=True)


@main.command()
@click.option("--ratings", "ratings_path", type=click.Path(exists=True), required=True)
@click.option("--rank", type=int, default=1)
@click.option("--include-none/--exclude-none", default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None)
@click.option("--seed", type=int, default=0)
@_runtime_errors
def agreement(ratings_path, rank, include_none, out_dir, seed):
    """Fleiss' kappa and pairwise match rates for a ratings table."""
    table = RatingTable.from_jsonl(ratings_path)
    res = fleiss_details(table, rank=rank, include_none=include_none)
    raters = table.raters
    pairwise = {}
    for i, a in enumerate(raters):
        col_a = table.column(a)
        for b in raters[i + 1:]:
            col_b = table.column(b)
            common = sorted(set(col_a) & set(col_b))
            rates = match_rates(
                {x: col_a[x] for x in common}, {x: col_b[x] for x in common}
            )
            pairwise[f"{a}|{b}"] = dict(rates.as_dict(), items=len(common))
    result = {
        "kappa": None if math.isnan(res.kappa) else res.kappa,
        "rank": rank,
        "include_none": include_none,
        "items_used": res.items_used,
        "items_dropped": res.items_dropped,
        "categories": list(res.categories),
        "raters": list(raters),
        "pairwise": pairwise,
    }
    if out_dir is None:
        click.echo(json.dumps(result, indent=2, sort_keys=True))
        return
    reports.write_stats_json(result, out_dir / "agreement.json")
    distribution = {
        "annotators": {
            rater: {
                "label_fractions": {
                    str(d): (
                        sum(1 for r in table.column(rater).values() if len(r) == d)
                        / max(len(table.column(rater)), 1)
                    )
                    for d in (1, 2, 3)
                }
            }
            for rater in raters
        },
        "kappa": result["kappa"],
    }
    reports.save_label_distribution_figure(
        distribution, out_dir / "distribution.png"
    )
    _write_run_manifest(
        out_dir, "agreement", seed, ratings=str(ratings_path), rank=rank
    )
    click.echo(json.dumps({"kappa": result["kappa"]}), err=True)


@main.command("gradcam")
@click.option("--checkpoint", "ckpt_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--target", type=str, default=None,
              help="class label to explain; default: the predicted class")
@click.option("--alpha", type=float, default=0.45)
@click.option("--seed", type=int, default=0)
@click.argument("images", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
@_runtime_errors
def gradcam_cmd(ckpt_path, out_dir, target, alpha, seed, images):
    """Write class-activation overlays and raw heatmaps for images."""
    model, meta = load_checkpoint(ckpt_path)
    order = tuple(meta["labels"])
    if target is not None and target not in order:
        raise VdpError(f"label {target!r} not in checkpoint labels {order}")
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for path in images:
        image = load_png(path)
        top = predict_topk(model, image, 1)[0]
        cls = order.index(target) if target is not None else top[0]
        heat = compute_gradcam(model, image, cls)
        stem = path.stem
        save_png(overlay(image, heat, alpha), out_dir / f"{stem}_overlay.png")
        save_heatmap(heat, out_dir / f"{stem}_heatmap.npy")
        rows.append(
            [path.name, order[cls], order[top[0]], round(top[1], 6), heat.flat]
        )
    reports.write_delimited(
        out_dir / "targets.csv",
        ["image", "explained", "predicted", "prob", "flat"],
        rows,
    )
    _write_run_manifest(
        out_dir,
        "gradcam",
        seed,
        checkpoint=str(ckpt_path),
        images=[str(p) for p in images],
        target=target,
        alpha=alpha,
    )
    click.echo(f"wrote {len(images)} overlays under {out_dir}", err=True)


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(exists=True),
              required=True, envvar="VDPKIT_MANIFEST")
@click.option("--journal", "journal_path", type=click.Path(path_type=Path),
              required=True, envvar="VDPKIT_JOURNAL")
@click.option("--mode", type=click.Choice(["single", "ranked"]),
              default="ranked", envvar="VDPKIT_MODE")
@click.option("--host", default="127.0.0.1", envvar="VDPKIT_HOST")
@click.option("--port", type=int, default=8000, envvar="VDPKIT_PORT")
@click.option("--static-dir", type=click.Path(exists=True), default=None,
              envvar="VDPKIT_STATIC", help="built annotation UI to serve at /")
@click.option("--seed", type=int, default=0, help="per-annotator order seed")
@_runtime_errors
def serve(manifest_path, journal_path, mode, host, port, static_dir, seed):
    """Run the annotation service over a corpus manifest."""
    import uvicorn

    from .service import create_app

    app = create_app(
        manifest_path, journal_path, mode=mode, order_seed=seed,
        static_dir=static_dir,
    )
    _write_run_manifest(
        Path(journal_path).parent,
        "serve",
        seed,
        manifest=str(manifest_path),
        mode=mode,
        host=host,
        port=port,
    )
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
