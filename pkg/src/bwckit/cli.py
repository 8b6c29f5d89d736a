"""Operator command line: ingest, run, stats, quality, calibrate, serve, export.

Exit codes: 0 success, 1 internal error, 2 usage/validation problems
(including corpus pairing failures in ``quality compare``).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import corpus, ensemble, quality
from .config import ConfigError, load_config
from .pipeline import run_pipeline
from .store import IncidentStore


@click.group()
def main():
    """Body-worn-camera footage analysis toolkit."""


@main.command()
@click.option("--root", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--store", "store_path", required=True, type=click.Path())
@click.option("--manifest-out", type=click.Path(), default=None,
              help="Also write the manifest to this path.")
def ingest(root, store_path, manifest_out):
    """Scan a dataset directory and register its assets."""
    manifest = corpus.scan_dataset(root)
    store = IncidentStore(store_path)
    try:
        for asset in manifest:
            store.put_asset(asset.to_record())
        corpus.save_manifest(manifest, store.root / "manifest.jsonl")
        if manifest_out:
            corpus.save_manifest(manifest, manifest_out)
    finally:
        store.close()
    flagged = sum(1 for a in manifest if a.flags)
    click.echo(f"ingested {len(manifest)} assets ({flagged} flagged)")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--store", "store_path", default=None, type=click.Path(),
              help="Override the configured store path.")
@click.option("--report-out", type=click.Path(), default=None)
def run(config_path, store_path, report_out):
    """Run the full analysis pipeline over the configured dataset."""
    try:
        cfg = load_config(config_path, overrides={"store_path": store_path})
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    report = run_pipeline(cfg)
    payload = report.to_dict()
    if report_out:
        Path(report_out).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    click.echo(json.dumps(payload, indent=2))
    if report.failed_assets:
        click.echo(f"completed with {len(report.failed_assets)} failed assets", err=True)


@main.command()
@click.option("--root", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), default=None)
def stats(root, manifest_path):
    """Dataset summary (count, shortest/longest/mean/total duration)."""
    if (root is None) == (manifest_path is None):
        raise click.UsageError("provide exactly one of --root or --manifest")
    manifest = corpus.scan_dataset(root) if root else corpus.load_manifest(manifest_path)
    try:
        summary = corpus.dataset_stats(manifest)
    except corpus.EmptyDatasetError as exc:
        raise click.UsageError(str(exc))
    click.echo(corpus.format_summary(summary))


@main.group(name="quality")
def quality_group():
    """Transcript quality metrics."""


def _load_corpus_dir(path: Path) -> list[quality.TokenizedTranscript]:
    texts = sorted(path.glob("*.txt"))
    return [
        quality.tokenize(p.read_text(encoding="utf-8"), source_id=p.stem) for p in texts
    ]


@quality_group.command(name="compare")
@click.option("--corpus-a", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--corpus-b", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--model-a", default="model-a")
@click.option("--model-b", default="model-b")
@click.option("--threshold", default=quality.DEFAULT_REPEAT_THRESHOLD, show_default=True)
@click.option("--gap-mode", type=click.Choice(["types", "tokens"]), default="types")
def quality_compare(corpus_a, corpus_b, dict_path, out_path, model_a, model_b, threshold, gap_mode):
    """Compare two transcript corpora pairwise by file name."""
    dictionary = quality.load_wordlist(dict_path)
    transcripts_a = _load_corpus_dir(Path(corpus_a))
    transcripts_b = _load_corpus_dir(Path(corpus_b))
    try:
        report = quality.compare_models(
            transcripts_a, transcripts_b, dictionary,
            model_a_name=model_a, model_b_name=model_b,
            threshold=threshold, gap_mode=gap_mode,
        )
    except quality.PairingError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    quality.write_report(report, out_path)
    for panel, model, value in report.panel_table():
        click.echo(f"{panel:<18} {model:<12} {value:10.3f}")
    click.echo(
        f"coverage gap {model_a}->{model_b}: {report.mean_coverage_gap_a_vs_b:.1%}   "
        f"{model_b}->{model_a}: {report.mean_coverage_gap_b_vs_a:.1%}   "
        f"(n={report.sample_size})"
    )


@main.command()
@click.option("--examples", "examples_path", required=True, type=click.Path(exists=True),
              help="JSON list of {label, audio, text, image} feature examples.")
@click.option("--grid-step", default=0.1, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def calibrate(examples_path, grid_step, out_path):
    """Grid-search ensemble weights over labeled feature examples."""
    raw = json.loads(Path(examples_path).read_text(encoding="utf-8"))
    examples = [
        ensemble.LabeledExample(
            audio=ensemble.FeatureVector("audio", tuple(ex["audio"]), ("file",)),
            text=ensemble.FeatureVector("text", tuple(ex["text"]), ("file",)),
            image=ensemble.FeatureVector("image", tuple(ex["image"]), ("file",)),
            label=str(ex["label"]),
        )
        for ex in raw
    ]
    try:
        weights = ensemble.calibrate_weights(examples, grid_step=grid_step)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    payload = {"alpha": weights.alpha, "beta": weights.beta, "gamma": weights.gamma}
    if out_path:
        Path(out_path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    click.echo(json.dumps(payload))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8701, show_default=True)
def serve(config_path, host, port):
    """Serve the review API for the configured store."""
    from .service import serve_review

    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    serve_review(cfg, host=host, port=port)


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write to a file instead of stdout.")
def export(store_path, out_path):
    """Dump every stored record as line-delimited JSON."""
    store = IncidentStore(store_path)
    try:
        lines = store.export()
        if out_path:
            with open(out_path, "w", encoding="utf-8") as fh:
                for line in lines:
                    fh.write(line + "\n")
        else:
            for line in lines:
                click.echo(line)
    finally:
        store.close()


if __name__ == "__main__":
    main()
