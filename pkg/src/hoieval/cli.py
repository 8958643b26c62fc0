"""Command-line entry points for the staged evaluation pipeline."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .config import PipelineConfig, RunManifest
from .datamodel import Protocol, RaritySplit, load_annotations
from .errors import HoiEvalError
from .extraction import MockT2GProvider, HttpT2GProvider, RefinementConfig
from .generation import ChatCompletionsProvider, MockProvider, PromptKind
from .metrics import report_to_dict
from .pairing import VisualPromptMode
from .pipeline import (
    extract_transcript_text,
    read_jsonl,
    run_evaluate,
    run_generate,
    run_pairs,
    write_jsonl,
    write_report,
)
from .vocabulary import (
    FileVectorProvider,
    HttpEmbeddingProvider,
    VerbVocabulary,
    filter_wordnet_verbs,
)


def _load_config(config_path: str | None, **overrides) -> PipelineConfig:
    base = PipelineConfig.load(config_path) if config_path else PipelineConfig()
    effective = {k: v for k, v in overrides.items() if v is not None}
    if not effective:
        return base
    data = base.to_dict()
    data.update(effective)
    return PipelineConfig.from_dict(data)


def _similarity_provider(embeddings: str | None, embeddings_url: str | None):
    if embeddings:
        return FileVectorProvider(embeddings)
    if embeddings_url:
        return HttpEmbeddingProvider(embeddings_url)
    raise click.UsageError("provide --embeddings (TSV) or --embeddings-url")


def _finish(errors: list[str]):
    for message in errors:
        click.echo(f"error: {message}", err=True)
    if errors:
        click.echo(f"{len(errors)} per-sample error(s)", err=True)
        sys.exit(1)


@click.group()
def main():
    """Open-ended human-object interaction evaluation pipeline."""


@main.command("pairs")
@click.option("--annotations", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--protocol", type=click.Choice([p.value for p in Protocol]))
@click.option("--images", type=click.Path(exists=True), help="JSON map image_id -> file path")
@click.option("--prompt-dir", type=click.Path(), help="Persist rendered visual prompts here")
@click.option("--visual-mode", type=click.Choice([m.value for m in VisualPromptMode]))
@click.option("--out", required=True, type=click.Path())
def cmd_pairs(annotations, config_path, protocol, images, prompt_dir, visual_mode, out):
    """Build human-object candidate pairs (stage 1)."""
    config = _load_config(config_path, protocol=protocol, visual_mode=visual_mode)
    samples = load_annotations(annotations, config.protocol)
    image_paths = None
    if images:
        image_paths = json.loads(Path(images).read_text(encoding="utf-8"))
    if prompt_dir:
        Path(prompt_dir).mkdir(parents=True, exist_ok=True)
    result = run_pairs(samples, config, image_paths, prompt_dir)
    write_jsonl(result.records, out)
    manifest = RunManifest(config=config)
    manifest.mark("pairs", out)
    manifest.save(Path(out).with_suffix(".manifest.json"))
    click.echo(f"wrote {len(result.records)} pair records to {out}")
    _finish(result.errors)


@main.command("generate")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--mock-pool", type=click.Path(exists=True), help="Mock provider pool JSON")
@click.option("--endpoint", help="Chat-completions endpoint URL")
@click.option("--model", help="Model id for the endpoint")
@click.option("--num-generations", type=int)
@click.option("--prompt-kind", type=click.Choice([k.value for k in PromptKind]))
@click.option("--seed", type=int)
@click.option("--out", required=True, type=click.Path())
def cmd_generate(pairs_path, config_path, mock_pool, endpoint, model,
                 num_generations, prompt_kind, seed, out):
    """Generate N free-form answers per pair (resumable)."""
    config = _load_config(
        config_path, num_generations=num_generations, prompt_kind=prompt_kind, seed=seed
    )
    if mock_pool:
        provider = MockProvider.load(mock_pool, default_seed=config.seed)
    elif endpoint and model:
        provider = ChatCompletionsProvider(
            endpoint, model, api_key=os.environ.get("HOIEVAL_API_KEY")
        )
    else:
        raise click.UsageError("provide --mock-pool or both --endpoint and --model")
    pair_records = read_jsonl(pairs_path)
    existing = read_jsonl(out) if Path(out).exists() else None
    try:
        result = run_generate(pair_records, provider, config, existing)
    except HoiEvalError as exc:
        click.echo(f"generation aborted: {exc}", err=True)
        click.echo(f"partial transcript kept at {out}; rerun to resume", err=True)
        sys.exit(1)
    write_jsonl(result.records, out)
    click.echo(f"wrote {len(result.records)} transcript records to {out}")
    _finish(result.errors)


@main.command("extract")
@click.option("--transcripts", required=True, type=click.Path(exists=True))
@click.option("--t2g-pool", type=click.Path(exists=True), help="Mock T2G mapping JSON")
@click.option("--t2g-url", help="T2G endpoint URL")
@click.option("--out", required=True, type=click.Path())
def cmd_extract(transcripts, t2g_pool, t2g_url, out):
    """Standalone extraction of raw triplets from a transcript."""
    t2g = None
    if t2g_pool:
        t2g = MockT2GProvider.load(t2g_pool)
    elif t2g_url:
        t2g = HttpT2GProvider(t2g_url)
    records = []
    for record in read_jsonl(transcripts):
        triplets = extract_transcript_text(
            record["text"],
            PromptKind(record.get("prompt_kind", "direct")),
            record["sample_index"],
            t2g,
        )
        for t in triplets:
            records.append(
                {
                    "pair_id": record["pair_id"],
                    "sample_index": t.sample_index,
                    "subject": t.subject,
                    "verb": t.verb,
                    "object": t.object,
                    "source": t.source,
                }
            )
    write_jsonl(records, out)
    click.echo(f"wrote {len(records)} raw triplets to {out}")


@main.command("evaluate")
@click.option("--annotations", required=True, type=click.Path(exists=True))
@click.option("--transcripts", type=click.Path(exists=True))
@click.option("--predictions", type=click.Path(exists=True),
              help="Precomputed predictions JSON (skips generation stages)")
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", type=click.Path(exists=True), help="Phrase vector TSV")
@click.option("--embeddings-url")
@click.option("--rarity-split", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--protocol", type=click.Choice([p.value for p in Protocol]))
@click.option("--thresholds", help="Comma-separated similarity thresholds override")
@click.option("--class-mode", type=click.Choice(["verb", "hoi"]))
@click.option("--selection", type=click.Choice(["topk", "sampling"]))
@click.option("--top-k", type=int)
@click.option("--t2g-pool", type=click.Path(exists=True))
@click.option("--t2g-url")
@click.option("--out", required=True, type=click.Path())
@click.option("--csv-out", type=click.Path())
def cmd_evaluate(annotations, transcripts, predictions, vocab_path, embeddings,
                 embeddings_url, rarity_split, config_path, protocol, thresholds,
                 class_mode, selection, top_k, t2g_pool, t2g_url, out, csv_out):
    """Extraction, refinement, aggregation, and metrics in one pass."""
    overrides = {
        "protocol": protocol,
        "class_mode": class_mode,
        "selection": selection,
        "top_k": top_k,
    }
    if thresholds:
        overrides["similarity_thresholds"] = [float(t) for t in thresholds.split(",")]
    config = _load_config(config_path, **overrides)
    vocab = VerbVocabulary.load(vocab_path)
    sim = _similarity_provider(embeddings, embeddings_url)
    split = RaritySplit.load(rarity_split) if rarity_split else None
    t2g = None
    if t2g_pool:
        t2g = MockT2GProvider.load(t2g_pool)
    elif t2g_url:
        t2g = HttpT2GProvider(t2g_url)
    try:
        report = run_evaluate(
            annotations,
            vocab,
            sim,
            config,
            transcripts_path=transcripts,
            predictions_path=predictions,
            rarity_split=split,
            t2g=t2g,
        )
    except HoiEvalError as exc:
        click.echo(f"evaluation failed: {exc}", err=True)
        sys.exit(1)
    write_report(report, out, csv_out)
    click.echo(f"map_avg={report.map_avg:.6f} sr={report.sr:.6f}")
    click.echo(f"wrote report to {out}")


@main.command("report")
@click.argument("reports", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--csv-out", type=click.Path())
@click.option("--plot-out", type=click.Path(), help="Static PNG of mAP vs generations")
def cmd_report(reports, csv_out, plot_out):
    """Render a comparison table from one or more report files."""
    loaded = []
    for path in reports:
        with open(path, encoding="utf-8") as fh:
            loaded.append((path, json.load(fh)))
    threshold_sets = {tuple(sorted(data["map_per_threshold"])) for _, data in loaded}
    if len(threshold_sets) > 1:
        click.echo(f"cannot merge reports with different threshold sets: {threshold_sets}",
                   err=True)
        sys.exit(1)
    taus = sorted(loaded[0][1]["map_per_threshold"], key=float)
    header = ["report"] + [f"map@{t}" for t in taus] + ["map_avg", "sr_x100"]
    rows = [header]
    for path, data in loaded:
        row = [Path(path).stem]
        row += [format(data["map_per_threshold"][t] * 100, ".2f") for t in taus]
        row.append(format(data["map_avg"] * 100, ".2f"))
        row.append(format(data["sr"] * 100, ".2f"))
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    for row in rows:
        click.echo("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    if csv_out:
        Path(csv_out).write_text(
            "\n".join(",".join(row) for row in rows) + "\n", encoding="utf-8"
        )
    if plot_out:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        xs, ys, labels = [], [], []
        for path, data in loaded:
            xs.append(data.get("config", {}).get("num_generations", 1))
            ys.append(data["map_avg"] * 100)
            labels.append(Path(path).stem)
        fig, ax = plt.subplots()
        ax.plot(xs, ys, marker="o")
        for x, y, label in zip(xs, ys, labels):
            ax.annotate(label, (x, y))
        ax.set_xlabel("generations per pair")
        ax.set_ylabel("mAP avg (%)")
        fig.savefig(plot_out)
        click.echo(f"wrote plot to {plot_out}")


@main.command("filter-verbs")
@click.option("--candidates", required=True, type=click.Path(exists=True),
              help="Newline-delimited candidate verbs")
@click.option("--answers", type=click.Path(exists=True),
              help="JSON map verb -> yes/no (offline provider)")
@click.option("--endpoint", help="Chat-completions endpoint URL")
@click.option("--model")
@click.option("--out", required=True, type=click.Path())
def cmd_filter_verbs(candidates, answers, endpoint, model, out):
    """Keep only verbs a person can apply to an object."""
    verbs = [v.strip() for v in Path(candidates).read_text(encoding="utf-8").splitlines()
             if v.strip()]
    if answers:
        mapping = json.loads(Path(answers).read_text(encoding="utf-8"))

        def provider(question: str) -> str:
            # Question embeds the verb between fixed template halves.
            verb = question.removeprefix("Can a person ").split(" an object?")[0]
            return mapping.get(verb, "")
    elif endpoint and model:
        client = ChatCompletionsProvider(
            endpoint, model, api_key=os.environ.get("HOIEVAL_API_KEY")
        )

        def provider(question: str) -> str:
            from .generation import GenerationRequest

            request = GenerationRequest(pair_id="verb-filter", image=None, prompt=question,
                                        temperature=0.0, max_tokens=8)
            return client.generate(request).texts[0]
    else:
        raise click.UsageError("provide --answers or both --endpoint and --model")
    vocab = filter_wordnet_verbs(verbs, provider)
    kept = list(vocab.verbs) if vocab else []
    Path(out).write_text("\n".join(kept) + ("\n" if kept else ""), encoding="utf-8")
    click.echo(f"kept {len(kept)} of {len(verbs)} candidate verbs")


if __name__ == "__main__":
    main()
