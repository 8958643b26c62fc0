"""File-based pipeline stages shared by the CLI subcommands."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .aggregation import pool, select_sampling, select_topk
from .config import PipelineConfig
from .datamodel import (
    Detection,
    EvalSample,
    PredictedInteraction,
    Protocol,
    RaritySplit,
    filter_detections,
    load_annotations,
    normalize_label,
)
from .errors import HoiEvalError, SchemaError
from .extraction import (
    RawTriplet,
    RefinementConfig,
    T2GProvider,
    extract_rule_based,
    extract_t2g,
    parse_structured,
    refine,
)
from .generation import (
    GenerationProvider,
    GenerationRequest,
    PromptKind,
    generate_batch,
    render_prompt,
)
from .geometry import BoundingBox
from .metrics import (
    MetricReport,
    aggregate_report,
    report_to_json,
    semantic_map,
)
from .pairing import build_pairs, load_image, render_visual_prompt
from .vocabulary import SimilarityProvider, VerbVocabulary

logger = logging.getLogger(__name__)


@dataclass
class StageResult:
    """Output records plus per-sample errors collected along the way."""

    records: list[dict] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)


def _pair_record(image_id: str, pair, prompt_path: str | None) -> dict:
    record = {
        "image_id": image_id,
        "pair_id": pair.pair_id,
        "human_box": list(pair.human.box.as_tuple()),
        "object_box": list(pair.object.box.as_tuple()),
        "human_label": pair.human.label,
        "object_label": pair.object.label,
    }
    if prompt_path is not None:
        record["visual_prompt_path"] = prompt_path
    return record


def run_pairs(
    samples: list[EvalSample],
    config: PipelineConfig,
    image_paths: dict[str, str] | None = None,
    prompt_dir: str | Path | None = None,
) -> StageResult:
    """Build candidate pairs per image; optionally render and persist the
    visual prompts (requires the image_id -> file mapping)."""
    result = StageResult()
    for sample in samples:
        detections = sample.detections
        if config.protocol is Protocol.COMPUTED:
            detections = filter_detections(
                detections,
                config.detection_conf_threshold,
                config.detection_min_instances,
                config.detection_max_instances,
            )
        pairs = build_pairs(
            detections,
            image_id=sample.image_id,
            include_human_human=config.include_human_human_pairs,
        )
        image = None
        if prompt_dir is not None:
            path = (image_paths or {}).get(sample.image_id)
            if path is None:
                result.errors.append(f"{sample.image_id}: no image path in mapping")
            else:
                try:
                    image = load_image(path)
                except HoiEvalError as exc:
                    result.errors.append(f"{sample.image_id}: {exc}")
        for pair in pairs:
            prompt_path = None
            if image is not None:
                prompt = render_visual_prompt(image, pair, config.visual_mode)
                safe_id = pair.pair_id.replace(":", "_").replace("/", "_")
                out = Path(prompt_dir) / f"{safe_id}.png"
                prompt.image.save(out, format="PNG")
                prompt_path = str(out)
            result.records.append(_pair_record(sample.image_id, pair, prompt_path))
    return result


def write_jsonl(records: list[dict], path: str | Path):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def run_generate(
    pair_records: list[dict],
    provider: GenerationProvider,
    config: PipelineConfig,
    existing: list[dict] | None = None,
) -> StageResult:
    """Generate N samples per pair. Pairs already present in the existing
    transcript are skipped, making reruns resumable."""
    result = StageResult()
    done = {record["pair_id"] for record in existing or []}
    result.records.extend(existing or [])
    todo = [r for r in pair_records if r["pair_id"] not in done]
    requests = []
    for record in todo:
        image = None
        path = record.get("visual_prompt_path")
        if path:
            image = load_image(path)
        requests.append(
            GenerationRequest(
                pair_id=record["pair_id"],
                image=image,
                prompt=render_prompt(config.prompt_kind, record["object_label"]),
                temperature=config.temperature,
                max_tokens=config.max_tokens,
                num_samples=config.num_generations,
                seed=config.seed,
            )
        )
    responses = generate_batch(requests, provider, max_in_flight=config.max_in_flight)
    for record, response in zip(todo, responses):
        for index, text in enumerate(response.texts):
            result.records.append(
                {
                    "pair_id": record["pair_id"],
                    "image_id": record["image_id"],
                    "object_label": record["object_label"],
                    "human_box": record["human_box"],
                    "object_box": record["object_box"],
                    "prompt_kind": config.prompt_kind.value,
                    "sample_index": index,
                    "text": text,
                }
            )
    return result


def extract_transcript_text(
    text: str,
    prompt_kind: PromptKind,
    sample_index: int,
    t2g: T2GProvider | None,
) -> list[RawTriplet]:
    if prompt_kind is PromptKind.STRUCTURED:
        return parse_structured(text, sample_index=sample_index)
    if t2g is not None:
        return extract_t2g(text, t2g, sample_index=sample_index)
    return extract_rule_based(text, sample_index=sample_index)


def predictions_from_transcripts(
    transcripts: list[dict],
    config: PipelineConfig,
    refinement: RefinementConfig = RefinementConfig(),
    t2g: T2GProvider | None = None,
) -> dict[str, list[PredictedInteraction]]:
    """Extraction -> refinement -> aggregation, grouped per image."""
    by_pair: dict[str, list[dict]] = {}
    for record in transcripts:
        by_pair.setdefault(record["pair_id"], []).append(record)

    predictions: dict[str, list[PredictedInteraction]] = {}
    for pair_id in sorted(by_pair):
        records = sorted(by_pair[pair_id], key=lambda r: r["sample_index"])
        meta = records[0]
        prompt_object = normalize_label(meta["object_label"])
        per_sample: list[list[RawTriplet]] = []
        for record in records:
            triplets = extract_transcript_text(
                record["text"],
                PromptKind(record.get("prompt_kind", config.prompt_kind.value)),
                record["sample_index"],
                t2g,
            )
            per_sample.append(refine(triplets, prompt_object, refinement))
        freq = pool(per_sample)
        if config.selection == "sampling":
            selected = select_sampling(freq, config.top_k, config.seed)
        else:
            selected = select_topk(freq, config.top_k)
        image_preds = predictions.setdefault(meta["image_id"], [])
        for triplet, score in selected:
            image_preds.append(
                PredictedInteraction(
                    human_box=BoundingBox.from_sequence(meta["human_box"]),
                    object_box=BoundingBox.from_sequence(meta["object_box"]),
                    object_label=prompt_object,
                    verb_phrase=triplet.verb,
                    score=score,
                    provenance=f"{pair_id}:{triplet.source}:{triplet.sample_index}",
                )
            )
    return predictions


def load_predictions_file(path: str | Path) -> dict[str, list[PredictedInteraction]]:
    """Precomputed predictions JSON (external-baseline ingestion path)."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if "images" not in data:
        raise SchemaError(f"{path}: missing top-level 'images' key")
    predictions: dict[str, list[PredictedInteraction]] = {}
    for idx, record in enumerate(data["images"]):
        ctx = f"{path}: images[{idx}]"
        if "id" not in record or "predictions" not in record:
            raise SchemaError(f"{ctx}: needs 'id' and 'predictions'")
        preds = []
        for j, p in enumerate(record["predictions"]):
            pctx = f"{ctx}.predictions[{j}]"
            try:
                preds.append(
                    PredictedInteraction(
                        human_box=BoundingBox.from_sequence(p["human_box"]),
                        object_box=BoundingBox.from_sequence(p["object_box"]),
                        object_label=normalize_label(p.get("object_label", "")),
                        verb_phrase=normalize_label(p["verb"]),
                        score=float(p["score"]),
                        provenance="external",
                    )
                )
            except (KeyError, HoiEvalError) as exc:
                raise SchemaError(f"{pctx}: {exc}") from exc
        predictions[str(record["id"])] = preds
    return predictions


def evaluate_predictions(
    predictions_by_image: dict[str, list[PredictedInteraction]],
    samples: list[EvalSample],
    vocab: VerbVocabulary,
    sim: SimilarityProvider,
    config: PipelineConfig,
    rarity_split: RaritySplit | None = None,
) -> MetricReport:
    eval_config = config.eval_config()
    reports = []
    for sample in sorted(samples, key=lambda s: s.image_id):
        preds = predictions_by_image.get(sample.image_id, [])
        reports.append(
            semantic_map(preds, sample.ground_truth, vocab, sim, eval_config, rarity_split)
        )
    return aggregate_report(reports, rarity_split)


def run_evaluate(
    annotations_path: str | Path,
    vocab: VerbVocabulary,
    sim: SimilarityProvider,
    config: PipelineConfig,
    transcripts_path: str | Path | None = None,
    predictions_path: str | Path | None = None,
    rarity_split: RaritySplit | None = None,
    refinement: RefinementConfig = RefinementConfig(),
    t2g: T2GProvider | None = None,
) -> MetricReport:
    """Full back half of the pipeline, from transcripts or a predictions file."""
    samples = load_annotations(annotations_path, config.protocol)
    if predictions_path is not None:
        predictions = load_predictions_file(predictions_path)
    elif transcripts_path is not None:
        transcripts = read_jsonl(transcripts_path)
        predictions = predictions_from_transcripts(transcripts, config, refinement, t2g)
    else:
        raise SchemaError("evaluate needs either transcripts or a predictions file")
    return evaluate_predictions(predictions, samples, vocab, sim, config, rarity_split)


def write_report(report: MetricReport, json_path: str | Path, csv_path: str | Path | None = None):
    Path(json_path).write_text(report_to_json(report), encoding="utf-8")
    if csv_path is not None:
        Path(csv_path).write_text(report_to_csv(report), encoding="utf-8")


def report_to_csv(report: MetricReport) -> str:
    """One-row summary table: per-threshold mAP, splits, SR x100."""
    headers = [f"map@{format(tau, 'g')}" for tau in report.config.similarity_thresholds]
    headers += ["map_avg", "full", "rare", "nonrare", "sr_x100"]
    values = [format(report.map_per_threshold[tau] * 100, ".2f")
              for tau in report.config.similarity_thresholds]
    values.append(format(report.map_avg * 100, ".2f"))
    for key in ("full", "rare", "nonrare"):
        value = report.splits.get(key)
        values.append("" if value is None else format(value * 100, ".2f"))
    values.append(format(report.sr * 100, ".2f"))
    return ",".join(headers) + "\n" + ",".join(values) + "\n"
