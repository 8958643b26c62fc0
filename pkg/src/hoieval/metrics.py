"""Semantic Recall and threshold-averaged semantic-similarity mAP."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .datamodel import (
    GroundTruthInteraction,
    PredictedInteraction,
    Protocol,
    RaritySplit,
)
from .errors import ConfigurationError, UndefinedMetricError, ValidationError
from .geometry import iou, spatial_match
from .vocabulary import SimilarityProvider, VerbVocabulary, map_to_vocabulary


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation constants; defaults mirror the protocol settings."""

    similarity_thresholds: tuple[float, ...] = (0.6, 0.7, 0.8, 0.9, 0.95)
    iou_threshold: float = 0.5
    protocol: Protocol = Protocol.ANNOTATED
    class_mode: str = "verb"  # "verb": AP per verb; "hoi": AP per (verb, object) category

    def __post_init__(self):
        if not self.similarity_thresholds:
            raise ValidationError("similarity threshold list is empty")
        previous = 0.0
        for tau in self.similarity_thresholds:
            if not (0.0 < tau <= 1.0):
                raise ValidationError(f"threshold out of (0, 1]: {tau}")
            if tau <= previous:
                raise ValidationError("thresholds must be strictly increasing")
            previous = tau
        if not (0.0 < self.iou_threshold <= 1.0):
            raise ValidationError(f"iou_threshold out of (0, 1]: {self.iou_threshold}")
        if self.class_mode not in ("verb", "hoi"):
            raise ValidationError(f"unknown class_mode: {self.class_mode}")


@dataclass
class PerClassAP:
    class_key: int
    tau: float
    ap: float
    true_positives: int
    duplicates: int
    ignored: int
    gt_count: int


@dataclass
class _ClassRecords:
    """Ranked match outcomes for one class at one threshold."""

    gt_count: int = 0
    # (score, sequence, is_tp); sequence preserves stable input order.
    records: list[tuple[float, int, bool]] = field(default_factory=list)
    ignored: int = 0


@dataclass
class MetricReport:
    config: EvalConfig
    map_per_threshold: dict[float, float]
    map_avg: float
    sr_sum: float
    sr_count: int
    splits: dict[str, float | None]
    per_class: list[PerClassAP]
    # Raw per-threshold records retained so image reports can be pooled.
    class_records: dict[float, dict[int, _ClassRecords]] = field(default_factory=dict)

    @property
    def sr(self) -> float:
        return self.sr_sum / self.sr_count if self.sr_count else 0.0


def semantic_recall(
    predictions: list[PredictedInteraction],
    ground_truth: list[GroundTruthInteraction],
    vocab: VerbVocabulary,
    sim: SimilarityProvider,
    iou_threshold: float = 0.5,
) -> float:
    """Mean over GT instances of the best verb similarity among spatially
    matched predictions; 0 for a GT with no matched prediction."""
    if not ground_truth:
        raise UndefinedMetricError("semantic recall is undefined without ground truth")
    total = 0.0
    for gt in ground_truth:
        gt_verb = vocab.verbs[gt.verb_id]
        best = 0.0
        for pred in predictions:
            if spatial_match(
                (pred.human_box, pred.object_box),
                (gt.human_box, gt.object_box),
                iou_threshold,
            ):
                best = max(best, sim.similarity(pred.verb_phrase, gt_verb))
        total += best
    return total / len(ground_truth)


def _pair_iou(pred: PredictedInteraction, gt: GroundTruthInteraction) -> float:
    return min(iou(pred.human_box, gt.human_box), iou(pred.object_box, gt.object_box))


def _hoi_category_map(gts: list[GroundTruthInteraction]) -> dict[tuple[int, str], int]:
    mapping: dict[tuple[int, str], int] = {}
    for gt in gts:
        if gt.hoi_category_id is None:
            raise ConfigurationError("hoi class mode needs hoi_category_id on every GT")
        key = (gt.verb_id, gt.object_label)
        existing = mapping.get(key)
        if existing is not None and existing != gt.hoi_category_id:
            raise ConfigurationError(
                f"(verb, object) pair {key} maps to two category ids: "
                f"{existing} and {gt.hoi_category_id}"
            )
        mapping[key] = gt.hoi_category_id
    return mapping


def _gt_class(gt: GroundTruthInteraction, config: EvalConfig) -> int:
    if config.class_mode == "verb":
        return gt.verb_id
    if gt.hoi_category_id is None:
        raise ConfigurationError("hoi class mode needs hoi_category_id on every GT")
    return gt.hoi_category_id


def _match_threshold(
    predictions: list[PredictedInteraction],
    ground_truth: list[GroundTruthInteraction],
    vocab: VerbVocabulary,
    sim: SimilarityProvider,
    config: EvalConfig,
    tau: float,
    hoi_map: dict[tuple[int, str], int] | None,
) -> dict[int, _ClassRecords]:
    per_class: dict[int, _ClassRecords] = {}
    for gt in ground_truth:
        per_class.setdefault(_gt_class(gt, config), _ClassRecords()).gt_count += 1

    # Expand free-form verbs into the vocabulary, then rank by score with
    # ties broken by stable input order.
    candidates: list[tuple[float, int, int, PredictedInteraction]] = []
    for order, pred in enumerate(predictions):
        for verb_idx, _ in map_to_vocabulary(pred.verb_phrase, vocab, tau, sim):
            if config.class_mode == "verb":
                class_key = verb_idx
            else:
                class_key = (hoi_map or {}).get((verb_idx, pred.object_label))
                if class_key is None:
                    continue  # no such category anywhere in this ground truth
            candidates.append((pred.score, order, class_key, pred))
    candidates.sort(key=lambda c: (-c[0], c[1]))

    matched: dict[int, set[int]] = {}
    for score, order, class_key, pred in candidates:
        records = per_class.setdefault(class_key, _ClassRecords())
        taken = matched.setdefault(class_key, set())
        best_free = None
        best_free_iou = 0.0
        hit_taken = False
        for gt_idx, gt in enumerate(ground_truth):
            if _gt_class(gt, config) != class_key:
                continue
            if not spatial_match(
                (pred.human_box, pred.object_box),
                (gt.human_box, gt.object_box),
                config.iou_threshold,
            ):
                continue
            if gt_idx in taken:
                hit_taken = True
                continue
            overlap = _pair_iou(pred, gt)
            if best_free is None or overlap > best_free_iou:
                best_free = gt_idx
                best_free_iou = overlap
        if best_free is not None:
            taken.add(best_free)
            records.records.append((score, order, True))
        elif hit_taken:
            records.records.append((score, order, False))
        else:
            # No spatially matching GT of this class: not penalized.
            records.ignored += 1
    return per_class


def _average_precision(records: _ClassRecords) -> PerClassAP | None:
    """Area under the step-function PR curve; None when the class has no GT."""
    if records.gt_count == 0:
        return None
    ranked = sorted(records.records, key=lambda r: (-r[0], r[1]))
    tp = 0
    fp = 0
    precision_sum = 0.0
    for _, _, is_tp in ranked:
        if is_tp:
            tp += 1
            precision_sum += tp / (tp + fp)
        else:
            fp += 1
    return PerClassAP(
        class_key=-1,
        tau=0.0,
        ap=precision_sum / records.gt_count,
        true_positives=tp,
        duplicates=fp,
        ignored=records.ignored,
        gt_count=records.gt_count,
    )


def _summarize(
    class_records: dict[float, dict[int, _ClassRecords]],
    config: EvalConfig,
    sr_sum: float,
    sr_count: int,
    rarity_split: RaritySplit | None,
) -> MetricReport:
    map_per_threshold: dict[float, float] = {}
    per_class: list[PerClassAP] = []
    per_threshold_class_ap: dict[float, dict[int, float]] = {}
    for tau in config.similarity_thresholds:
        aps: dict[int, float] = {}
        for class_key, records in sorted(class_records[tau].items()):
            result = _average_precision(records)
            if result is None:
                continue
            result.class_key = class_key
            result.tau = tau
            aps[class_key] = result.ap
            per_class.append(result)
        per_threshold_class_ap[tau] = aps
        map_per_threshold[tau] = sum(aps.values()) / len(aps) if aps else 0.0
    map_avg = sum(map_per_threshold.values()) / len(map_per_threshold)

    def restricted_avg(ids: frozenset[int] | None) -> float | None:
        if ids is None:
            return None
        values = []
        for tau in config.similarity_thresholds:
            aps = [ap for key, ap in per_threshold_class_ap[tau].items() if key in ids]
            values.append(sum(aps) / len(aps) if aps else 0.0)
        return sum(values) / len(values)

    splits = {
        "full": map_avg,
        "rare": restricted_avg(rarity_split.rare_ids if rarity_split else None),
        "nonrare": restricted_avg(rarity_split.nonrare_ids if rarity_split else None),
    }
    return MetricReport(
        config=config,
        map_per_threshold=map_per_threshold,
        map_avg=map_avg,
        sr_sum=sr_sum,
        sr_count=sr_count,
        splits=splits,
        per_class=per_class,
        class_records=class_records,
    )


def semantic_map(
    predictions: list[PredictedInteraction],
    ground_truth: list[GroundTruthInteraction],
    vocab: VerbVocabulary,
    sim: SimilarityProvider,
    config: EvalConfig = EvalConfig(),
    rarity_split: RaritySplit | None = None,
) -> MetricReport:
    """Evaluate one image's predictions against its ground truth.

    Per threshold, free-form verbs expand into the vocabulary; per class the
    ranked expansions greedy-match ground truth. A prediction whose class
    has no spatially matching GT is ignored (datasets are not exhaustively
    labeled); only duplicate matches count as false positives.
    """
    for gt in ground_truth:
        if not (0 <= gt.verb_id < len(vocab)):
            raise ConfigurationError(
                f"ground-truth verb_id {gt.verb_id} outside vocabulary of size {len(vocab)}"
            )
    hoi_map = _hoi_category_map(ground_truth) if config.class_mode == "hoi" else None
    class_records = {
        tau: _match_threshold(predictions, ground_truth, vocab, sim, config, tau, hoi_map)
        for tau in config.similarity_thresholds
    }
    if ground_truth:
        sr_sum = semantic_recall(predictions, ground_truth, vocab, sim, config.iou_threshold)
        sr_sum *= len(ground_truth)
        sr_count = len(ground_truth)
    else:
        sr_sum, sr_count = 0.0, 0
    return _summarize(class_records, config, sr_sum, sr_count, rarity_split)


def aggregate_report(
    reports: list[MetricReport],
    rarity_split: RaritySplit | None = None,
) -> MetricReport:
    """Pool per-image reports into a dataset-level report.

    AP is recomputed over the pooled ranked list per class (standard
    detection evaluation), not averaged per image; SR averages over all GT
    instances dataset-wide.
    """
    if not reports:
        raise ValidationError("nothing to aggregate")
    config = reports[0].config
    for report in reports[1:]:
        if report.config != config:
            raise ConfigurationError("cannot aggregate reports with different configs")

    pooled: dict[float, dict[int, _ClassRecords]] = {
        tau: {} for tau in config.similarity_thresholds
    }
    sequence = 0
    for report in reports:
        offset = sequence
        local_max = -1
        for tau in config.similarity_thresholds:
            for class_key, records in report.class_records[tau].items():
                target = pooled[tau].setdefault(class_key, _ClassRecords())
                target.gt_count += records.gt_count
                target.ignored += records.ignored
                for score, order, is_tp in records.records:
                    target.records.append((score, offset + order, is_tp))
                    local_max = max(local_max, order)
        sequence = offset + local_max + 1
    sr_sum = sum(r.sr_sum for r in reports)
    sr_count = sum(r.sr_count for r in reports)
    return _summarize(pooled, config, sr_sum, sr_count, rarity_split)


def report_to_dict(report: MetricReport) -> dict:
    """JSON-ready dict in the external report schema."""
    return {
        "map_per_threshold": {
            format(tau, "g"): report.map_per_threshold[tau]
            for tau in report.config.similarity_thresholds
        },
        "map_avg": report.map_avg,
        "sr": report.sr,
        "splits": dict(report.splits),
        "per_class": [
            {
                "class": entry.class_key,
                "tau": entry.tau,
                "ap": entry.ap,
                "tp": entry.true_positives,
                "duplicates": entry.duplicates,
                "ignored": entry.ignored,
                "gt_count": entry.gt_count,
            }
            for entry in report.per_class
        ],
        "config": {
            "similarity_thresholds": list(report.config.similarity_thresholds),
            "iou_threshold": report.config.iou_threshold,
            "protocol": report.config.protocol.value,
            "class_mode": report.config.class_mode,
        },
    }


def report_to_json(report: MetricReport) -> str:
    """Canonical serialization: sorted keys, stable float formatting."""
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n"
