"""Core interaction records, annotation ingestion, and rarity bookkeeping."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError, SchemaError, ValidationError
from .geometry import BoundingBox

_ARTICLES = {"a", "an", "the"}
_WS = re.compile(r"\s+")


def normalize_label(raw: str) -> str:
    """Lowercase, trim, collapse whitespace, and strip leading articles."""
    words = _WS.sub(" ", raw.strip().lower()).split(" ")
    words = [w for w in words if w and w not in _ARTICLES]
    return " ".join(words)


class Protocol(str, enum.Enum):
    ANNOTATED = "annotated"
    COMPUTED = "computed"


class Rarity(str, enum.Enum):
    RARE = "rare"
    NONRARE = "nonrare"


@dataclass(frozen=True)
class Detection:
    """A detected instance: box, normalized class label, confidence."""

    box: BoundingBox
    label: str
    score: float

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValidationError(f"detection score out of [0, 1]: {self.score}")
        if not self.label:
            raise ValidationError("detection label is empty")
        if self.label != normalize_label(self.label):
            raise ValidationError(f"detection label not normalized: {self.label!r}")


@dataclass(frozen=True)
class GroundTruthInteraction:
    human_box: BoundingBox
    object_box: BoundingBox
    object_label: str
    verb_id: int
    hoi_category_id: int | None = None


@dataclass(frozen=True)
class PredictedInteraction:
    """A free-form interaction prediction with provenance."""

    human_box: BoundingBox
    object_box: BoundingBox
    object_label: str
    verb_phrase: str
    score: float
    provenance: str = ""

    def __post_init__(self):
        if not self.verb_phrase:
            raise ValidationError("prediction verb_phrase is empty")
        if not (0.0 <= self.score <= 1.0):
            raise ValidationError(f"prediction score out of [0, 1]: {self.score}")


@dataclass
class EvalSample:
    image_id: str
    image_size: tuple[int, int]
    ground_truth: list[GroundTruthInteraction] = field(default_factory=list)
    detections: list[Detection] = field(default_factory=list)


@dataclass(frozen=True)
class RaritySplit:
    """Disjoint rare/non-rare partition of HOI category ids."""

    rare_ids: frozenset[int]
    nonrare_ids: frozenset[int]

    def __post_init__(self):
        overlap = self.rare_ids & self.nonrare_ids
        if overlap:
            raise ValidationError(f"rare/nonrare splits overlap: {sorted(overlap)[:5]}")

    @classmethod
    def load(cls, path: str | Path) -> "RaritySplit":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(frozenset(data["rare"]), frozenset(data["nonrare"]))


def assign_rarity(gt: GroundTruthInteraction, split: RaritySplit) -> Rarity:
    """Tag a ground-truth interaction as Rare or NonRare by its category id."""
    if gt.hoi_category_id is None:
        raise ConfigurationError("ground truth has no hoi_category_id")
    if gt.hoi_category_id in split.rare_ids:
        return Rarity.RARE
    if gt.hoi_category_id in split.nonrare_ids:
        return Rarity.NONRARE
    raise ConfigurationError(f"unknown hoi_category_id: {gt.hoi_category_id}")


def _check_box_in_bounds(box: BoundingBox, size: tuple[int, int], ctx: str):
    width, height = size
    if box.x_max > width or box.y_max > height:
        raise ValidationError(f"{ctx}: box {box.as_tuple()} exceeds image size {size}")


def _parse_box(value, ctx: str) -> BoundingBox:
    try:
        return BoundingBox.from_sequence(value)
    except (TypeError, ValidationError) as exc:
        raise SchemaError(f"{ctx}: {exc}") from exc


def load_annotations(path: str | Path, protocol: Protocol | str) -> list[EvalSample]:
    """Load a canonical annotation file into validated samples.

    In the annotated protocol the detection list is synthesized from the
    ground-truth boxes (deduplicated, score 1.0); any detections present in
    the file are ignored. In the computed protocol the file's detections are
    used as-is.
    """
    protocol = Protocol(protocol)
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if "images" not in data:
        raise SchemaError(f"{path}: missing top-level 'images' key")

    samples = []
    for idx, record in enumerate(data["images"]):
        ctx = f"{path}: images[{idx}]"
        for key in ("id", "width", "height", "gt"):
            if key not in record:
                raise SchemaError(f"{ctx}: missing field {key!r}")
        size = (int(record["width"]), int(record["height"]))
        gts = []
        for j, g in enumerate(record["gt"]):
            gctx = f"{ctx}.gt[{j}]"
            for key in ("human_box", "object_box", "object_label", "verb"):
                if key not in g:
                    raise SchemaError(f"{gctx}: missing field {key!r}")
            human_box = _parse_box(g["human_box"], f"{gctx}.human_box")
            object_box = _parse_box(g["object_box"], f"{gctx}.object_box")
            _check_box_in_bounds(human_box, size, f"{gctx}.human_box")
            _check_box_in_bounds(object_box, size, f"{gctx}.object_box")
            gts.append(
                GroundTruthInteraction(
                    human_box=human_box,
                    object_box=object_box,
                    object_label=normalize_label(g["object_label"]),
                    verb_id=int(g["verb"]),
                    hoi_category_id=(
                        int(g["hoi_category_id"]) if g.get("hoi_category_id") is not None else None
                    ),
                )
            )

        if protocol is Protocol.ANNOTATED:
            detections = _detections_from_gt(gts)
        else:
            detections = []
            for j, d in enumerate(record.get("detections", [])):
                dctx = f"{ctx}.detections[{j}]"
                for key in ("box", "label", "score"):
                    if key not in d:
                        raise SchemaError(f"{dctx}: missing field {key!r}")
                box = _parse_box(d["box"], f"{dctx}.box")
                _check_box_in_bounds(box, size, f"{dctx}.box")
                score = float(d["score"])
                if not (0.0 <= score <= 1.0):
                    raise SchemaError(f"{dctx}: score out of [0, 1]: {score}")
                detections.append(Detection(box=box, label=normalize_label(d["label"]), score=score))

        samples.append(
            EvalSample(
                image_id=str(record["id"]),
                image_size=size,
                ground_truth=gts,
                detections=detections,
            )
        )
    return samples


def _detections_from_gt(gts: list[GroundTruthInteraction]) -> list[Detection]:
    """Unique GT boxes as score-1.0 detections (humans labeled "person")."""
    seen = set()
    detections = []
    for gt in gts:
        for box, label in ((gt.human_box, "person"), (gt.object_box, gt.object_label)):
            key = (box.as_tuple(), label)
            if key not in seen:
                seen.add(key)
                detections.append(Detection(box=box, label=label, score=1.0))
    return detections


def filter_detections(
    detections: list[Detection],
    conf_threshold: float = 0.2,
    min_n: int = 3,
    max_n: int = 15,
) -> list[Detection]:
    """Confidence-filter with a per-image floor and cap on instance count.

    Detections at or above the threshold are kept. If fewer than min_n
    survive, the highest-scoring rejected detections are backfilled until
    min_n is reached or the supply runs out. The result is truncated to the
    max_n highest scores.
    """
    if min_n > max_n:
        raise ValidationError(f"min_n ({min_n}) > max_n ({max_n})")
    ranked = sorted(detections, key=lambda d: -d.score)
    kept = [d for d in ranked if d.score >= conf_threshold]
    if len(kept) < min_n:
        rejected = [d for d in ranked if d.score < conf_threshold]
        kept.extend(rejected[: min_n - len(kept)])
    return kept[:max_n]


def serialize_samples(samples: list[EvalSample]) -> dict:
    """Canonical-schema dict for a list of samples (round-trip aid)."""
    images = []
    for s in samples:
        images.append(
            {
                "id": s.image_id,
                "width": s.image_size[0],
                "height": s.image_size[1],
                "gt": [
                    {
                        "human_box": list(g.human_box.as_tuple()),
                        "object_box": list(g.object_box.as_tuple()),
                        "object_label": g.object_label,
                        "verb": g.verb_id,
                        **(
                            {"hoi_category_id": g.hoi_category_id}
                            if g.hoi_category_id is not None
                            else {}
                        ),
                    }
                    for g in s.ground_truth
                ],
                "detections": [
                    {"box": list(d.box.as_tuple()), "label": d.label, "score": d.score}
                    for d in s.detections
                ],
            }
        )
    return {"images": images}
