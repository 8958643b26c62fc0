"""Human-object pair construction and per-pair visual prompt rendering."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, ImageDraw, ImageFilter, UnidentifiedImageError

from .datamodel import Detection
from .errors import ImageError, ValidationError
from .geometry import BoundingBox, UnionRegion, union_box

DEFAULT_HUMAN_LEXICON = frozenset(
    {"person", "man", "woman", "boy", "girl", "child", "human", "people", "guy", "lady"}
)


@dataclass(frozen=True)
class HumanObjectPair:
    human: Detection
    object: Detection
    pair_id: str

    def __post_init__(self):
        if self.human is self.object:
            raise ValidationError("pair members must be distinct detections")


class VisualPromptMode(str, enum.Enum):
    CROP = "crop"
    RED_CIRCLE = "red_circle"
    REVERSE_BLUR = "reverse_blur"
    CROP_MASK = "crop_mask"
    BLIND = "blind"


@dataclass(frozen=True)
class VisualPrompt:
    mode: VisualPromptMode
    image: Image.Image
    region: UnionRegion


def build_pairs(
    detections: list[Detection],
    image_id: str = "",
    human_lexicon: frozenset[str] = DEFAULT_HUMAN_LEXICON,
    include_human_human: bool = True,
) -> list[HumanObjectPair]:
    """Cartesian product of human detections with all other detections.

    Self-pairs are excluded; human-human pairs are kept by default. Order is
    deterministic: (human index, object index) over the input list.
    """
    pairs = []
    for hi, human in enumerate(detections):
        if human.label not in human_lexicon:
            continue
        for oi, obj in enumerate(detections):
            if oi == hi:
                continue
            if not include_human_human and obj.label in human_lexicon:
                continue
            pairs.append(
                HumanObjectPair(human=human, object=obj, pair_id=f"{image_id}:{hi}:{oi}")
            )
    return pairs


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _pixel_box(box: BoundingBox, size: tuple[int, int]) -> tuple[int, int, int, int]:
    """Round to the integer pixel grid and clamp to the image bounds."""
    width, height = size
    x0 = min(max(_round_half_up(box.x_min), 0), width)
    y0 = min(max(_round_half_up(box.y_min), 0), height)
    x1 = min(max(_round_half_up(box.x_max), 0), width)
    y1 = min(max(_round_half_up(box.y_max), 0), height)
    return x0, y0, x1, y1


def load_image(path: str | Path) -> Image.Image:
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except (OSError, UnidentifiedImageError) as exc:
        raise ImageError(f"cannot decode image {path}: {exc}") from exc


def render_visual_prompt(
    image: Image.Image,
    pair: HumanObjectPair,
    mode: VisualPromptMode | str = VisualPromptMode.CROP,
) -> VisualPrompt:
    """Render the visual prompt image for one human-object pair.

    crop: union-box subimage. red_circle: full image with a red ellipse
    inscribed in the union box. reverse_blur: full image blurred outside the
    two boxes. crop_mask: union-box subimage with pixels outside both boxes
    blacked out. blind: black image of the crop's dimensions.
    """
    mode = VisualPromptMode(mode)
    region = union_box(pair.human.box, pair.object.box)
    ux0, uy0, ux1, uy1 = _pixel_box(region.box, image.size)
    if ux1 - ux0 <= 0 or uy1 - uy0 <= 0:
        raise ValidationError(
            f"union box degenerate after clamping to image bounds: {(ux0, uy0, ux1, uy1)}"
        )

    if mode is VisualPromptMode.CROP:
        out = image.crop((ux0, uy0, ux1, uy1))
    elif mode is VisualPromptMode.BLIND:
        out = Image.new("RGB", (ux1 - ux0, uy1 - uy0), (0, 0, 0))
    elif mode is VisualPromptMode.RED_CIRCLE:
        out = image.copy()
        diagonal = math.hypot(*image.size)
        stroke = max(2, _round_half_up(0.005 * diagonal))
        draw = ImageDraw.Draw(out)
        draw.ellipse((ux0, uy0, ux1 - 1, uy1 - 1), outline=(255, 0, 0), width=stroke)
    elif mode is VisualPromptMode.REVERSE_BLUR:
        diagonal = math.hypot(*image.size)
        sigma = 0.02 * diagonal
        out = image.filter(ImageFilter.GaussianBlur(radius=sigma))
        for box in (pair.human.box, pair.object.box):
            bx0, by0, bx1, by1 = _pixel_box(box, image.size)
            if bx1 > bx0 and by1 > by0:
                out.paste(image.crop((bx0, by0, bx1, by1)), (bx0, by0))
    elif mode is VisualPromptMode.CROP_MASK:
        mask = Image.new("L", image.size, 0)
        mask_draw = ImageDraw.Draw(mask)
        for box in (pair.human.box, pair.object.box):
            bx0, by0, bx1, by1 = _pixel_box(box, image.size)
            if bx1 > bx0 and by1 > by0:
                mask_draw.rectangle((bx0, by0, bx1 - 1, by1 - 1), fill=255)
        black = Image.new("RGB", image.size, (0, 0, 0))
        black.paste(image, (0, 0), mask)
        out = black.crop((ux0, uy0, ux1, uy1))
    else:  # pragma: no cover - enum is exhaustive
        raise ValidationError(f"unknown visual prompt mode: {mode}")

    return VisualPrompt(mode=mode, image=out, region=region)
