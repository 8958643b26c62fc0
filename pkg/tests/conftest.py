"""Shared fixtures: fixture-backed embeddings, vocabularies, and randomized
evaluation instances used by the oracle-equivalence and property suites."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from hoieval.datamodel import GroundTruthInteraction, PredictedInteraction
from hoieval.geometry import BoundingBox
from hoieval.vocabulary import FileVectorProvider, VerbVocabulary

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def hand_sim():
    """Hand-written 2D vectors with exactly known cosines."""
    return FileVectorProvider(FIXTURES / "embeddings_hand.tsv")


@pytest.fixture(scope="session")
def rand_sim():
    """Seeded random 3D vectors; cosines spread widely over [-1, 1]."""
    return FileVectorProvider(FIXTURES / "embeddings_random.tsv")


@pytest.fixture(scope="session")
def vocab6():
    return VerbVocabulary.load(FIXTURES / "vocab.txt")


@pytest.fixture(scope="session")
def rand_vocab():
    return VerbVocabulary.from_phrases([f"verb{i:02d}" for i in range(6)], source="random")


RAND_PHRASES = [f"verb{i:02d}" for i in range(6)] + [f"phrase{i:02d}" for i in range(14)]


def random_box(rng: random.Random, limit: float = 1000.0) -> BoundingBox:
    x0 = rng.uniform(0, limit - 20)
    y0 = rng.uniform(0, limit - 20)
    return BoundingBox(x0, y0, x0 + rng.uniform(10, limit - x0), y0 + rng.uniform(10, limit - y0))


def jitter_box(rng: random.Random, box: BoundingBox, scale: float = 0.1) -> BoundingBox:
    """Perturb a box mildly so it usually stays above the 0.5 IoU gate."""
    dx = rng.uniform(-scale, scale) * box.width
    dy = rng.uniform(-scale, scale) * box.height
    return BoundingBox(
        max(0.0, box.x_min + dx),
        max(0.0, box.y_min + dy),
        box.x_max + dx,
        box.y_max + dy,
    )


def random_instance(rng: random.Random, max_gt: int = 5, max_pred: int = 10):
    """Fully random instance: boxes, verbs, scores all unconstrained."""
    gts = []
    for _ in range(rng.randint(1, max_gt)):
        gts.append(
            GroundTruthInteraction(
                human_box=random_box(rng),
                object_box=random_box(rng),
                object_label="thing",
                verb_id=rng.randrange(6),
            )
        )
    preds = []
    for _ in range(rng.randint(0, max_pred)):
        if gts and rng.random() < 0.7:
            anchor = rng.choice(gts)
            human = jitter_box(rng, anchor.human_box)
            obj = jitter_box(rng, anchor.object_box)
        else:
            human = random_box(rng)
            obj = random_box(rng)
        preds.append(
            PredictedInteraction(
                human_box=human,
                object_box=obj,
                object_label="thing",
                verb_phrase=rng.choice(RAND_PHRASES),
                score=rng.random(),
            )
        )
    return preds, gts


def grid_box(slot: int) -> BoundingBox:
    """Well-separated 100x100 boxes on a coarse grid (no accidental overlap)."""
    row, col = divmod(slot, 8)
    x = 50 + col * 400.0
    y = 50 + row * 400.0
    return BoundingBox(x, y, x + 100, y + 100)


def separated_instance(rng: random.Random, max_gt: int = 5, max_pred: int = 10):
    """Instance where each GT has at most one spatially matching prediction
    and no two predictions overlap: exercises matching without duplicate
    false positives."""
    n_gt = rng.randint(1, max_gt)
    gts = []
    for i in range(n_gt):
        gts.append(
            GroundTruthInteraction(
                human_box=grid_box(2 * i),
                object_box=grid_box(2 * i + 1),
                object_label="thing",
                verb_id=rng.randrange(6),
            )
        )
    preds = []
    free_slot = 2 * n_gt
    matchable = list(range(n_gt))
    rng.shuffle(matchable)
    for _ in range(rng.randint(0, max_pred)):
        if matchable and rng.random() < 0.7:
            target = gts[matchable.pop()]
            human = jitter_box(rng, target.human_box, scale=0.05)
            obj = jitter_box(rng, target.object_box, scale=0.05)
        else:
            human = grid_box(free_slot)
            obj = grid_box(free_slot + 1)
            free_slot += 2
        preds.append(
            PredictedInteraction(
                human_box=human,
                object_box=obj,
                object_label="thing",
                verb_phrase=rng.choice(RAND_PHRASES),
                score=rng.random(),
            )
        )
    return preds, gts
