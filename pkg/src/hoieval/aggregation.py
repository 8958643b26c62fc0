"""Pooling of per-sample triplets and k-selection for test-time compute."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import ValidationError
from .extraction import RawTriplet


def triplet_key(triplet: RawTriplet) -> str:
    return f"{triplet.subject}|{triplet.verb}|{triplet.object}"


@dataclass(frozen=True)
class TripletFrequency:
    """Counts over canonical triplet keys pooled across N generations."""

    counts: dict[str, int]
    triplets: dict[str, RawTriplet]
    num_samples: int

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValidationError(f"num_samples must be >= 1, got {self.num_samples}")


def pool(per_sample_triplets: list[list[RawTriplet]]) -> TripletFrequency:
    """Count triplet occurrences across all samples.

    Duplicates within one sample count toward the total: repetition is a
    salience signal.
    """
    counts: dict[str, int] = {}
    representatives: dict[str, RawTriplet] = {}
    for sample in per_sample_triplets:
        for triplet in sample:
            key = triplet_key(triplet)
            counts[key] = counts.get(key, 0) + 1
            representatives.setdefault(key, triplet)
    return TripletFrequency(
        counts=counts,
        triplets=representatives,
        num_samples=max(1, len(per_sample_triplets)),
    )


def _score(count: int, num_samples: int) -> float:
    # Within-sample duplicates can push count above N; clamp into (0, 1].
    return min(1.0, count / num_samples)


def select_topk(freq: TripletFrequency, k: int) -> list[tuple[RawTriplet, float]]:
    """The k most frequent triplets, ties broken by lexicographic key."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    ranked = sorted(freq.counts.items(), key=lambda item: (-item[1], item[0]))
    return [
        (freq.triplets[key], _score(count, freq.num_samples))
        for key, count in ranked[:k]
    ]


def select_sampling(freq: TripletFrequency, k: int, seed: int) -> list[tuple[RawTriplet, float]]:
    """Sample k distinct triplets without replacement, weighted by frequency.

    The empirical categorical distribution over counts is used directly (no
    parametric fit). The PRNG is a seeded Mersenne Twister via
    random.Random, which is stable across platforms and Python versions.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    rng = random.Random(seed)
    remaining = sorted(freq.counts.items())  # deterministic support order
    selected: list[tuple[RawTriplet, float]] = []
    while remaining and len(selected) < k:
        total = sum(count for _, count in remaining)
        pick = rng.random() * total
        cumulative = 0.0
        index = len(remaining) - 1
        for i, (_, count) in enumerate(remaining):
            cumulative += count
            if pick < cumulative:
                index = i
                break
        key, count = remaining.pop(index)
        selected.append((freq.triplets[key], _score(count, freq.num_samples)))
    return selected
