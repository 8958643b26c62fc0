"""Triplet extraction from generated text and the graph pruning filters."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import httpx

from .datamodel import normalize_label
from .errors import TransportError
from .vocabulary import SimilarityProvider, normalize_verb_phrase


def _load_word_list(name: str) -> frozenset[str]:
    text = resources.files("hoieval.data").joinpath(name).read_text(encoding="utf-8")
    return frozenset(w for w in text.split() if w)


DETERMINERS = _load_word_list("determiners.txt")
PREPOSITIONS = _load_word_list("prepositions.txt")
PRONOUNS = _load_word_list("pronouns.txt")
AUXILIARIES = _load_word_list("auxiliaries.txt")

DEFAULT_VERB_BLACKLIST = frozenset(
    {
        "is", "are", "was", "were", "be", "been", "being",
        "has", "have", "had",
        "seems", "appears", "looks", "remains",
    }
)

DEFAULT_SUBJECT_LEXICON = frozenset(
    {"person", "man", "woman", "boy", "girl", "child", "human", "people", "guy", "lady",
     "men", "women", "boys", "girls", "children", "humans", "persons", "guys", "ladies"}
)


@dataclass(frozen=True)
class RawTriplet:
    subject: str
    verb: str
    object: str
    source: str = "rule_based"
    sample_index: int = 0


@dataclass(frozen=True)
class RefinementConfig:
    """Pruning rules applied to extracted triplets."""

    human_lexicon: frozenset[str] = DEFAULT_SUBJECT_LEXICON
    verb_blacklist: frozenset[str] = DEFAULT_VERB_BLACKLIST
    object_match_mode: str = "exact"  # "exact" or "similarity"
    object_similarity_threshold: float = 0.9
    similarity_provider: SimilarityProvider | None = None

    def __post_init__(self):
        if not self.human_lexicon:
            raise ValueError("human lexicon must be non-empty")
        if not self.verb_blacklist:
            raise ValueError("verb blacklist must be non-empty")
        if self.object_match_mode not in ("exact", "similarity"):
            raise ValueError(f"unknown object match mode: {self.object_match_mode}")
        if self.object_match_mode == "similarity" and self.similarity_provider is None:
            raise ValueError("similarity object matching needs a provider")


class T2GProvider:
    """Interface for text-to-graph backends."""

    def triplets(self, text: str) -> list[dict]:
        raise NotImplementedError


class HttpT2GProvider(T2GProvider):
    """Endpoint contract: POST {"text": ...} -> {"triplets": [{subject, predicate, object}]}."""

    def __init__(self, url: str, timeout: float = 60.0, client: httpx.Client | None = None):
        self.url = url
        self._client = client or httpx.Client(timeout=timeout)

    def triplets(self, text: str) -> list[dict]:
        try:
            response = self._client.post(self.url, json={"text": text})
            response.raise_for_status()
        except httpx.HTTPError as exc:
            digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
            raise TransportError(f"t2g endpoint failed (text sha256:{digest}): {exc}") from exc
        return response.json()["triplets"]


class MockT2GProvider(T2GProvider):
    """File- or dict-backed map of exact text -> triplet dicts (CI use)."""

    def __init__(self, mapping: dict[str, list[dict]]):
        self.mapping = mapping

    @classmethod
    def load(cls, path: str | Path) -> "MockT2GProvider":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def triplets(self, text: str) -> list[dict]:
        return self.mapping.get(text, [])


def extract_t2g(text: str, provider: T2GProvider, sample_index: int = 0) -> list[RawTriplet]:
    """Run the text-to-graph provider and normalize its triplets."""
    if not text.strip():
        return []
    out = []
    for item in provider.triplets(text):
        subject = normalize_label(str(item.get("subject", "")))
        verb = normalize_verb_phrase(str(item.get("predicate", "")))
        obj = normalize_label(str(item.get("object", "")))
        if subject and verb and obj:
            out.append(
                RawTriplet(subject=subject, verb=verb, object=obj, source="t2g",
                           sample_index=sample_index)
            )
    return out


_SENTENCE_SPLIT = re.compile(r"[.!?;\n]+")
_TOKEN = re.compile(r"[a-z]+(?:'[a-z]+)?")
_VERB_SUFFIXES = ("ing", "ed")


def _tokenize(sentence: str) -> list[str]:
    return _TOKEN.findall(sentence.lower())


def _is_wordy(token: str) -> bool:
    return (
        token not in DETERMINERS
        and token not in PREPOSITIONS
        and token not in AUXILIARIES
        and token != "and"
    )


def _looks_like_verb(token: str, after_aux: bool) -> bool:
    if token in DETERMINERS or token in PREPOSITIONS or token in PRONOUNS:
        return False
    if after_aux:
        return True
    if token.endswith(_VERB_SUFFIXES):
        return True
    # Third-person singular; plain plural nouns slip through occasionally,
    # which the downstream refinement gates absorb.
    return len(token) > 2 and token.endswith("s") and not token.endswith("ss")


def _parse_verb_object(tokens: list[str], start: int) -> tuple[str, str] | None:
    """Parse aux* verb particle? det* object from tokens[start:]."""
    i = start
    saw_aux = False
    while i < len(tokens) and tokens[i] in AUXILIARIES:
        saw_aux = True
        i += 1
    if i >= len(tokens):
        return None
    verb = tokens[i]
    if not _looks_like_verb(verb, saw_aux):
        return None
    i += 1
    if i < len(tokens) and tokens[i] in PREPOSITIONS and i + 1 < len(tokens):
        verb = f"{verb} {tokens[i]}"
        i += 1
    while i < len(tokens) and tokens[i] in DETERMINERS:
        i += 1
    if i >= len(tokens):
        return None
    obj = tokens[i]
    if not _is_wordy(obj) or obj in PRONOUNS:
        return None
    base_verb = verb.split(" ")[0]
    if base_verb in AUXILIARIES:
        return None
    return verb, obj


def _parse_clause(tokens: list[str], inherited_subject: str | None) -> list[tuple[str, str, str]]:
    # Full clause: det* subject aux* verb ... object
    i = 0
    while i < len(tokens) and tokens[i] in DETERMINERS:
        i += 1
    if i < len(tokens) and _is_wordy(tokens[i]):
        subject = tokens[i]
        parsed = _parse_verb_object(tokens, i + 1)
        if parsed is not None:
            verb, obj = parsed
            return [(subject, verb, obj)]
    # Verb-first fragment sharing the previous clause's subject.
    if inherited_subject is not None:
        parsed = _parse_verb_object(tokens, 0)
        if parsed is not None:
            verb, obj = parsed
            return [(inherited_subject, verb, obj)]
    return []


def extract_rule_based(text: str, sample_index: int = 0) -> list[RawTriplet]:
    """Heuristic subject-verb-object extraction over closed-class word lists.

    Conservative by design: sentences that do not fit the pattern yield
    nothing rather than a guess. Conjoined verb phrases ("... and pets a
    dog") inherit the clause subject.
    """
    triplets = []
    for sentence in _SENTENCE_SPLIT.split(text):
        tokens = _tokenize(sentence)
        if not tokens:
            continue
        segments: list[list[str]] = [[]]
        for token in tokens:
            if token == "and":
                segments.append([])
            else:
                segments[-1].append(token)
        subject = None
        for segment in segments:
            if not segment:
                continue
            for subj, verb, obj in _parse_clause(segment, subject):
                subject = subj
                if verb.split(" ")[0] in AUXILIARIES:
                    continue
                triplets.append(
                    RawTriplet(
                        subject=normalize_label(subj),
                        verb=normalize_verb_phrase(verb),
                        object=normalize_label(obj),
                        source="rule_based",
                        sample_index=sample_index,
                    )
                )
    return triplets


_PAREN_GROUP = re.compile(r"\(([^()]*)\)")


@dataclass
class StructuredParseDiagnostics:
    malformed: int = 0
    no_interaction: int = 0


def parse_structured(
    text: str,
    object_label: str = "",
    sample_index: int = 0,
    diagnostics: StructuredParseDiagnostics | None = None,
) -> list[RawTriplet]:
    """Lenient parse of "(subject, verb, object)" fragments.

    A "none" verb is an explicit no-interaction marker and yields nothing.
    Malformed fragments are skipped and counted in the diagnostics object
    when one is supplied. Never raises on any input.
    """
    del object_label  # prompt object recorded upstream; refinement checks it
    triplets = []
    for group in _PAREN_GROUP.findall(text):
        parts = [p.strip() for p in group.split(",")]
        if len(parts) != 3 or not all(parts):
            if diagnostics is not None:
                diagnostics.malformed += 1
            continue
        subject = normalize_label(parts[0])
        verb = normalize_verb_phrase(parts[1])
        obj = normalize_label(parts[2])
        if not (subject and verb and obj):
            if diagnostics is not None:
                diagnostics.malformed += 1
            continue
        if verb == "none":
            if diagnostics is not None:
                diagnostics.no_interaction += 1
            continue
        triplets.append(
            RawTriplet(subject=subject, verb=verb, object=obj, source="structured",
                       sample_index=sample_index)
        )
    return triplets


def _object_matches(candidate: str, prompt_object: str, config: RefinementConfig) -> bool:
    if config.object_match_mode == "exact":
        return candidate == prompt_object
    sim = config.similarity_provider.similarity(candidate, prompt_object)
    return sim >= config.object_similarity_threshold


def refine(
    triplets: list[RawTriplet],
    prompt_object: str,
    config: RefinementConfig = RefinementConfig(),
) -> list[RawTriplet]:
    """Prune triplets down to human-subject, non-stative, on-prompt ones.

    Pure order-preserving filter; duplicates are kept because downstream
    aggregation counts frequency.
    """
    prompt_object = normalize_label(prompt_object)
    kept = []
    for triplet in triplets:
        if triplet.subject not in config.human_lexicon:
            continue
        if triplet.verb in config.verb_blacklist:
            continue
        if not _object_matches(triplet.object, prompt_object, config):
            continue
        kept.append(triplet)
    return kept
