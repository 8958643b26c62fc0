"""Evaluation vocabularies, the verb pre-filter, and semantic similarity."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import httpx
import numpy as np

from .datamodel import normalize_label
from .errors import PhraseLookupError, TransportError, ValidationError

logger = logging.getLogger(__name__)

VERB_FILTER_TEMPLATE = "Can a person {verb} an object? Reply with either yes or no"


def normalize_verb_phrase(raw: str) -> str:
    """Same normalization as object labels; verbs keep their inflection."""
    return normalize_label(raw)


@dataclass(frozen=True)
class VerbVocabulary:
    """Ordered evaluation verb set; duplicates (post-normalization) rejected."""

    verbs: tuple[str, ...]
    source: str = ""

    def __post_init__(self):
        if not self.verbs:
            raise ValidationError("vocabulary is empty")
        seen = {}
        for i, verb in enumerate(self.verbs):
            norm = normalize_verb_phrase(verb)
            if norm != verb:
                raise ValidationError(f"vocabulary verb not normalized: {verb!r}")
            if norm in seen:
                raise ValidationError(
                    f"duplicate vocabulary verb {norm!r} at indices {seen[norm]} and {i}"
                )
            seen[norm] = i

    def __len__(self) -> int:
        return len(self.verbs)

    def index_of(self, verb: str) -> int:
        return self.verbs.index(verb)

    @classmethod
    def from_phrases(cls, phrases: Sequence[str], source: str = "") -> "VerbVocabulary":
        return cls(tuple(normalize_verb_phrase(p) for p in phrases), source=source)

    @classmethod
    def load(cls, path: str | Path, source: str | None = None) -> "VerbVocabulary":
        """Newline-delimited verb phrase file."""
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        phrases = [line for line in (l.strip() for l in lines) if line]
        return cls.from_phrases(phrases, source=source or str(path))


@dataclass(frozen=True)
class CoOccurrenceMatrix:
    """Boolean object x verb co-occurrence matrix (data-only)."""

    objects: tuple[str, ...]
    verbs: tuple[str, ...]
    matrix: tuple[tuple[bool, ...], ...]

    def __post_init__(self):
        if len(self.matrix) != len(self.objects):
            raise ValidationError("co-occurrence rows do not match object list")
        for row in self.matrix:
            if len(row) != len(self.verbs):
                raise ValidationError("co-occurrence columns do not match verb list")

    def allows(self, object_label: str, verb: str) -> bool:
        return self.matrix[self.objects.index(object_label)][self.verbs.index(verb)]


class SimilarityProvider:
    """Phrase -> unit embedding with a thread-safe cache.

    Subclasses implement _embed_batch; similarity is always the cosine of
    unit-normalized vectors.
    """

    def __init__(self):
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def _embed_batch(self, phrases: list[str]) -> list[np.ndarray]:
        raise NotImplementedError

    def embedding(self, phrase: str) -> np.ndarray:
        if not phrase:
            raise ValidationError("cannot embed an empty phrase")
        with self._lock:
            cached = self._cache.get(phrase)
        if cached is not None:
            return cached
        vec = np.asarray(self._embed_batch([phrase])[0], dtype=np.float64)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValidationError(f"zero embedding vector for phrase {phrase!r}")
        unit = vec / norm
        with self._lock:
            self._cache[phrase] = unit
        return unit

    def similarity(self, a: str, b: str) -> float:
        """Cosine similarity in [-1, 1] of the two phrases' embeddings."""
        sim = float(np.dot(self.embedding(a), self.embedding(b)))
        return max(-1.0, min(1.0, sim))


class FileVectorProvider(SimilarityProvider):
    """TSV-backed embeddings: phrase TAB space-separated floats per line."""

    def __init__(self, path: str | Path):
        super().__init__()
        self._vectors: dict[str, np.ndarray] = {}
        dim = None
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            phrase, _, rest = line.partition("\t")
            vec = np.array([float(x) for x in rest.split()], dtype=np.float64)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise ValidationError(f"inconsistent vector dimension for {phrase!r}")
            self._vectors[phrase] = vec
        self.dimension = dim or 0

    def _embed_batch(self, phrases: list[str]) -> list[np.ndarray]:
        out = []
        for phrase in phrases:
            if phrase not in self._vectors:
                raise PhraseLookupError(phrase)
            out.append(self._vectors[phrase])
        return out


class HttpEmbeddingProvider(SimilarityProvider):
    """Remote embedding endpoint: POST {"inputs": [...]} -> {"vectors": [[...]]}."""

    def __init__(self, url: str, timeout: float = 30.0, client: httpx.Client | None = None):
        super().__init__()
        self.url = url
        self._client = client or httpx.Client(timeout=timeout)

    def _embed_batch(self, phrases: list[str]) -> list[np.ndarray]:
        try:
            response = self._client.post(self.url, json={"inputs": phrases})
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise TransportError(f"embedding endpoint failed: {exc}") from exc
        vectors = response.json()["vectors"]
        return [np.asarray(v, dtype=np.float64) for v in vectors]


class IdentityStringSimilarity(SimilarityProvider):
    """sim(a, b) = 1 iff the strings are equal, else 0.

    Reduces the open-vocabulary metrics to their closed-vocabulary form.
    """

    def embedding(self, phrase: str):  # pragma: no cover - not meaningful here
        raise NotImplementedError("identity similarity has no embedding space")

    def similarity(self, a: str, b: str) -> float:
        return 1.0 if a == b else 0.0


def map_to_vocabulary(
    pred_verb: str,
    vocab: VerbVocabulary,
    tau: float,
    provider: SimilarityProvider,
) -> list[tuple[int, float]]:
    """Expand a free-form verb to every vocabulary verb with sim >= tau.

    Returns (verb index, similarity) pairs in vocabulary order; empty when no
    vocabulary verb reaches the threshold.
    """
    if not (0.0 < tau <= 1.0):
        raise ValidationError(f"tau must be in (0, 1], got {tau}")
    matches = []
    for idx, verb in enumerate(vocab.verbs):
        sim = provider.similarity(pred_verb, verb)
        if sim >= tau:
            matches.append((idx, sim))
    return matches


def filter_wordnet_verbs(
    candidate_verbs: Sequence[str],
    yes_no_provider: Callable[[str], str],
    source: str = "filtered",
) -> VerbVocabulary | None:
    """Keep candidate verbs the provider affirms can act on an object.

    Each verb is posed as a templated yes/no question; replies are matched by
    case-insensitive prefix. Anything that is neither yes nor no marks the
    verb undecided, which excludes it with a warning. Returns None for an
    empty candidate list.
    """
    if not candidate_verbs:
        logger.warning("empty candidate verb list; nothing to filter")
        return None
    kept = []
    for verb in candidate_verbs:
        norm = normalize_verb_phrase(verb)
        reply = yes_no_provider(VERB_FILTER_TEMPLATE.format(verb=norm)).strip().lower()
        if reply.startswith("yes"):
            kept.append(norm)
        elif not reply.startswith("no"):
            logger.warning("undecided verb %r (reply: %r); excluded", norm, reply)
    if not kept:
        logger.warning("verb filter rejected every candidate")
        return None
    return VerbVocabulary.from_phrases(kept, source=source)
