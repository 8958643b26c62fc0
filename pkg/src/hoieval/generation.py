"""Prompt templating and provider-abstracted free-form generation."""

from __future__ import annotations

import base64
import enum
import io
import json
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx
from PIL import Image

from .errors import TransportError, ValidationError


class PromptKind(str, enum.Enum):
    DIRECT = "direct"
    COT = "cot"
    DESCRIPTIVE = "descriptive"
    STRUCTURED = "structured"


_TEMPLATES = {
    PromptKind.DIRECT: "What are the interactions between the person and the {obj}?",
    PromptKind.COT: (
        "What are the interactions between the person and the {obj}? Think step by step."
    ),
    PromptKind.DESCRIPTIVE: (
        "Describe all the interactions occurring between the person and the {obj}. "
        'If no interactions are being performed reply with "no interaction".'
    ),
    PromptKind.STRUCTURED: (
        "What are the interactions between the person and the {obj}? "
        "Answer the question with triplets of the form: (person, verb, {obj}). "
        'Examples: "(person, sit on, bike). (person, ride, bike)". '
        "If there are no interactions, answer with (person, none, {obj}). "
        "Do not write any other text."
    ),
}


def render_prompt(kind: PromptKind | str, object_label: str) -> str:
    """Substitute the object label into the chosen prompt template."""
    if not object_label:
        raise ValidationError("object label is empty")
    return _TEMPLATES[PromptKind(kind)].format(obj=object_label)


@dataclass(frozen=True)
class GenerationRequest:
    pair_id: str
    image: Image.Image | None
    prompt: str
    temperature: float = 0.2
    max_tokens: int = 2048
    num_samples: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.max_tokens <= 0:
            raise ValidationError(f"max_tokens must be positive, got {self.max_tokens}")
        if self.num_samples < 1:
            raise ValidationError(f"num_samples must be >= 1, got {self.num_samples}")
        if self.temperature < 0:
            raise ValidationError(f"temperature must be >= 0, got {self.temperature}")


@dataclass
class GenerationResponse:
    texts: list[str]
    model_id: str = ""
    latency_s: float = 0.0


class GenerationProvider:
    """Interface for anything that can answer a GenerationRequest."""

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        raise NotImplementedError


class MockProvider(GenerationProvider):
    """Deterministic provider backed by a pair_id -> candidate texts pool.

    Samples are drawn with replacement by a PRNG seeded from the request
    seed, so repeated runs reproduce the exact response stream.
    """

    def __init__(self, pool: dict[str, list[str]], default_seed: int = 0):
        self.pool = pool
        self.default_seed = default_seed

    @classmethod
    def load(cls, path: str | Path, default_seed: int = 0) -> "MockProvider":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh), default_seed=default_seed)

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        candidates = self.pool.get(request.pair_id, [])
        if not candidates:
            return GenerationResponse(texts=[""] * request.num_samples, model_id="mock")
        seed = request.seed if request.seed is not None else self.default_seed
        # Seed mixes in the pair id so distinct pairs do not share a stream.
        rng = random.Random(f"{seed}:{request.pair_id}")
        texts = [candidates[rng.randrange(len(candidates))] for _ in range(request.num_samples)]
        return GenerationResponse(texts=texts, model_id="mock")


def _encode_image_png_base64(image: Image.Image) -> str:
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class ChatCompletionsProvider(GenerationProvider):
    """Chat-completions HTTP transport with retry/backoff.

    One user message carries the base64 PNG image part and the text part.
    Endpoints that ignore n>1 are handled by issuing independent calls.
    """

    def __init__(
        self,
        url: str,
        model: str,
        api_key: str | None = None,
        max_retries: int = 3,
        backoff_base_s: float = 0.5,
        supports_n: bool = True,
        timeout: float = 120.0,
        client: httpx.Client | None = None,
    ):
        self.url = url
        self.model = model
        self.api_key = api_key
        self.max_retries = max_retries
        self.backoff_base_s = backoff_base_s
        self.supports_n = supports_n
        self._client = client or httpx.Client(timeout=timeout)

    def _messages(self, request: GenerationRequest) -> list[dict]:
        content: list[dict] = []
        if request.image is not None:
            encoded = _encode_image_png_base64(request.image)
            content.append(
                {
                    "type": "image_url",
                    "image_url": {"url": f"data:image/png;base64,{encoded}"},
                }
            )
        content.append({"type": "text", "text": request.prompt})
        return [{"role": "user", "content": content}]

    def _post(self, payload: dict, pair_id: str) -> dict:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error = None
        for attempt in range(self.max_retries + 1):
            try:
                response = self._client.post(self.url, json=payload, headers=headers)
                response.raise_for_status()
                return response.json()
            except httpx.HTTPError as exc:
                last_error = exc
                if attempt < self.max_retries:
                    time.sleep(self.backoff_base_s * (2**attempt))
        raise TransportError(f"generation failed for pair {pair_id}: {last_error}")

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        start = time.monotonic()
        messages = self._messages(request)
        base_payload = {
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        texts: list[str] = []
        if self.supports_n:
            payload = dict(base_payload, n=request.num_samples)
            data = self._post(payload, request.pair_id)
            for choice in data.get("choices", []):
                texts.append((choice.get("message") or {}).get("content") or "")
        else:
            for _ in range(request.num_samples):
                data = self._post(base_payload, request.pair_id)
                choices = data.get("choices", [])
                text = (choices[0].get("message") or {}).get("content") if choices else ""
                texts.append(text or "")
        # Refusals and short replies arrive as-is; missing slots become empty
        # strings so downstream extraction simply finds nothing.
        while len(texts) < request.num_samples:
            texts.append("")
        texts = texts[: request.num_samples]
        return GenerationResponse(
            texts=texts,
            model_id=self.model,
            latency_s=time.monotonic() - start,
        )


@dataclass
class ConcurrencyGauge:
    """Test hook: tracks current and peak in-flight provider calls."""

    current: int = 0
    peak: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __enter__(self):
        with self._lock:
            self.current += 1
            self.peak = max(self.peak, self.current)
        return self

    def __exit__(self, *exc):
        with self._lock:
            self.current -= 1
        return False


def generate_batch(
    requests: list[GenerationRequest],
    provider: GenerationProvider,
    max_in_flight: int = 4,
    gauge: ConcurrencyGauge | None = None,
) -> list[GenerationResponse]:
    """Run requests concurrently with a bounded in-flight cap.

    Responses are returned in request order regardless of completion order.
    """
    from concurrent.futures import ThreadPoolExecutor

    if max_in_flight < 1:
        raise ValidationError("max_in_flight must be >= 1")
    semaphore = threading.Semaphore(max_in_flight)

    def run(request: GenerationRequest) -> GenerationResponse:
        with semaphore:
            if gauge is not None:
                with gauge:
                    return provider.generate(request)
            return provider.generate(request)

    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(run, requests))
