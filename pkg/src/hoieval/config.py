"""Run configuration and the manifest tying pipeline stages together."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .datamodel import Protocol
from .generation import PromptKind
from .metrics import EvalConfig
from .pairing import VisualPromptMode

TOOL_VERSION = "0.1.0"


@dataclass(frozen=True)
class PipelineConfig:
    """Declarative configuration for a full run; defaults are the protocol
    constants."""

    protocol: Protocol = Protocol.ANNOTATED
    similarity_thresholds: tuple[float, ...] = (0.6, 0.7, 0.8, 0.9, 0.95)
    iou_threshold: float = 0.5
    class_mode: str = "verb"
    detection_conf_threshold: float = 0.2
    detection_min_instances: int = 3
    detection_max_instances: int = 15
    detection_joint_pool: bool = True  # cap humans+objects jointly, not per class
    prompt_kind: PromptKind = PromptKind.DIRECT
    visual_mode: VisualPromptMode = VisualPromptMode.CROP
    temperature: float = 0.2
    num_generations: int = 64
    top_k: int = 10
    selection: str = "topk"  # "topk" or "sampling"
    max_tokens: int = 2048
    seed: int = 0
    include_human_human_pairs: bool = True
    max_in_flight: int = 4

    def eval_config(self) -> EvalConfig:
        return EvalConfig(
            similarity_thresholds=self.similarity_thresholds,
            iou_threshold=self.iou_threshold,
            protocol=self.protocol,
            class_mode=self.class_mode,
        )

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["protocol"] = self.protocol.value
        out["prompt_kind"] = self.prompt_kind.value
        out["visual_mode"] = self.visual_mode.value
        out["similarity_thresholds"] = list(self.similarity_thresholds)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        kwargs = dict(data)
        if "protocol" in kwargs:
            kwargs["protocol"] = Protocol(kwargs["protocol"])
        if "prompt_kind" in kwargs:
            kwargs["prompt_kind"] = PromptKind(kwargs["prompt_kind"])
        if "visual_mode" in kwargs:
            kwargs["visual_mode"] = VisualPromptMode(kwargs["visual_mode"])
        if "similarity_thresholds" in kwargs:
            kwargs["similarity_thresholds"] = tuple(kwargs["similarity_thresholds"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def config_hash(config: PipelineConfig) -> str:
    payload = json.dumps(config.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


@dataclass
class RunManifest:
    """Frozen effective config plus stage artifact bookkeeping."""

    config: PipelineConfig
    artifacts: dict[str, str] = field(default_factory=dict)
    completed_stages: list[str] = field(default_factory=list)
    tool_version: str = TOOL_VERSION

    def mark(self, stage: str, artifact_path: str | Path):
        self.artifacts[stage] = str(artifact_path)
        if stage not in self.completed_stages:
            self.completed_stages.append(stage)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "config_hash": config_hash(self.config),
            "artifacts": dict(self.artifacts),
            "completed_stages": list(self.completed_stages),
            "tool_version": self.tool_version,
        }

    def save(self, path: str | Path):
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        manifest = cls(config=PipelineConfig.from_dict(data["config"]))
        manifest.artifacts = dict(data.get("artifacts", {}))
        manifest.completed_stages = list(data.get("completed_stages", []))
        manifest.tool_version = data.get("tool_version", TOOL_VERSION)
        return manifest
