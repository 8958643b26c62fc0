"""Pipeline configuration, hashing, and the run manifest."""

import json

import pytest

from hoieval.config import PipelineConfig, RunManifest, config_hash
from hoieval.datamodel import Protocol
from hoieval.generation import PromptKind
from hoieval.pairing import VisualPromptMode


class TestPipelineConfig:
    def test_round_trip(self, tmp_path):
        config = PipelineConfig(num_generations=8, selection="sampling", seed=3)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config.to_dict()))
        assert PipelineConfig.load(path) == config

    def test_enums_serialized_as_strings(self):
        data = PipelineConfig().to_dict()
        assert data["protocol"] == "annotated"
        assert data["prompt_kind"] == "direct"
        assert data["visual_mode"] == "crop"
        restored = PipelineConfig.from_dict(data)
        assert restored.protocol is Protocol.ANNOTATED
        assert restored.prompt_kind is PromptKind.DIRECT
        assert restored.visual_mode is VisualPromptMode.CROP

    def test_eval_config_projection(self):
        config = PipelineConfig(similarity_thresholds=(0.5, 0.9), class_mode="hoi")
        eval_config = config.eval_config()
        assert eval_config.similarity_thresholds == (0.5, 0.9)
        assert eval_config.class_mode == "hoi"

    def test_hash_stable_and_sensitive(self):
        a = PipelineConfig()
        assert config_hash(a) == config_hash(PipelineConfig())
        assert config_hash(a) != config_hash(PipelineConfig(seed=1))


class TestRunManifest:
    def test_mark_and_round_trip(self, tmp_path):
        manifest = RunManifest(config=PipelineConfig(seed=5))
        manifest.mark("pairs", tmp_path / "pairs.jsonl")
        manifest.mark("generate", tmp_path / "transcripts.jsonl")
        manifest.mark("pairs", tmp_path / "pairs2.jsonl")  # re-mark keeps one entry
        path = tmp_path / "manifest.json"
        manifest.save(path)
        loaded = RunManifest.load(path)
        assert loaded.config == manifest.config
        assert loaded.completed_stages == ["pairs", "generate"]
        assert loaded.artifacts["pairs"].endswith("pairs2.jsonl")

    def test_manifest_embeds_config_hash(self, tmp_path):
        manifest = RunManifest(config=PipelineConfig())
        path = tmp_path / "manifest.json"
        manifest.save(path)
        data = json.loads(path.read_text())
        assert data["config_hash"] == config_hash(PipelineConfig())
        assert data["tool_version"]
