"""Engine configuration: one JSON file, environment-variable overrides.

Overrides (all optional): DOCPIPE_HITL (0/1), DOCPIPE_THRESHOLD,
DOCPIPE_MAX_ATTEMPTS, DOCPIPE_MODEL_ENDPOINT, DOCPIPE_MODEL_TOKEN.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from docpipe.assessment import DEFAULT_CONFIDENCE_THRESHOLD
from docpipe.errors import ParseError, ValidationError
from docpipe.retry import RetryPolicy

DEFAULT_STAGE_LIMITS = {
    "classifying": 2,
    "splitting": 2,
    "extracting": 2,
    "assessing": 2,
    "validating": 2,
}


@dataclass(frozen=True)
class EngineConfig:
    store_dir: str = "runs/default"
    class_config_path: str = ""
    rules_path: str = ""
    price_table_path: str = ""
    classifier_backend: str = "mock"
    extractor_backend: str = "mock"
    modality: str = "ocr"
    few_shot: bool = False
    hitl_enabled: bool = False
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    stage_limits: dict = field(default_factory=lambda: dict(DEFAULT_STAGE_LIMITS))
    request_timeout_s: float = 120.0
    model_endpoint: str = ""
    model_token: str = ""

    def __post_init__(self):
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValidationError(
                f"confidence_threshold: must be in [0,1], got {self.confidence_threshold}"
            )
        for stage, limit in self.stage_limits.items():
            if not isinstance(limit, int) or limit < 1:
                raise ValidationError(f"stage_limits.{stage}: must be an integer >= 1")

    def to_dict(self) -> dict:
        return {
            "store_dir": self.store_dir,
            "class_config_path": self.class_config_path,
            "rules_path": self.rules_path,
            "price_table_path": self.price_table_path,
            "classifier_backend": self.classifier_backend,
            "extractor_backend": self.extractor_backend,
            "modality": self.modality,
            "few_shot": self.few_shot,
            "hitl_enabled": self.hitl_enabled,
            "confidence_threshold": self.confidence_threshold,
            "retry": self.retry.to_dict(),
            "stage_limits": dict(self.stage_limits),
            "request_timeout_s": self.request_timeout_s,
            "model_endpoint": self.model_endpoint,
        }


def _apply_env(config: EngineConfig) -> EngineConfig:
    env = os.environ
    updates: dict = {}
    if "DOCPIPE_HITL" in env:
        updates["hitl_enabled"] = env["DOCPIPE_HITL"] not in ("", "0", "false", "False")
    if "DOCPIPE_THRESHOLD" in env:
        updates["confidence_threshold"] = float(env["DOCPIPE_THRESHOLD"])
    if "DOCPIPE_MAX_ATTEMPTS" in env:
        updates["retry"] = replace(config.retry, max_attempts=int(env["DOCPIPE_MAX_ATTEMPTS"]))
    if "DOCPIPE_MODEL_ENDPOINT" in env:
        updates["model_endpoint"] = env["DOCPIPE_MODEL_ENDPOINT"]
    if "DOCPIPE_MODEL_TOKEN" in env:
        updates["model_token"] = env["DOCPIPE_MODEL_TOKEN"]
    return replace(config, **updates) if updates else config


def load_engine_config(path: str | Path | None = None, **overrides) -> EngineConfig:
    """Load the engine config file (optional) and apply env overrides."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ParseError(f"engine config {path}: cannot read: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"engine config {path}: not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ParseError(f"engine config {path}: top level must be an object")
    retry = RetryPolicy.from_dict(data.get("retry", {})) if "retry" in data else RetryPolicy()
    stage_limits = dict(DEFAULT_STAGE_LIMITS)
    stage_limits.update(data.get("stage_limits", {}))
    stage_limits.update(overrides.pop("stage_limits", {}))
    known = {
        "store_dir", "class_config_path", "rules_path", "price_table_path",
        "classifier_backend", "extractor_backend", "modality", "few_shot",
        "hitl_enabled", "confidence_threshold", "request_timeout_s",
        "model_endpoint", "model_token",
    }
    kwargs = {k: v for k, v in data.items() if k in known}
    kwargs.update(overrides)
    config = EngineConfig(retry=retry, stage_limits=stage_limits, **kwargs)
    return _apply_env(config)
