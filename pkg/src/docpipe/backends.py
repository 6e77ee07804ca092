"""Backend registry: maps configured backend names to implementations."""
from __future__ import annotations

from docpipe.config import EngineConfig
from docpipe.errors import ValidationError
from docpipe.extraction import (
    AlwaysProseBackend,
    HttpExtractorBackend,
    MockExtractorBackend,
)
from docpipe.segmentation import MockClassifierBackend

EXTRACTOR_BACKENDS = ("mock", "always_prose", "http")
CLASSIFIER_BACKENDS = ("mock",)


def make_extractor_backend(name: str, config: EngineConfig):
    if name == "mock":
        return MockExtractorBackend()
    if name == "always_prose":
        return AlwaysProseBackend()
    if name == "http":
        if not config.model_endpoint:
            raise ValidationError(
                "http backend requires model_endpoint (config or DOCPIPE_MODEL_ENDPOINT)"
            )
        return HttpExtractorBackend(
            endpoint=config.model_endpoint,
            token=config.model_token,
            timeout_s=config.request_timeout_s,
        )
    raise ValidationError(f"unknown extractor backend {name!r}; known: {EXTRACTOR_BACKENDS}")


def make_classifier_backend(name: str, config: EngineConfig):
    if name == "mock":
        return MockClassifierBackend()
    raise ValidationError(f"unknown classifier backend {name!r}; known: {CLASSIFIER_BACKENDS}")
