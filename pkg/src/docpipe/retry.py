"""Retry policy: bounded attempts with jittered exponential backoff."""
from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass(frozen=True)
class RetryPolicy:
    """Delay before the k-th retry is base * factor^(k-1), +/- jitter."""

    max_attempts: int = 3
    base_delay: float = 1.0
    factor: float = 2.0
    jitter: float = 0.1

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be >= 1, got {self.max_attempts}")
        if self.base_delay < 0 or self.factor < 0 or not 0 <= self.jitter < 1:
            raise ValueError("delays must be nonnegative and jitter in [0,1)")

    def delay(self, retry_number: int, rng: random.Random | None = None) -> float:
        """Delay in seconds before retry k (1-based: first retry is k=1)."""
        if retry_number < 1:
            raise ValueError(f"retry_number must be >= 1, got {retry_number}")
        nominal = self.base_delay * self.factor ** (retry_number - 1)
        spread = (rng or random).uniform(-self.jitter, self.jitter)
        return nominal * (1.0 + spread)

    def bounds(self, retry_number: int) -> tuple[float, float]:
        """Inclusive [low, high] jitter bounds for retry k."""
        nominal = self.base_delay * self.factor ** (retry_number - 1)
        return nominal * (1.0 - self.jitter), nominal * (1.0 + self.jitter)

    def to_dict(self) -> dict:
        return {
            "max_attempts": self.max_attempts,
            "base_delay": self.base_delay,
            "factor": self.factor,
            "jitter": self.jitter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RetryPolicy":
        return cls(
            max_attempts=int(d.get("max_attempts", 3)),
            base_delay=float(d.get("base_delay", 1.0)),
            factor=float(d.get("factor", 2.0)),
            jitter=float(d.get("jitter", 0.1)),
        )
