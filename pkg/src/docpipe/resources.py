"""Locations of the bundled default configuration files."""
from __future__ import annotations

from pathlib import Path

_DATA_DIR = Path(__file__).parent / "data"


def default_classes_path() -> Path:
    return _DATA_DIR / "default_classes.json"


def default_rules_path() -> Path:
    return _DATA_DIR / "default_rules.json"


def default_price_table_path() -> Path:
    return _DATA_DIR / "price_table.json"
