"""Typed-value helpers shared by extraction, review, and evaluation.

Attribute values are plain JSON shapes: str, float/int, date strings, or
lists of flat records. Number parsing strips currency symbols and thousands
separators, which invoice text is full of.
"""
from __future__ import annotations

import re

from docpipe.errors import KindMismatch

_CURRENCY = "$€£¥₹"
_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def parse_number(value) -> float:
    """Coerce a numeric value or numeric-looking string to float.

    Raises KindMismatch when the value cannot be read as a number.
    """
    if isinstance(value, bool):
        raise KindMismatch(f"expected a number, got boolean {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        cleaned = value.strip().strip(_CURRENCY).strip()
        cleaned = cleaned.replace(",", "")
        if _NUMBER_RE.match(cleaned):
            return float(cleaned)
    raise KindMismatch(f"expected a number, got {value!r}")


def check_kind(value, value_kind: str, name: str):
    """Validate (and lightly coerce) a value against an attribute kind.

    Returns the canonical value: floats for numbers, strings for string/date,
    lists of dicts for list-of-records (records are validated by the caller
    against the nested schema).
    """
    if value is None:
        raise KindMismatch(f"{name}: value must not be null")
    if value_kind == "number":
        try:
            return parse_number(value)
        except KindMismatch as exc:
            raise KindMismatch(f"{name}: {exc}") from exc
    if value_kind in ("string", "date"):
        if not isinstance(value, str):
            raise KindMismatch(f"{name}: expected a string, got {type(value).__name__}")
        return value
    if value_kind == "list-of-records":
        if not isinstance(value, list) or any(not isinstance(item, dict) for item in value):
            raise KindMismatch(f"{name}: expected a list of records")
        return value
    raise KindMismatch(f"{name}: unknown value kind {value_kind!r}")
