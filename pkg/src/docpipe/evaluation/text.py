"""Edit-distance based fuzzy string similarity."""
from __future__ import annotations


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance: insertions, deletions, and substitutions."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    # Two-row dynamic program; keep the shorter string on the inner axis.
    if len(b) > len(a):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1]


def normalize_text(s: str, *, normalize_case: bool = True, trim_whitespace: bool = True) -> str:
    if trim_whitespace:
        s = s.strip()
    if normalize_case:
        s = s.lower()
    return s


def similarity(
    a: str,
    b: str,
    *,
    normalize_case: bool = True,
    trim_whitespace: bool = True,
) -> float:
    """Similarity in [0,1]: 1 - distance / max length, 1.0 when both empty."""
    a = normalize_text(a, normalize_case=normalize_case, trim_whitespace=trim_whitespace)
    b = normalize_text(b, normalize_case=normalize_case, trim_whitespace=trim_whitespace)
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(a, b) / longest
