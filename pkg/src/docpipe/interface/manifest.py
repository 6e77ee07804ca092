"""Manifest loading: document sources and evaluation baselines, CSV or JSON."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from docpipe.errors import ManifestError


@dataclass(frozen=True)
class ManifestRow:
    document_path: str
    ground_truth_path: str | None = None
    row: int = 0


@dataclass(frozen=True)
class Manifest:
    rows: tuple[ManifestRow, ...] = ()
    config_ref: str | None = None
    base_dir: str = "."

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p


def _load_json_manifest(path: Path) -> Manifest:
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("documents"), list):
        raise ManifestError(f"manifest {path}: expected {{\"documents\": [...]}}")
    rows = []
    for i, raw in enumerate(data["documents"], start=1):
        if not isinstance(raw, dict) or not raw.get("document_path"):
            raise ManifestError(f"manifest row {i}: document_path required", row=i)
        rows.append(
            ManifestRow(
                document_path=raw["document_path"],
                ground_truth_path=raw.get("ground_truth_path") or None,
                row=i,
            )
        )
    config_ref = data.get("config_ref") or None
    return Manifest(rows=tuple(rows), config_ref=config_ref, base_dir=str(path.parent))


def _load_csv_manifest(path: Path) -> Manifest:
    rows = []
    config_refs = set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "document_path" not in reader.fieldnames:
            raise ManifestError(f"manifest {path}: needs a document_path column")
        for i, raw in enumerate(reader, start=1):
            doc = (raw.get("document_path") or "").strip()
            if not doc:
                raise ManifestError(f"manifest row {i}: document_path required", row=i)
            gt = (raw.get("ground_truth_path") or "").strip() or None
            ref = (raw.get("config_ref") or "").strip()
            if ref:
                config_refs.add(ref)
            rows.append(ManifestRow(document_path=doc, ground_truth_path=gt, row=i))
    if len(config_refs) > 1:
        raise ManifestError(f"manifest {path}: at most one config_ref allowed, got {sorted(config_refs)}")
    return Manifest(
        rows=tuple(rows),
        config_ref=next(iter(config_refs), None),
        base_dir=str(path.parent),
    )


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest {path}: no such file")
    if path.suffix.lower() == ".csv":
        return _load_csv_manifest(path)
    return _load_json_manifest(path)
