"""Malicious-package labels from OSV-format advisory records."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from rankaudit.model import Label, normalize_name

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OsvRecord:
    advisory_id: str
    name: str
    ecosystem: str
    summary: str = ""


def parse_advisory(doc: dict) -> list[OsvRecord]:
    """One record per affected package; raises ValueError if ``doc`` is not an advisory."""
    if not isinstance(doc, dict) or not isinstance(doc.get("id"), str):
        raise ValueError("missing advisory id")
    affected = doc.get("affected")
    if not isinstance(affected, list) or not affected:
        raise ValueError("missing affected packages")
    records = []
    for item in affected:
        package = (item or {}).get("package") or {}
        if not package.get("name") or not package.get("ecosystem"):
            continue
        records.append(
            OsvRecord(
                advisory_id=doc["id"],
                name=normalize_name(package["name"]),
                ecosystem=package["ecosystem"],
                summary=doc.get("summary") or "",
            )
        )
    if not records:
        raise ValueError("no usable affected package")
    return records


def read_osv_records(directory: str | Path) -> tuple[list[OsvRecord], int]:
    """Parse every ``*.json`` file below ``directory``; returns (records, skipped files)."""
    root = Path(directory)
    if not root.is_dir():
        raise NotADirectoryError(f"not a directory: {root}")
    records: list[OsvRecord] = []
    skipped = 0
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        try:
            if path.suffix != ".json":
                raise ValueError("not a JSON file")
            records.extend(parse_advisory(json.loads(path.read_text(encoding="utf-8"))))
        except (ValueError, UnicodeDecodeError) as exc:
            skipped += 1
            logger.debug("skipping %s: %s", path, exc)
    return records, skipped


def load_osv_labels(directory: str | Path, ecosystem: str = "PyPI") -> list[Label]:
    records, skipped = read_osv_records(directory)
    if skipped:
        logger.warning("skipped %d non-advisory files under %s", skipped, directory)
    labels: dict[str, Label] = {}
    for rec in records:
        if rec.ecosystem.lower() != ecosystem.lower() or rec.name in labels:
            continue
        labels[rec.name] = Label(rec.name, "malicious", "osv", rec.advisory_id)
    return list(labels.values())
