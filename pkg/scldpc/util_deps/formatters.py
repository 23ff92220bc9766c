"""Output formatting: CSV series, JSON records and markdown manifest tables."""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

from pydantic import BaseModel

from ..models import Manifest

logger = logging.getLogger(__name__)


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a header row and data rows (RFC-4180 quoting)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow(row)
            count += 1
    logger.debug("wrote %d rows to %s", count, path)
    return path


def write_json(path: Path | str, record: BaseModel | dict | list) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(record, BaseModel):
        data = record.model_dump(mode="json")
    else:
        data = record
    path.write_text(json.dumps(data, indent=2, default=str), encoding="utf-8")
    logger.debug("wrote %s", path)
    return path


def _fmt(value: float | None) -> str:
    if value is None:
        return "-"
    return f"{value:.4g}"


def format_manifest_table(manifest: Manifest) -> str:
    """Format a manifest as a markdown table, one row per checked quantity."""
    if not manifest.rows:
        return f"{manifest.target}: no checks"

    rows = ["| Quantity | Key | Computed | Published | Dev | Tol | OK |",
            "|----------|-----|----------|-----------|-----|-----|----|"]
    for row in manifest.rows:
        ok = "yes" if row.passed else "NO"
        rows.append(
            f"| {row.quantity} | {row.key} | {_fmt(row.computed)} | {_fmt(row.published)} "
            f"| {_fmt(row.deviation)} | {_fmt(row.tolerance)} | {ok} |"
        )

    failed = sum(not r.passed for r in manifest.rows)
    status = "PASS" if manifest.passed else f"FAIL ({failed} of {len(manifest.rows)})"
    return f"{manifest.target}: {status}\n\n" + "\n".join(rows)


def write_run_metadata(out_dir: Path | str, resolved: dict, version: str, seeds: dict | None = None) -> Path:
    """resolved_config.json: the inputs of a run, the package version and the seed manifest."""
    return write_json(Path(out_dir) / "resolved_config.json",
                      {"version": version, "config": resolved, "seeds": seeds or {}})
