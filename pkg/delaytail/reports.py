"""Report serialization: canonical JSON, CSV point series and provenance."""

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__


def plain(value: Any) -> Any:
    """Convert dataclasses, tuples, sets and non-finite floats to JSON-safe values."""
    if is_dataclass(value) and not isinstance(value, type):
        return plain(asdict(value))
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(plain(v) for v in value)
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if hasattr(value, "item") and callable(value.item):  # numpy scalars
        return plain(value.item())
    return value


def canonical_json(data: Any) -> str:
    """Sorted-key JSON with a trailing newline; identical data gives identical bytes."""
    return json.dumps(plain(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def config_hash(raw: dict[str, Any]) -> str:
    """SHA-256 of the compact canonical form of a run config."""
    compact = json.dumps(plain(raw), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(compact.encode("utf-8")).hexdigest()


def with_provenance(report: Any, raw_config: dict[str, Any], command: str) -> dict[str, Any]:
    body = plain(report)
    if not isinstance(body, dict):
        body = {"result": body}
    body["command"] = command
    body["tool_version"] = __version__
    body["config_hash"] = config_hash(raw_config)
    return body


def rows_to_csv(rows: Iterable[dict[str, Any]], columns: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: plain(row.get(key)) for key in columns})
    return buffer.getvalue()


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
