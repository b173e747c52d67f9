"""
Versioned JSON documents and CSV tables for every artifact the toolkit writes.

A document is `{"schema": "emotion-toolkit/<kind>", "version": N, ...payload}`,
dumped with sorted keys and Python float repr, so reading a file and dumping it
again gives the same bytes.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import pandas as pd

from .config import canonical_json

SCHEMA_PREFIX = "emotion-toolkit"
SCHEMA_VERSION = 1


class SchemaMismatchError(ValueError):
    """Document kind or version differs from what the loader expects."""


def to_plain(value: Any) -> Any:
    """numpy scalars/arrays → built-in types so json can dump them."""
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Mapping):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    return value


def dumps_document(kind: str, payload: Mapping[str, Any], version: int = SCHEMA_VERSION) -> str:
    doc = {"schema": f"{SCHEMA_PREFIX}/{kind}", "version": version}
    for key, value in payload.items():
        if key in doc:
            raise ValueError(f"Payload key {key!r} is reserved")
        doc[key] = to_plain(value)
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_document(path: str | Path, kind: str, payload: Mapping[str, Any]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dumps_document(kind, payload), encoding="utf-8")
    return target


def loads_document(text: str, kind: str, source: str = "<string>") -> dict[str, Any]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaMismatchError(f"Not a JSON document: {source}") from exc
    if not isinstance(doc, dict):
        raise SchemaMismatchError(f"Document must be a JSON object: {source}")
    expected = f"{SCHEMA_PREFIX}/{kind}"
    if doc.get("schema") != expected:
        raise SchemaMismatchError(f"{source}: expected schema {expected!r}, found {doc.get('schema')!r}")
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaMismatchError(
            f"{source}: schema version {doc.get('version')!r} is not supported (expected {SCHEMA_VERSION})"
        )
    return doc


def read_document(path: str | Path, kind: str) -> dict[str, Any]:
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"Document not found: {source}")
    return loads_document(source.read_text(encoding="utf-8"), kind, str(source))


def content_id(payload: Any) -> str:
    """12 hex chars of sha256 over canonical payload JSON."""
    return hashlib.sha256(canonical_json(to_plain(payload)).encode("utf-8")).hexdigest()[:12]


def write_table(path: str | Path, frame: pd.DataFrame, meta: Mapping[str, Any] | None = None) -> Path:
    """CSV with leading `# key: value` lines; read back with `pd.read_csv(path, comment="#")`."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    header = "".join(f"# {key}: {value}\n" for key, value in sorted((meta or {}).items()))
    body = frame.to_csv(index=False, lineterminator="\n")
    target.write_text(header + body, encoding="utf-8")
    return target


__all__ = [
    "SCHEMA_VERSION",
    "SchemaMismatchError",
    "content_id",
    "dumps_document",
    "loads_document",
    "read_document",
    "to_plain",
    "write_document",
    "write_table",
]
