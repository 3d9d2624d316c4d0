"""
CGA Planner - Structured Documents

Schema-versioned JSON envelopes shared by instance files, cut pools,
partitions and reports.
"""

import json
import re
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar

from pydantic import BaseModel, ValidationError

from core.exceptions import InstanceFormatError, SchemaVersionError

ModelT = TypeVar("ModelT", bound=BaseModel)

_KEY_PATTERN = re.compile(r'"([A-Za-z_][A-Za-z0-9_]*)"\s*:')


def dump_document(kind: str, version: int, payload: Dict[str, Any]) -> str:
    """Render ``payload`` inside a ``{schema_version, kind, <kind>}`` envelope."""
    document = {"schema_version": version, "kind": kind, kind: payload}
    return json.dumps(document, indent=2, allow_nan=False) + "\n"


def write_document(path: Path, kind: str, version: int, payload: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_document(kind, version, payload), encoding="utf-8")
    return path


def _line_of(text: str, position: int) -> int:
    return text.count("\n", 0, position) + 1


def _line_of_key(text: str, key: str) -> Optional[int]:
    position = text.find(f'"{key}"')
    return _line_of(text, position) if position >= 0 else None


def load_document(text: str, kind: str, version: int) -> Dict[str, Any]:
    """
    Parse an envelope and return its payload.

    Args:
        text: document text
        kind: expected document kind
        version: supported schema version

    Returns:
        The payload dictionary

    Raises:
        InstanceFormatError: malformed JSON, wrong kind or missing payload
        SchemaVersionError: unsupported schema version
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        keys = _KEY_PATTERN.findall(text[: e.pos])
        section = keys[-1] if keys else None
        detail = "unexpected end of document" if e.pos >= len(text.rstrip()) else e.msg
        if section:
            detail = f"{detail} while reading section '{section}'"
        raise InstanceFormatError(f"Malformed {kind} document: {detail}", line=e.lineno, field=section) from e

    if not isinstance(document, dict):
        raise InstanceFormatError(f"Malformed {kind} document: top level must be an object", line=1)
    if "schema_version" not in document:
        raise InstanceFormatError(f"Malformed {kind} document: missing schema version", field="schema_version")
    found = document["schema_version"]
    if found != version:
        raise SchemaVersionError(
            f"Unsupported {kind} schema version {found!r} (expected {version})",
            line=_line_of_key(text, "schema_version"),
            field="schema_version",
        )
    if document.get("kind", kind) != kind:
        raise InstanceFormatError(
            f"Document kind {document['kind']!r} is not '{kind}'", line=_line_of_key(text, "kind"), field="kind"
        )
    unknown = sorted(set(document) - {"schema_version", "kind", kind})
    if unknown:
        raise InstanceFormatError(
            f"Unknown top-level field '{unknown[0]}'", line=_line_of_key(text, unknown[0]), field=unknown[0]
        )
    if kind not in document:
        raise InstanceFormatError(f"Malformed {kind} document: missing section '{kind}'", field=kind)
    return document[kind]


def parse_model(model: Type[ModelT], payload: Any, text: str = "", kind: str = "document") -> ModelT:
    """Strictly validate ``payload`` into ``model``; errors name the offending field."""
    try:
        return model.model_validate(payload)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        key = next((str(part) for part in reversed(first["loc"]) if isinstance(part, str)), None)
        line = _line_of_key(text, key) if (text and key) else None
        if first["type"] == "extra_forbidden":
            message = f"Unknown field '{location}' in {kind}"
        elif first["type"] == "missing":
            message = f"Missing field '{location}' in {kind}"
        else:
            message = f"Invalid {kind}: {location}: {first['msg']}"
        raise InstanceFormatError(message, line=line, field=location) from e
