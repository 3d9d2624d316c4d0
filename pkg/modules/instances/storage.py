"""
CGA Planner - Instance Files

Schema-versioned JSON instance documents. Unknown fields are rejected
and sparse triplets keep their entry order, so a written instance reads
back structurally identical.
"""

import logging
from pathlib import Path

from core.config import settings
from core.documents import dump_document, load_document, parse_model, write_document
from modules.model.schemas import Instance

logger = logging.getLogger(__name__)

INSTANCE_KIND = "instance"


def dumps_instance(instance: Instance) -> str:
    return dump_document(INSTANCE_KIND, settings.INSTANCE_SCHEMA_VERSION, instance.model_dump(mode="json"))


def loads_instance(text: str) -> Instance:
    payload = load_document(text, INSTANCE_KIND, settings.INSTANCE_SCHEMA_VERSION)
    return parse_model(Instance, payload, text=text, kind=INSTANCE_KIND)


def write_instance(instance: Instance, path: Path) -> Path:
    """Write ``instance`` to ``path``; returns the path."""
    path = write_document(path, INSTANCE_KIND, settings.INSTANCE_SCHEMA_VERSION, instance.model_dump(mode="json"))
    logger.info(f"Instance '{instance.name}' written to {path}")
    return path


def read_instance(path: Path) -> Instance:
    """
    Read an instance document.

    Raises:
        InstanceFormatError: malformed document, missing section or unknown field
        SchemaVersionError: unsupported schema version
    """
    text = Path(path).read_text(encoding="utf-8")
    return loads_instance(text)
