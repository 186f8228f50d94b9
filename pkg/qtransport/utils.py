import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
from pydantic import BaseModel, TypeAdapter, ValidationError

from qtransport.exceptions import InputError

logger = logging.getLogger('main_logger')


def _to_builtin(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (range, tuple)):
        return list(obj)
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def dump_json(data) -> str:
    """Sorted keys, 2-space indent and a trailing newline: equal data gives equal bytes."""
    return json.dumps(data, sort_keys=True, indent=2, default=_to_builtin) + '\n'


def _is_stdout(path) -> bool:
    return path is None or str(path) == '-'


def _ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def read_json(path):
    try:
        with open(path, encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError:
        raise InputError(f"{path}: file not found")
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")


def write_json(path, data) -> None:
    text = dump_json(data)
    if _is_stdout(path):
        sys.stdout.write(text)
        return
    _ensure_parent(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)
    logger.info(f"Wrote {path}")


def write_csv(path, header, rows) -> None:
    """Floats are written with repr precision, so values read back unchanged."""
    if _is_stdout(path):
        writer = csv.writer(sys.stdout, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
        return
    _ensure_parent(path)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"Wrote {path}")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline='', encoding='utf-8') as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


def sidecar_path(path, suffix: str) -> Path:
    """model.json + 'layout.json' -> model.layout.json."""
    path = Path(path)
    return path.with_name(f"{path.stem}.{suffix}")


def validation_problems(exc: ValidationError) -> list[str]:
    problems = []
    for err in exc.errors():
        field = '.'.join(str(part) for part in err['loc']) or '<document>'
        problems.append(f"{field}: {err['msg']}")
    return problems


def parse_document(schema, data, what: str):
    """Validate ``data`` against a pydantic model class or TypeAdapter; failures become InputError."""
    try:
        if isinstance(schema, TypeAdapter):
            return schema.validate_python(data)
        if isinstance(schema, type) and issubclass(schema, BaseModel):
            return schema.model_validate(data)
        raise TypeError(f"unsupported schema {schema!r}")
    except ValidationError as e:
        raise InputError(f"invalid {what}", validation_problems(e))
