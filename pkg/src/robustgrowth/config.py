"""Configuration files, bundled presets and JSON schemas.

Configurations are JSON with ``"schema": 1``. A bundled preset can be named
instead of given as a path. Every document the command line writes is
validated against a schema shipped with the package.
"""

import json
import math
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ValidationError

SCHEMA_VERSION = 1


def _package_dir(name):
    return resources.files("robustgrowth").joinpath(name)


def preset_names():
    """Names of the bundled preset configurations."""
    return sorted(p.name[:-5] for p in _package_dir("presets").iterdir() if p.name.endswith(".json"))


def load_schema(name):
    return json.loads(_package_dir("schemas").joinpath(f"{name}.schema.json").read_text())


def validate(document, schema_name):
    """Validate against a bundled schema; errors name the offending key path.

    Raises
    ------
    ValidationError
    """
    schema = load_schema(schema_name)
    validator = jsonschema.Draft7Validator(schema)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for err in errors:
            path = ".".join(str(p) for p in err.absolute_path) or "<root>"
            lines.append(f"{path}: {err.message}")
        raise ValidationError("; ".join(lines))
    return document


def load_config(path_or_name):
    """Read and validate a configuration file or a bundled preset by name."""
    p = Path(path_or_name)
    if p.suffix == ".json" and p.exists():
        text = p.read_text()
    elif p.suffix == "" and str(path_or_name) in preset_names():
        text = _package_dir("presets").joinpath(f"{path_or_name}.json").read_text()
    elif p.suffix == ".json" and p.stem in preset_names() and not p.exists():
        text = _package_dir("presets").joinpath(p.name).read_text()
    else:
        raise ValidationError(f"no configuration file or preset named {path_or_name!r}")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValidationError(f"invalid JSON: {err}") from err
    return validate(cfg, "config")


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become the strings ``inf``, ``-inf``, ``nan``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(document):
    """Deterministic JSON text (sorted keys, fixed indentation, trailing newline)."""
    return json.dumps(to_jsonable(document), sort_keys=True, indent=2) + "\n"


def write_json(path, document, schema_name=None):
    doc = to_jsonable(document)
    if schema_name is not None:
        validate(doc, schema_name)
    Path(path).write_text(dumps(doc))
    return doc
