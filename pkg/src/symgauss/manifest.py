"""Run manifests, output schemas and the on-disk result cache."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import mpmath
import numba
import numpy as np
import scipy
from filelock import FileLock

from . import __version__
from .montecarlo import RNG_NAME

SCHEMA_VERSION = 1
CACHE_ENV = "SYMGAUSS_CACHE_DIR"


def versions() -> dict:
    return {
        "symgauss": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "mpmath": mpmath.__version__,
        "numba": numba.__version__,
        "rng": RNG_NAME,
    }


def _normalize(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, dict):
        return {str(k): _normalize(v) for k, v in sorted(value.items())}
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    if hasattr(value, "value"):  # enums
        return value.value
    return value


def config_hash(command: str, config: dict) -> str:
    """Content hash of a command and its normalized configuration."""
    blob = json.dumps({"command": command, "config": _normalize(config)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int | None = None
    tolerances: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    versions: dict = field(default_factory=versions)
    timestamp: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat())
    config: dict = field(default_factory=dict)

    @classmethod
    def create(cls, command: str, config: dict, seed=None, tolerances=None, grid=None) -> "RunManifest":
        return cls(command, config_hash(command, config), seed, dict(tolerances or {}), dict(grid or {}),
                   config={k: _normalize(v) for k, v in config.items()})

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, **asdict(self)}


_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "command", "config_hash", "seed", "tolerances", "versions", "timestamp"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"type": "string"},
        "config_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "seed": {"type": ["integer", "null"]},
        "tolerances": {"type": "object", "additionalProperties": _NUM},
        "grid": {"type": "object"},
        "versions": {"type": "object", "additionalProperties": {"type": "string"}},
        "timestamp": {"type": "string"},
        "config": {"type": "object"},
    },
}

RESULT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "log_value", "std_error", "method", "convention", "manifest_ref", "manifest"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "log_value": _NUM,
        "log_value_display": {"type": "string"},
        "std_error": {"type": "number", "minimum": 0},
        "method": {"enum": ["closed_form", "skew_poly", "monte_carlo", "quadrature", "large_n"]},
        "convention": {
            "type": "object",
            "required": ["omega_beta_N", "vol_UN", "include_prefactor"],
            "properties": {
                "omega_beta_N": {"type": "number", "exclusiveMinimum": 0},
                "vol_UN": {"type": "number", "exclusiveMinimum": 0},
                "include_prefactor": {"type": "boolean"},
            },
        },
        "spec": {"type": "object"},
        "details": {"type": "object"},
        "manifest_ref": {"type": "string"},
        "manifest": MANIFEST_SCHEMA,
    },
}

MASTERFIELD_HEADER_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "kind", "t", "support", "source", "grid", "manifest_ref"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"enum": ["Q", "SW", "S"]},
        "t": _NUM,
        "beta": _NUM,
        "t_input": _NUM,
        "support": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        "source": {"enum": ["closed_form", "solver"]},
        "grid": {"type": "integer", "minimum": 2},
        "max_residual": _NUM_OR_NULL,
        "manifest_ref": {"type": "string"},
    },
}

GAS_SIDECAR_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "seed", "rng", "potential", "N", "t", "beta", "step_schedule", "format", "data"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "seed": {"type": "integer"},
        "potential": {"enum": ["Q", "SW", "S"]},
        "N": {"type": "integer", "minimum": 2},
        "t": _NUM,
        "beta": _NUM,
        "format": {"enum": ["csv", "npy"]},
    },
}

VERIFY_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "suite", "passed", "criteria", "manifest"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "suite": {"type": "string"},
        "passed": {"type": "boolean"},
        "criteria": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "passed", "measured", "tolerance", "seconds"],
                "properties": {"name": {"type": "string"}, "passed": {"type": "boolean"}},
            },
        },
        "manifest": MANIFEST_SCHEMA,
    },
}


def validate(doc: dict, schema: dict) -> dict:
    jsonschema.validate(doc, schema)
    return doc


def dumps(doc: dict) -> str:
    # repr-exact floats; NaN is not valid JSON
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# cache


class ResultCache:
    """Directory of cached outputs keyed by config hash, guarded by file locks."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @classmethod
    def from_env(cls, override=None) -> "ResultCache | None":
        root = override or os.environ.get(CACHE_ENV)
        return cls(root) if root else None

    def _path(self, key: str, suffix: str) -> Path:
        return self.root / f"{key}{suffix}"

    @contextmanager
    def locked(self, key: str):
        with FileLock(str(self.root / f"{key}.lock")):
            yield

    def get(self, key: str, suffix: str = ".json") -> bytes | None:
        path = self._path(key, suffix)
        return path.read_bytes() if path.exists() else None

    def put(self, key: str, data: bytes, suffix: str = ".json") -> Path:
        path = self._path(key, suffix)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        return path
