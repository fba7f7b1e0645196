"""Strict JSON experiment configuration.

A configuration is validated against :data:`SCHEMA` (unknown keys are
rejected), completed with defaults and hashed.  The hash is the first 16
hex digits of the SHA-256 of the canonical JSON of the resolved config and
is stamped into every CSV and JSON output.

Environment overrides
---------------------
``LUMPLAB_SEED``, ``LUMPLAB_THREADS``, ``LUMPLAB_OUT`` and
``LUMPLAB_CONFIG`` stand in for the matching command-line flags (flags
win).  ``LUMPLAB_SET__<SECTION>__<KEY>=<json>`` overrides a single config
entry, e.g. ``LUMPLAB_SET__DISCRETIZATION__DEGREE=5``.
"""

import copy
import hashlib
import json
import os
from dataclasses import dataclass

import jsonschema

from .errors import ConfigError
from .splinefem import CATALOGUE, PROBLEM_BCS

ENV_PREFIX = "LUMPLAB_"
SET_PREFIX = ENV_PREFIX + "SET__"
MAX_SEED = 2**64 - 1

GEOMETRIES = list(CATALOGUE) + ["unit_cube"]
DYNAMICS_PROBLEMS = ["standing_wave", "annulus_wave"]

_pos_int = {"type": "integer", "minimum": 1}
_band_list = {"type": "array", "items": _pos_int, "uniqueItems": True}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "lumplab experiment",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"type": "string", "pattern": "^[A-Za-z0-9_.-]{1,64}$"},
        "seed": {"type": "integer", "minimum": 0, "maximum": MAX_SEED},
        "threads": _pos_int,
        "discretization": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dim": {"enum": [1, 2, 3]},
                "degree": {"type": "integer", "minimum": 1, "maximum": 10},
                "subdivisions": _pos_int,
                "geometry": {"enum": GEOMETRIES},
                "density": {
                    "oneOf": [
                        {"enum": ["constant", "sin_xy"]},
                        {"type": "number", "exclusiveMinimum": 0},
                    ]
                },
                "bc": {"enum": ["dirichlet", "neumann", "mixed"]},
                "quad_points": _pos_int,
            },
        },
        "operators": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "consistent": {"type": "boolean"},
                "P_i": _band_list,
                "P_ij": {
                    "type": "array",
                    "items": {"type": "array", "items": _pos_int, "minItems": 2, "maxItems": 3},
                },
                "nkp_rank": {"type": "integer", "minimum": 0},
                "two_level": _band_list,
            },
        },
        "spectrum": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"relative": {"type": "boolean"}, "bounds": {"type": "boolean"}},
        },
        "convergence": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "problem": {"enum": sorted(PROBLEM_BCS)},
                "meshes": {"type": "array", "items": _pos_int, "minItems": 3, "uniqueItems": True},
            },
        },
        "dynamics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "problem": {"enum": DYNAMICS_PROBLEMS},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "safety": {"type": "number", "exclusiveMinimum": 0},
                "dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "beta": {"type": "number", "minimum": 0, "maximum": 1},
                "gamma": {"type": "number", "minimum": 0, "maximum": 1},
                "sample_times": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "trajectory_dofs": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "binary": {"type": "boolean"},
            },
        },
        "nkp": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rank": _pos_int,
                "scan_meshes": {"type": "array", "items": _pos_int},
                "export_factors": {"type": "boolean"},
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "summary": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+\\.json$"},
                "matrices": {"type": "boolean"},
            },
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "threads": 1,
    "discretization": {
        "dim": 1,
        "degree": 3,
        "subdivisions": 20,
        "geometry": None,
        "density": "constant",
        "bc": "dirichlet",
        "quad_points": None,
    },
    "operators": {"consistent": True, "P_i": [1, 2, 3], "P_ij": [], "nkp_rank": 0, "two_level": []},
    "spectrum": {"relative": True, "bounds": True},
    "convergence": {"problem": "laplace_1d_mixed", "meshes": [8, 16, 32, 64]},
    "dynamics": {
        "problem": "standing_wave",
        "T": 6.0,
        "safety": 1.0,
        "dt": None,
        "beta": 0.0,
        "gamma": 0.5,
        "sample_times": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        "trajectory_dofs": [],
        "binary": False,
    },
    "nkp": {"rank": 1, "scan_meshes": [], "export_factors": True},
    "outputs": {"summary": "summary.json", "matrices": False},
}

_DEFAULT_GEOMETRY = {1: "unit_interval", 2: "unit_square", 3: "unit_cube"}
_GEOMETRY_DIM = {"unit_interval": 1, "unit_cube": 3}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated and fully resolved experiment configuration."""

    data: dict

    def __getitem__(self, key):
        return self.data[key]

    @property
    def experiment(self):
        return self.data["experiment"]

    @property
    def seed(self):
        return self.data["seed"]

    @property
    def canonical(self):
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self):
        return hashlib.sha256(self.canonical.encode()).hexdigest()[:16]

    def header(self, command):
        return f"lumplab {command} experiment={self.experiment} config_hash={self.hash}"


def _merge(base, extra):
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _schema_path(name, path):
    # env names are case-insensitive; map each part to the schema's spelling
    node = SCHEMA
    out = []
    for part in path:
        props = node.get("properties", {})
        match = [k for k in props if k.lower() == part.lower()]
        if not match:
            raise ConfigError(f"{name}: unknown config key {part.lower()!r}")
        out.append(match[0])
        node = props[match[0]]
    return out


def env_overrides(raw, environ=None):
    """Apply ``LUMPLAB_SET__A__B=<json>`` entries to a raw config dict."""
    environ = os.environ if environ is None else environ
    out = copy.deepcopy(raw)
    for name in sorted(environ):
        if not name.startswith(SET_PREFIX):
            continue
        path = [p for p in name[len(SET_PREFIX):].split("__") if p]
        if not path:
            raise ConfigError(f"{name}: empty override path")
        path = _schema_path(name, path)
        text = environ[name]
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = out
        for key in path[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{name}: {key!r} is not a section")
        node[path[-1]] = value
    return out


def _semantic(cfg):
    disc = cfg["discretization"]
    dim = disc["dim"]
    geo = disc["geometry"] or _DEFAULT_GEOMETRY[dim]
    disc["geometry"] = geo
    gdim = _GEOMETRY_DIM.get(geo, 2)
    if gdim != dim:
        raise ConfigError(f"geometry {geo!r} is {gdim}D but dim is {dim}")
    if dim == 3 and disc["density"] not in ("constant",) and not isinstance(disc["density"], (int, float)):
        raise ConfigError("3D models support constant densities only")
    if dim == 1 and disc["density"] == "sin_xy":
        raise ConfigError("density 'sin_xy' needs a 2D model")
    for pij in cfg["operators"]["P_ij"]:
        if len(pij) != dim:
            raise ConfigError(f"P_ij entry {pij} needs {dim} indices")
    return cfg


def resolve(raw, seed=None, threads=None, environ=None):
    """Validate ``raw`` and return an :class:`ExperimentConfig`.

    Raises
    ------
    ConfigError
        On schema violations or inconsistent settings.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = env_overrides(raw, environ)
    if seed is not None:
        raw["seed"] = seed
    if threads is not None:
        raw["threads"] = threads
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"at {where}: {exc.message}") from None
    return ExperimentConfig(_semantic(_merge(DEFAULTS, raw)))


def load(path, seed=None, threads=None, environ=None):
    """Read a JSON config file and :func:`resolve` it."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return resolve(raw, seed, threads, environ)


def schema_json():
    return json.dumps(SCHEMA, indent=2, sort_keys=True) + "\n"
