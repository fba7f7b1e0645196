import json

import pytest

from lumplab.config import DEFAULTS, SCHEMA, env_overrides, load, resolve, schema_json
from lumplab.errors import ConfigError


def test_defaults_fill_in():
    cfg = resolve({"experiment": "x"}, environ={})
    assert cfg["discretization"]["geometry"] == "unit_interval"
    assert cfg["seed"] == DEFAULTS["seed"]
    assert len(cfg.hash) == 16
    assert cfg.header("lump") == f"lumplab lump experiment=x config_hash={cfg.hash}"


def test_hash_is_stable_and_sensitive():
    a = resolve({"experiment": "x"}, environ={})
    b = resolve({"experiment": "x"}, environ={})
    c = resolve({"experiment": "x", "seed": 1}, environ={})
    assert a.hash == b.hash != c.hash


@pytest.mark.parametrize(
    "raw",
    [
        {},
        {"experiment": "has space"},
        {"experiment": "x", "bogus": 1},
        {"experiment": "x", "discretization": {"degree": 0}},
        {"experiment": "x", "discretization": {"colour": "red"}},
        {"experiment": "x", "discretization": {"density": -2}},
        {"experiment": "x", "seed": 2**64},
        {"experiment": "x", "convergence": {"meshes": [4, 8]}},
        {"experiment": "x", "operators": {"P_ij": [[1]]}},
        {"experiment": "x", "outputs": {"summary": "../evil.json"}},
        [1, 2],
    ],
)
def test_schema_rejections(raw):
    with pytest.raises(ConfigError):
        resolve(raw, environ={})


@pytest.mark.parametrize(
    "disc",
    [
        {"dim": 2, "geometry": "unit_interval"},
        {"dim": 1, "geometry": "quarter_annulus"},
        {"dim": 1, "density": "sin_xy"},
        {"dim": 3, "density": "sin_xy"},
    ],
)
def test_semantic_rejections(disc):
    with pytest.raises(ConfigError):
        resolve({"experiment": "x", "discretization": disc}, environ={})


def test_pij_length_must_match_dim():
    with pytest.raises(ConfigError):
        resolve({"experiment": "x", "discretization": {"dim": 2}, "operators": {"P_ij": [[1, 2, 3]]}}, environ={})


def test_flag_overrides_win():
    cfg = resolve({"experiment": "x", "seed": 3}, seed=9, threads=2, environ={})
    assert cfg.seed == 9 and cfg["threads"] == 2


def test_env_set_overrides():
    env = {"LUMPLAB_SET__DISCRETIZATION__DEGREE": "5", "LUMPLAB_SET__dynamics__problem": "annulus_wave", "OTHER": "1"}
    raw = env_overrides({"experiment": "x"}, env)
    assert raw["discretization"]["degree"] == 5
    assert raw["dynamics"]["problem"] == "annulus_wave"
    cfg = resolve({"experiment": "x"}, environ={"LUMPLAB_SET__SEED": "17"})
    assert cfg.seed == 17


def test_env_unknown_key():
    with pytest.raises(ConfigError):
        resolve({"experiment": "x"}, environ={"LUMPLAB_SET__DISCRETIZATION__WIBBLE": "1"})


def test_env_value_is_validated():
    with pytest.raises(ConfigError):
        resolve({"experiment": "x"}, environ={"LUMPLAB_SET__DISCRETIZATION__DEGREE": "eleven"})


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load(tmp_path / "missing.json", environ={})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load(bad, environ={})
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"experiment": "ok"}))
    assert load(good, environ={}).experiment == "ok"


def test_schema_export_is_json():
    assert json.loads(schema_json()) == SCHEMA
