import json
import subprocess
import sys

import numpy as np
import pytest

from lumplab.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, run
from lumplab.linalg import read_matrix_market


def write_cfg(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def csv_rows(path):
    lines = [ln for ln in open(path).read().splitlines() if not ln.startswith("#")]
    return [ln.split(",") for ln in lines]


SQUARE = {
    "experiment": "square",
    "discretization": {"dim": 2, "degree": 2, "subdivisions": 4},
    "operators": {"P_i": [1, 2], "P_ij": [[1, 2]]},
}


def test_assemble_exports_matrices(tmp_path):
    cfg = write_cfg(tmp_path, SQUARE)
    assert run(["assemble", "--config", cfg, "--out", str(tmp_path / "o"), "-q"], {}) == EXIT_OK
    m = read_matrix_market(tmp_path / "o" / "M.mtx")
    m1 = read_matrix_market(tmp_path / "o" / "M1.mtx")
    m2 = read_matrix_market(tmp_path / "o" / "M2.mtx")
    np.testing.assert_allclose(np.kron(m1, m2), m, rtol=1e-10, atol=1e-16)
    doc = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert doc["command"] == "assemble"
    assert doc["config"]["experiment"] == "square"
    assert "M.mtx" in doc["files"]


def test_spectrum_orders_p2_below_p12(tmp_path):
    cfg = write_cfg(tmp_path, SQUARE)
    out = tmp_path / "o"
    assert run(["spectrum", "--config", cfg, "--out", str(out), "-q"], {}) == EXIT_OK
    doc = json.loads((out / "summary.json").read_text())
    header = open(out / "spectrum.csv").readline()
    assert header.startswith("# lumplab spectrum experiment=square config_hash=")
    assert doc["config_hash"] in header
    rows = csv_rows(out / "spectrum.csv")
    assert rows[0] == ["k", "M", "P1", "P2", "P12"]
    vals = np.array([[float(x) for x in r] for r in rows[1:]])
    # spectra against lumped masses sit below the consistent one
    assert np.all(vals[:, 2] <= vals[:, 1] * (1 + 1e-10))
    assert np.all(vals[:, 3] <= vals[:, 1] * (1 + 1e-10))
    assert np.all(vals[:, 2] <= vals[:, 3] * (1 + 1e-10))
    assert doc["ordering"]["P2<=P12"] and doc["ordering"]["P1<=P2"]


def test_spectrum_of_one_by_one_system(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "tiny", "discretization": {"degree": 1, "subdivisions": 2}, "operators": {"P_i": [1]}})
    out = tmp_path / "o"
    assert run(["spectrum", "--config", cfg, "--out", str(out), "-q"], {}) == EXIT_OK
    rows = csv_rows(out / "spectrum.csv")
    assert len(rows) == 2
    assert float(rows[1][1]) == pytest.approx(12.0, rel=1e-12)  # K/M = 4 / (1/3)
    assert float(rows[1][2]) == pytest.approx(12.0, rel=1e-12)  # L([1/3]) = [1/3]


def test_lump_exports_bands(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "l", "operators": {"P_i": [1, 3]}})
    out = tmp_path / "o"
    assert run(["lump", "--config", cfg, "--out", str(out), "-q"], {}) == EXIT_OK
    p3 = read_matrix_market(out / "P3.mtx")
    assert np.count_nonzero(np.triu(p3, 3)) == 0
    assert (out / "P3_bands.csv").exists()


def test_converge_reports_slopes(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "c", "discretization": {"degree": 2}, "convergence": {"meshes": [8, 16, 32]}})
    out = tmp_path / "o"
    assert run(["converge", "--config", cfg, "--out", str(out), "-q"], {}) == EXIT_OK
    doc = json.loads((out / "summary.json").read_text())
    assert doc["slopes"]["M"] == pytest.approx(4.0, abs=0.4)
    assert doc["slopes"]["P1"] == pytest.approx(2.0, abs=0.3)


def test_integrate_standing_wave(tmp_path):
    cfg = write_cfg(
        tmp_path,
        {
            "experiment": "w",
            "discretization": {"degree": 3, "subdivisions": 30},
            "operators": {"P_i": [1]},
            "dynamics": {"T": 1.0, "sample_times": [0.0, 1.0], "trajectory_dofs": [0, 5], "binary": True},
        },
    )
    out = tmp_path / "o"
    assert run(["integrate", "--config", cfg, "--out", str(out), "-q"], {}) == EXIT_OK
    rows = csv_rows(out / "l2_error.csv")
    assert rows[0] == ["operator", "t", "l2_error"]
    errs = {(r[0], float(r[1])): float(r[2]) for r in rows[1:]}
    assert errs[("M", 1.0)] < 5e-3
    assert (out / "trajectory_M.bin").exists()


def test_integrate_unstable_step_is_numerical_error(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "u", "operators": {"P_i": []}, "dynamics": {"T": 5.0, "dt": 0.05}})
    assert run(["integrate", "--config", cfg, "--out", str(tmp_path / "o"), "-q"], {}) == EXIT_NUMERICAL


def test_nkp_outputs(tmp_path):
    cfg = write_cfg(
        tmp_path,
        {"experiment": "n", "discretization": {"dim": 2, "degree": 2, "subdivisions": 5, "density": "sin_xy"}, "nkp": {"rank": 2}},
    )
    out = tmp_path / "o"
    assert run(["nkp", "--config", cfg, "--out", str(out), "-q"], {}) == EXIT_OK
    doc = json.loads((out / "summary.json").read_text())
    assert 0 < doc["sigma2_over_sigma1"] < 1
    assert doc["kappa_M_NKP"] >= 1.0
    sv = csv_rows(out / "singular_values.csv")
    assert len(sv) > 2


def test_nkp_needs_2d(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "n"})
    assert run(["nkp", "--config", cfg, "--out", str(tmp_path / "o"), "-q"], {}) == EXIT_CONFIG


def test_outputs_are_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, SQUARE)
    for name in ("a", "b"):
        assert run(["spectrum", "--config", cfg, "--out", str(tmp_path / name), "-q"], {}) == EXIT_OK
    for f in ("spectrum.csv", "summary.json", "bounds_P12.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_config_errors_exit_2(tmp_path):
    assert run(["lump", "--out", str(tmp_path)], {}) == EXIT_CONFIG
    bad = write_cfg(tmp_path, {"experiment": "x", "unknown": 1})
    assert run(["lump", "--config", bad, "--out", str(tmp_path), "-q"], {}) == EXIT_CONFIG
    assert run(["lump", "--config", str(tmp_path / "nope.json")], {}) == EXIT_CONFIG
    assert run(["frobnicate"], {}) == EXIT_CONFIG
    assert run(["lump", "--seed", "-1"], {}) == EXIT_CONFIG
    assert run(["lump", "--seed", str(2**64)], {}) == EXIT_CONFIG


def test_env_supplies_flags(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "env"})
    out = tmp_path / "envout"
    env = {"LUMPLAB_CONFIG": cfg, "LUMPLAB_OUT": str(out), "LUMPLAB_SEED": "0x10", "LUMPLAB_SET__OPERATORS__P_I": "[2]"}
    assert run(["lump", "-q"], env) == EXIT_OK
    doc = json.loads((out / "summary.json").read_text())
    assert doc["config"]["seed"] == 16
    assert doc["config"]["operators"]["P_i"] == [2]
    assert run(["lump", "-q"], {**env, "LUMPLAB_THREADS": "zero"}) == EXIT_CONFIG


def test_seed_flag_beats_env(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "s"})
    out = tmp_path / "o"
    assert run(["assemble", "--config", cfg, "--out", str(out), "--seed", "5", "-q"], {"LUMPLAB_SEED": "7"}) == EXIT_OK
    assert json.loads((out / "summary.json").read_text())["config"]["seed"] == 5


def test_schema_command(capsys):
    assert run(["schema"], {}) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["title"] == "lumplab experiment"


def test_exit_code_constants():
    assert (EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERICAL) == (0, 1, 2, 3)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lumplab", "schema"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert '"experiment"' in proc.stdout


def test_band_csv_matches_matrix(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "b", "discretization": {"subdivisions": 6}, "operators": {"P_i": [2]}})
    out = tmp_path / "o"
    assert run(["lump", "--config", cfg, "--out", str(out), "-q"], {}) == EXIT_OK
    p2 = read_matrix_market(out / "P2.mtx")
    bands = csv_rows(out / "P2_bands.csv")
    assert len(bands) >= 2
    assert np.count_nonzero(np.triu(p2, 2)) == 0
