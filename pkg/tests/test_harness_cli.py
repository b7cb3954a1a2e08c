import csv
import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from plpoi.cli import main
from plpoi.exceptions import ConfigError
from plpoi.harness import (
    ExperimentConfig,
    ccdf_from_samples,
    crossing_w,
    git_blob_sha1,
    run_ccdf,
    run_sweep,
)
from plpoi.sensing import read_grid

SMALL = """
[design]
n_subcarriers = 64
[solver]
max_iters = 40
[ber]
n_subcarriers = 64
trials = 3
ebn0 = 0, 6, inf
[radar]
n_subcarriers = 128
frame_symbols = 32
[detect]
frame_max_iters = 5
targets = 30:10:1, 80:-20:1
[ccdf]
n_subcarriers = 64
trials = 50
[sweep]
n_subcarriers = 64
trials = 8
theta_grid = 0.2, 0.6
w_grid = 0, 0.5, 1
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return str(path)


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def test_config_defaults():
    cfg = ExperimentConfig()
    params = cfg.radar_params()
    assert params.fc == 24e9 and params.bandwidth == 93.1e6 and params.frame_symbols == 256
    solver = cfg.solver_config()
    assert solver.theta == 0.6 and solver.rho == 1e4 and solver.alpha_db == pytest.approx(1.8)
    assert [(t.range_m, t.velocity_mps) for t in cfg.targets()] == [(30.0, 10.0), (34.0, 15.0)]


def test_config_rejects_unknown_and_bad_values():
    with pytest.raises(ConfigError):
        ExperimentConfig("[nope]\na = 1\n")
    with pytest.raises(ConfigError):
        ExperimentConfig("[solver]\nspeed = 1\n")
    with pytest.raises(ConfigError):
        ExperimentConfig("[solver]\ntheta = abc\n").solver_config()
    with pytest.raises(ConfigError):
        ExperimentConfig("[solver]\ntheta = 0.9\n").solver_config()
    with pytest.raises(ConfigError):
        ExperimentConfig("[run]\nseed = -1\n").seed
    with pytest.raises(ConfigError):
        ExperimentConfig("not ini")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file("/nonexistent/cfg.ini")


def test_overrides_win():
    cfg = ExperimentConfig("[solver]\ntheta = 0.3\n", {("solver", "theta"): 0.5, ("run", "seed"): None})
    assert cfg.get_float("solver", "theta") == 0.5
    assert cfg.seed == 0


def test_design_is_byte_identical_and_hashed(small_config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["design", "--config", small_config, "--seed", "7", "--out", str(a)]) == 0
    assert main(["design", "--config", small_config, "--seed", "7", "--out", str(b)]) == 0
    manifest = json.loads((a / "manifest.json").read_text())
    for name, meta in manifest["outputs"].items():
        data = (a / name).read_bytes()
        assert data == (b / name).read_bytes()
        assert meta["sha1"] == git_blob_sha1(data)
    assert manifest["config"]["run"]["seed"] == "7"
    header = (a / "spectrum.csv").read_text().splitlines()
    assert "# seed = 7" in header and any(line.startswith("# rng = ") for line in header)
    summary = dict(_rows(a / "summary.csv")[1:])
    assert float(summary["max_pd"]) <= 0.6 + 1e-9
    assert float(summary["output_papr_db"]) < float(summary["input_papr_db"])
    assert len(_rows(a / "spectrum.csv")) == 65
    assert len(_rows(a / "waveform.csv")) == 257


def test_git_blob_hash_matches_git():
    data = b"hello\n"
    assert git_blob_sha1(data) == "ce013625030ba8dba906f756967f9e9ca394464a"
    assert git_blob_sha1(b"") == hashlib.sha1(b"blob 0\0").hexdigest()


def test_design_ten_listed_phases(tmp_path, capsys):
    cfg = tmp_path / "ten.ini"
    cfg.write_text("[design]\nphases = 0.7854, -0.7854, 0.7854, 0.7854, -0.7854, 0.7854, -2.3562, -2.3562, -0.7854, 0.7854\n")
    assert main(["design", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "max_pd: 0.5" in out or "max_pd: 0.6" in out
    summary = dict(_rows(tmp_path / "o" / "summary.csv")[1:])
    assert float(summary["max_pd"]) <= 0.6 + 1e-9


def test_invalid_config_exits_nonzero(tmp_path, capsys):
    assert main(["design", "--theta", "0.9", "--out", str(tmp_path / "x")]) == 2
    assert "theta" in capsys.readouterr().err
    assert main(["design", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path / "x")]) == 2
    with pytest.raises(SystemExit):
        main(["ber", "--channel", "rician"])


def test_ber_noiseless_smoke(small_config, tmp_path):
    out = tmp_path / "ber"
    assert main(["ber", "--config", small_config, "--out", str(out)]) == 0
    rows = _rows(out / "ber.csv")
    header, body = rows[0], rows[1:]
    assert header[:7] == ["method", "channel", "ebn0_db", "trials", "bits", "bit_errors", "ber"]
    assert {r[0] for r in body} == {"plain", "plpoi", "baseline"}
    noiseless = [r for r in body if r[2] == "inf"]
    assert all(float(r[6]) == 0 for r in noiseless)
    # theory co-emitted
    assert all(float(r[7]) > 0 for r in body if r[2] == "0")


def test_ber_cli_overrides(small_config, tmp_path):
    out = tmp_path / "ray"
    assert main(["ber", "--config", small_config, "--channel", "rayleigh", "--ebn0", "10", "--trials", "2", "--out", str(out)]) == 0
    body = _rows(out / "ber.csv")[1:]
    assert {r[1] for r in body} == {"rayleigh"} and {r[3] for r in body} == {"2"}


def test_ccdf_curve_properties(small_config, tmp_path):
    out = tmp_path / "ccdf"
    assert main(["ccdf", "--config", small_config, "--out", str(out)]) == 0
    rows = _rows(out / "ccdf.csv")[1:]
    for method in ("plain", "plpoi", "baseline"):
        probs = [float(r[2]) for r in rows if r[0] == method]
        assert probs[0] == 1.0
        assert all(a >= b for a, b in zip(probs, probs[1:]))


def test_ccdf_from_samples():
    curve = ccdf_from_samples([3.04, 5.0, 7.2])
    assert curve.thresholds_db[0] == 3.0
    assert curve.at(3.04) == 1.0
    assert curve.at(7.3) == 0.0
    np.testing.assert_allclose(np.diff(curve.thresholds_db), 0.1)


def test_plain_ccdf_matches_classical_oracle():
    # the classical approximation assumes N independent samples, i.e. the critical rate
    curve = run_ccdf("plain", {"oversampling": 1}, 2000, seed=31)
    for g_db in (8.0, 8.5, 9.0, 9.5, 10.0, 10.5, 11.0):
        oracle = 1 - (1 - np.exp(-(10 ** (g_db / 10)))) ** 1024
        assert abs(curve.at(g_db) - oracle) <= 3 * max(curve.standard_error(g_db), 1e-3)


def test_crossing_w():
    assert crossing_w(5.0, [0, 1], [4.0, 6.0]) == pytest.approx(0.5)
    assert crossing_w(4.0, [0, 1], [4.0, 6.0]) == 0.0
    assert np.isnan(crossing_w(9.0, [0, 1], [4.0, 6.0]))


def test_sweep_w_one_is_plain():
    table = run_sweep([0.6], [0.0, 1.0], 10, seed=3, n_subcarriers=64)
    plain = run_ccdf("plain", {}, 10, seed=3, n_subcarriers=64)
    assert table.baseline_mean_db[-1] == pytest.approx(plain.samples_db.mean())
    assert len(table.pairs) == 1
    with pytest.raises(ConfigError):
        run_sweep([], [0.5], 2, seed=0)


def test_sweep_cli(small_config, tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", small_config, "--out", str(out)]) == 0
    assert len(_rows(out / "sweep.csv")) == 1 + 2 + 3
    assert _rows(out / "pairs.csv")[0] == ["theta", "w"]


def test_af_run(small_config, tmp_path, capsys):
    out = tmp_path / "af"
    assert main(["af", "--config", small_config, "--out", str(out)]) == 0
    summary = dict(_rows(out / "summary.csv")[1:])
    assert float(summary["range_cut_psl_db"]) <= -200
    grid, _, _ = read_grid(out / "af_grid.bin")
    assert grid.shape == (64, 64)


def test_detect_run(small_config, tmp_path):
    out = tmp_path / "det"
    assert main(["detect", "--config", small_config, "--out", str(out)]) == 0
    dets = [(float(r[0]), float(r[1])) for r in _rows(out / "detections.csv")[1:]]
    assert len(dets) == 2
    grid, dr, dv = read_grid(out / "rd_map.bin")
    assert grid.shape == (128, 32)
    for rng_m, vel in [(30.0, 10.0), (80.0, -20.0)]:
        assert any(abs(r - rng_m) <= dr and abs(v - vel) <= dv for r, v in dets)


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "plpoi", "design", "--theta", "0.95", "--out", str(tmp_path / "m")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
