import json
import subprocess
import sys

import pytest

from skewdim.cli import EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_OK, fmt_real, main


def run(tmp_path, command, config=None, *extra):
    args = [command, "--out", str(tmp_path / "out"), *extra]
    if config is not None:
        path = tmp_path / "config.json"
        path.write_text(config if isinstance(config, str) else json.dumps(config))
        args += ["--config", str(path)]
    return main(args)


def read(tmp_path, name):
    return json.loads((tmp_path / "out" / name).read_text())


def test_validate_preset(tmp_path):
    assert run(tmp_path, "validate") == EXIT_OK
    doc = read(tmp_path, "validate.json")
    assert doc["header"]["tool"] == "skewdim"
    assert len(doc["header"]["config_sha256"]) == 64


def test_validate_reports_missing_transitivity(tmp_path):
    cfg = {"system": {"alphabet": ["a", "b"], "incidence": [["a", "a"]], "potential": 1.0},
           "projection": {"rank": 1, "images": {"a": "e1", "b": "E1"}}}
    assert run(tmp_path, "validate", cfg) in (EXIT_INCONCLUSIVE, EXIT_ERROR)


def test_series_csv(tmp_path):
    cfg = {"preset": "F2-SRW", "n": 6, "targets": ["1"], "p_grid": [0.0]}
    assert run(tmp_path, "series", cfg, "--format", "csv") == EXIT_OK
    lines = (tmp_path / "out" / "series.csv").read_text().splitlines()
    assert lines[0].startswith("# tool: skewdim")
    body = [l for l in lines if not l.startswith("#")]
    assert body[0] == "target,p,m,a_m"
    counts = [float(l.split(",")[3]) for l in body[1:]]
    assert counts == [1, 0, 4, 0, 28, 0, 232]


def test_exponent(tmp_path):
    assert run(tmp_path, "exponent", {"preset": "F2-SRW", "n_max": 16}) == EXIT_OK
    est = read(tmp_path, "exponent.json")["result"]["1"]
    assert 1.0 < est["estimate"] < 1.4


def test_exponent_without_data_is_inconclusive(tmp_path):
    cfg = {"preset": "F2-SRW", "n_max": 9, "targets": ["e1 e1 e1 e1 e1 e1 e1 e1 e1"]}
    assert run(tmp_path, "exponent", cfg) == EXIT_INCONCLUSIVE


def test_measure_and_cover(tmp_path):
    assert run(tmp_path, "measure", {"preset": "F2-SRW", "p": 0.6, "depth": 3}) == EXIT_OK
    doc = read(tmp_path, "measure.json")["result"]
    assert all(abs(m - 1) < 1e-10 for m in doc["total_mass"])
    assert run(tmp_path, "cover", {"preset": "F2-SRW", "n": 8, "p_grid": [1.5]}) == EXIT_OK
    assert len(read(tmp_path, "cover.json")["result"]) == 9


def test_schottky(tmp_path):
    cfg = {"schottky": {"preset": "SYM3", "half_width_deg": 25}, "n_max": 12}
    assert run(tmp_path, "schottky", cfg) == EXIT_OK
    assert read(tmp_path, "schottky.json")["result"]["ordering_holds"]


def test_malformed_json_reports_location(tmp_path, capsys):
    assert run(tmp_path, "validate", '{"preset": "F2-SRW",\n  "n": }') == EXIT_ERROR
    assert "config.json:2:" in capsys.readouterr().err


def test_bad_fields_exit_one(tmp_path, capsys):
    assert run(tmp_path, "series", {"preset": "F2-SRW", "n": -3}) == EXIT_ERROR
    assert "n:" in capsys.readouterr().err
    assert run(tmp_path, "validate", {"preset": "nope"}) == EXIT_ERROR
    assert run(tmp_path, "validate", None, "--seed", "-1") == EXIT_ERROR
    assert main(["validate", "--config", str(tmp_path / "absent.json")]) == EXIT_ERROR


def test_environment_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("SKEWDIM_OUT", str(tmp_path / "envout"))
    monkeypatch.setenv("SKEWDIM_SEED", "7")
    assert main(["validate"]) == EXIT_OK
    doc = json.loads((tmp_path / "envout" / "validate.json").read_text())
    assert doc["header"]["seed"] == 7


def test_hash_depends_on_config_and_seed(tmp_path):
    run(tmp_path, "validate", {"preset": "F2-SRW"})
    a = read(tmp_path, "validate.json")["header"]["config_sha256"]
    run(tmp_path, "validate", {"preset": "F2-SRW"}, "--seed", "1")
    b = read(tmp_path, "validate.json")["header"]["config_sha256"]
    run(tmp_path, "validate", {"preset": "F2-SRW"})
    assert read(tmp_path, "validate.json")["header"]["config_sha256"] == a != b


def test_fmt_real_round_trips():
    for x in (0.1, 1 / 3, 2.5e-300, 1e300):
        assert float(fmt_real(x)) == x


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "skewdim.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "verify" in proc.stdout
