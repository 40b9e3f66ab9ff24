import csv
import io
import json
import subprocess
import sys

import pytest

from polymerlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_no_command_is_usage_error(capsys):
    code, _, err = run(capsys)
    assert code == 2 and "usage" in err


def test_unknown_option_is_usage_error(capsys):
    code, _, _ = run(capsys, "oracle", "second", "--bogus")
    assert code == 2


def test_oracle_second_report(capsys):
    code, out, _ = run(capsys, "oracle", "second", "--N", "48")
    assert code == 0
    rep = json.loads(out)
    assert rep["passed"] and rep["command"] == "oracle"
    values = {e["method"]: e["value"] for e in rep["entries"] if e["quantity"] == "variance"}
    assert values["dp-oracle"] == pytest.approx(values["renewal-sum"], rel=1e-12)
    for key in ("config_hash", "seed", "version", "wall_time"):
        assert key in rep


def test_csv_output(capsys):
    code, out, _ = run(capsys, "--format", "csv", "oracle", "second", "--N", "8")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and {"quantity", "value", "method", "error", "tag", "params"} <= set(rows[0])
    assert json.loads(rows[0]["params"])["N"] == 8


def test_global_flags_after_command(capsys):
    code, out, _ = run(capsys, "oracle", "second", "--N", "8", "--format", "csv")
    assert code == 0 and out.startswith("quantity")


def test_config_hash_deterministic(capsys, tmp_path):
    hashes = set()
    for i in range(2):
        run(capsys, "--output", str(tmp_path / f"r{i}.json"), "oracle", "second", "--N", "8")
        hashes.add(json.loads((tmp_path / f"r{i}.json").read_text())["config_hash"])
    assert len(hashes) == 1
    run(capsys, "--output", str(tmp_path / "r2.json"), "oracle", "second", "--N", "9")
    assert json.loads((tmp_path / "r2.json").read_text())["config_hash"] not in hashes


def test_config_file_defaults(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[oracle]\nN = 7\ntheta = 0.5\n")
    code, out, _ = run(capsys, "--config", str(cfg), "oracle", "second")
    assert code == 0
    params = json.loads(out)["entries"][0]["params"]
    assert params["N"] == 7 and params["theta"] == 0.5
    # the command line wins over the file
    code, out, _ = run(capsys, "--config", str(cfg), "oracle", "second", "--N", "9")
    assert json.loads(out)["entries"][0]["params"]["N"] == 9


def test_empty_config_is_usage_error(capsys, tmp_path):
    cfg = tmp_path / "empty.ini"
    cfg.write_text("")
    code, _, _ = run(capsys, "--config", str(cfg), "oracle", "second")
    assert code == 2


def test_unknown_config_key_is_usage_error(capsys, tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[oracle]\nwidth = 3\n")
    code, _, _ = run(capsys, "--config", str(cfg), "oracle", "second")
    assert code == 2


def test_domain_error_exit_code(capsys):
    code, _, err = run(capsys, "oracle", "second", "--N", "2", "--theta", "-5")
    assert code == 1 and "DomainError" in err


def test_bounds_verify(capsys):
    code, out, _ = run(capsys, "bounds", "verify", "--lemmas", "coefficients,gamma-tail", "--kmax", "8")
    assert code == 0
    assert json.loads(out)["passed"]


def test_kernels_cache_dir(capsys, tmp_path):
    code, _, _ = run(capsys, "--cache-dir", str(tmp_path), "kernels", "--horizon", "16")
    assert code == 0
    assert any(tmp_path.iterdir())
    code, out, _ = run(capsys, "--cache-dir", str(tmp_path), "kernels", "--horizon", "16")
    assert code == 0 and json.loads(out)["passed"]


def test_she_theta(capsys):
    code, out, _ = run(capsys, "she", "theta", "--eps", "1e-3,1e-5")
    assert code == 0 and json.loads(out)["passed"]


def test_dickman_tab(capsys):
    code, out, _ = run(capsys, "dickman-tab", "--s", "1", "--grid", "0.5,1")
    assert code == 0 and json.loads(out)["entries"]


def test_bad_test_function_spec(capsys):
    code, _, _ = run(capsys, "kernel", "variance-limit", "--phi", "triangle:2")
    assert code == 2


def test_entry_point_module():
    proc = subprocess.run([sys.executable, "-m", "polymerlab.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "polymerlab" in proc.stdout
