import csv
import json
import subprocess
import sys

import pytest

from bec_ecs.cli import main


def _config(tmp_path, text):
    p = tmp_path / "run.ini"
    p.write_text(text)
    return str(p)


def _read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# manifest: ") and lines[1].startswith("# columns: ")
    manifest = json.loads(lines[0][len("# manifest: "):])
    return manifest, list(csv.DictReader(lines[2:]))


def test_revival_default_grid(tmp_path):
    assert main(["revival", "--out-dir", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "revival.json").read_text())
    assert doc["manifest"]["command"] == "revival"
    assert set(doc["manifest"]) >= {"config_sha256", "version", "cutoffs", "truncation_estimates", "timing"}
    _, rows = _read_csv(tmp_path / "revival.csv")
    assert len(rows) == 1 and float(rows[0]["fidelity"]) >= 1 - 1e-7


def test_revival_grid_skips_non_coprime(tmp_path):
    cfg = _config(tmp_path, "[revival]\ngrid = 1,4,1; 2,4,2; -1,5,3\n")
    assert main(["revival", "--config", cfg, "--out-dir", str(tmp_path), "--threads", "2"]) == 0
    _, rows = _read_csv(tmp_path / "revival.csv")
    assert [r["N"] for r in rows] == ["4", "4", "5"]
    assert rows[1]["status"].startswith("skipped")
    assert rows[0]["status"] == rows[2]["status"] == "ok"


def test_config_hash_is_recorded(tmp_path):
    import hashlib

    cfg = _config(tmp_path, "[revival]\ngrid = 1,3,1\n")
    main(["revival", "--config", cfg, "--out-dir", str(tmp_path), "--format", "json"])
    digest = hashlib.sha256(open(cfg, "rb").read()).hexdigest()
    assert json.loads((tmp_path / "revival.json").read_text())["manifest"]["config_sha256"] == digest
    assert not (tmp_path / "revival.csv").exists()


@pytest.mark.parametrize(
    "text",
    ["[revival]\nbogus = 1\n", "[nonsense]\nx = 1\n", "[revival]\ngrid = 1,4\n", "[herald]\neta = 1.5\n", "not ini"],
)
def test_config_errors_exit_2(tmp_path, text, capsys):
    cmd = "herald" if "herald" in text else "revival"
    assert main([cmd, "--config", _config(tmp_path, text), "--out-dir", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file_exit_2(tmp_path):
    assert main(["revival", "--config", str(tmp_path / "none.ini"), "--out-dir", str(tmp_path)]) == 2


def test_tolerance_failure_exit_3(tmp_path):
    # the orthonormalized frame misses the branch targets by about 2e-2
    cfg = _config(tmp_path, "[protocol]\nscheme = multiphoton\nK = -1\nmeasurement = ideal\ntolerance = 1e-6\n")
    assert main(["protocol", "--config", cfg, "--out-dir", str(tmp_path)]) == 3
    assert (tmp_path / "protocol.csv").exists()


def test_herald_rows(tmp_path):
    cfg = _config(tmp_path, "[herald]\nq = 0, 0.1\neta = 1.0, 0.7\n")
    assert main(["herald", "--config", cfg, "--out-dir", str(tmp_path)]) == 0
    _, rows = _read_csv(tmp_path / "herald.csv")
    by = {(r["q"], r["eta"]): r for r in rows}
    zero = by[("0", "1")]
    assert float(zero["P_psi_analytic"]) == 1.0 and zero["fidelity_to_bell"] == "degenerate"
    main_row = by[("0.1", "1")]
    assert float(main_row["P_psi_closed_form"]) == pytest.approx(0.980536, abs=1e-6)
    assert abs(float(main_row["P_psi_analytic"]) - float(main_row["P_psi_bruteforce"])) < 1e-7
    assert float(main_row["fidelity_to_bell"]) >= 1 - 1e-6


def test_protocol_outputs(tmp_path):
    cfg = _config(tmp_path, "[protocol]\nscheme = multiphoton\nK = -1\ntolerance = 1e-5\n")
    assert main(["protocol", "--config", cfg, "--out-dir", str(tmp_path)]) == 0
    _, rows = _read_csv(tmp_path / "protocol.csv")
    labels = [r["label"] for r in rows]
    assert labels[:4] == ["PP+", "PP-", "PM+", "PM-"]
    assert sum(float(r["probability"]) for r in rows) == pytest.approx(1.0, abs=1e-8)


def test_bell_discriminate(tmp_path):
    cfg = _config(tmp_path, "[bell-discriminate]\nomega_t = pi, pi/2\n")
    assert main(["bell-discriminate", "--config", cfg, "--out-dir", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "bell-discriminate.json").read_text())
    assert doc["results"]


def test_bad_threads_and_help(tmp_path, capsys):
    assert main(["revival", "--threads", "0", "--out-dir", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["herald", "--help"])
    assert "tolerance" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "bec_ecs", "revival", "--out-dir", str(tmp_path), "--format", "csv"],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "revival.csv").exists()
