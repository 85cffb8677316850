import json
import subprocess
import sys

import pytest

from macres.cli import main


@pytest.fixture(autouse=True)
def _cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def test_info(capsys, tmp_path):
    assert main(["info", "--channel", "adder2.json"]) == 0
    out = capsys.readouterr().out
    assert "I(X,Y;Z) = 1.039721" in out
    assert "(0.693147, 0.346574)" in out
    doc = json.loads((tmp_path / "macres-info.manifest.json").read_text())
    assert doc["command"] == "info" and "results" in doc


def test_region(capsys):
    assert main(["region", "--channel", "adder2.json", "--rates", "0.75,0.45"]) == 0
    assert "certified" in capsys.readouterr().out
    assert main(["region", "--channel", "adder2.json", "--rates", "0.2,0.2"]) == 0
    assert "unknown" in capsys.readouterr().out


def test_resolve_csv(tmp_path):
    out = tmp_path / "gaps.csv"
    assert main(["resolve", "--channel", "adder2.json", "--rates", "0.75,0.45", "--n", "2,4",
                 "--trials", "3", "--seed", "5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# units:")
    assert lines[1] == "n,trial,gap,rate1,rate2,threshold,exceeds"
    assert len(lines) == 2 + 6
    man = json.loads((tmp_path / "gaps.csv.manifest.json").read_text())
    assert man["seed"] == 5 and man["parameters"]["n"] == [2, 4]


def test_second_order_csv(tmp_path):
    out = tmp_path / "so.csv"
    assert main(["second-order", "--channel", "adder2.json", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()[2:]
    assert len(rows) == 3
    r2 = float(rows[0].split(",")[3])
    assert r2 == pytest.approx(0.4956833, abs=1e-6)


def test_secrecy_csv(tmp_path):
    out = tmp_path / "sec.csv"
    assert main(["--manifest", str(tmp_path / "m.json"), "secrecy", "--channel", "adder_indeptap.json",
                 "--rates", "0.1,0.1", "--n", "2", "--trials", "2", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[1].startswith("n,trial,ds_gap")
    assert json.loads((tmp_path / "m.json").read_text())["L1"] == pytest.approx(0.296574, abs=1e-6)


def test_bounds_check(capsys):
    assert main(["bounds-check"]) == 0
    assert "203/203" in capsys.readouterr().out


def test_errors_exit_2(capsys):
    assert main(["info", "--channel", "nope.json"]) == 2
    assert main(["secrecy", "--channel", "adder2.json", "--rates", "0.1,0.1", "--n", "2"]) == 2
    assert main(["secrecy", "--channel", "revealing.json", "--rates", "0.1,0.1", "--n", "2"]) == 2
    assert "condition" in capsys.readouterr().err
    with pytest.raises(SystemExit) as e:
        main(["region", "--channel", "adder2.json", "--rates", "0.1"])
    assert e.value.code == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "macres", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "0.1.0" in r.stdout
