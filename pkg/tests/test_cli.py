from __future__ import annotations

import csv
import io
import json

import pytest

from klin.cli import main


@pytest.fixture
def inst(tmp_path):
    path = tmp_path / "inst.klin"
    assert main(["gen", "--group", "p=3", "--n", "8", "--k", "2", "--m", "20", "--seed", "1", "-o", str(path)]) == 0
    return path


def test_gen_refute_verify(inst, tmp_path, capsys):
    cert = tmp_path / "cert.json"
    assert main(["refute", str(inst), "--l", "1", "--eps", "0.5", "-o", str(cert)]) == 0
    doc = json.loads(cert.read_text())
    assert 0 <= doc["alg_val"] and doc["kind"] == "even-field"
    assert doc["config"]["command"] == "refute"
    assert main(["verify", str(cert), str(inst)]) == 0
    doc["alg_val"] += 0.01
    cert.write_text(json.dumps(doc))
    capsys.readouterr()
    assert main(["verify", str(cert), str(inst)]) == 3
    assert "mismatch" in capsys.readouterr().err


@pytest.mark.parametrize("group,k,ell", [("p=2", 3, 2), ("zm=4", 2, 1)])
def test_verify_accepts_other_pipelines(tmp_path, group, k, ell):
    path, cert = tmp_path / "i.klin", tmp_path / "c.json"
    assert main(["gen", "--group", group, "--n", "5", "--k", str(k), "--m", "12", "--seed", "2", "-o", str(path)]) == 0
    assert main(["refute", str(path), "--l", str(ell), "--eps", "1", "-o", str(cert)]) == 0
    assert main(["verify", str(cert), str(path)]) == 0
    assert main(["simple", str(path), "--l", "4", "-o", str(cert)]) == 0
    assert main(["verify", str(cert), str(path)]) == 0


def test_bench_schema_and_stability(capsys):
    args = ["bench", "--sweep", "m=5:15:5", "--seeds", "2"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args + ["--jobs", "2"]) == 0
    second = capsys.readouterr().out
    rows = list(csv.DictReader(io.StringIO(first)))
    assert list(rows[0]) == ["m", "seed", "alg_val", "norm", "d", "runtime_ms"]
    assert [(r["m"], r["seed"]) for r in rows] == [(str(m), str(s)) for m in (5, 10, 15) for s in (0, 1)]
    strip = lambda text: [r[:-1] for r in csv.reader(io.StringIO(text))]
    assert strip(first) == strip(second)


def test_deps_and_sos(tmp_path, capsys):
    path = tmp_path / "d.klin"
    path.write_text("klin v1\ngroup: p=3\nn: 4\nk: 2\n0:1 2:2 = 0\n0:2 2:1 = 1\n1:1 3:1 = 2\n")
    assert main(["deps", str(path), "--max-size", "3"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["dependency"] == [{"position": 0, "coefficient": "1"}, {"position": 1, "coefficient": "1"}]
    assert main(["deps", str(path), "--mode", "kikuchi", "--l", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["dependency"] is not None
    pe = tmp_path / "pe.txt"
    assert main(["sos", "build", str(path), "--d", "2", "-o", str(pe)]) == 0
    assert "status: error" in pe.read_text()
    assert main(["sos", "expand", str(path), "--l", "2", "--beta", "0.5"]) == 0
    assert json.loads(capsys.readouterr().out)["expanding"] is False


def test_sos_verify_roundtrip(tmp_path, capsys):
    path, pe = tmp_path / "s.klin", tmp_path / "pe.txt"
    path.write_text("klin v1\ngroup: p=3\nn: 5\nk: 3\n0:1 1:2 3:1 = 2\n1:1 2:1 4:2 = 0\n")
    assert main(["sos", "build", str(path), "--d", "4", "-o", str(pe)]) == 0
    assert main(["sos", "verify", str(path), "--pe", str(pe)]) == 0
    assert main(["verify", str(pe), str(path)]) == 0
    assert main(["sos", "boolean", str(path), "--d", "3"]) == 0
    capsys.readouterr()
    assert main(["kikuchi", str(path), "--l", "2"]) == 3


def test_kikuchi_dump(inst, capsys):
    assert main(["kikuchi", str(inst), "--l", "1"]) == 0
    assert capsys.readouterr().out.startswith("kikuchi v1 kind=even-field N=16")


def test_exit_codes(inst, monkeypatch, capsys):
    assert main(["bench", "--sweep", "q=1:2:1"]) == 3
    assert main(["refute", "missing.klin", "--l", "1"]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["refute", str(inst), "--l", "zero"])
    assert exc.value.code == 3
    monkeypatch.setenv("KLIN_CAP_N", "10")
    assert main(["refute", str(inst), "--l", "1"]) == 2
    assert "resource cap" in capsys.readouterr().err
