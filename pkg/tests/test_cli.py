from __future__ import annotations

import json

import pytest

from conftest import DATA
from tracegrowth.cli import COMMANDS, main, parse_config

SL2Z = str(DATA / "sl2z.json")
CUSP12 = str(DATA / "cusp12.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    obj = json.loads(out)
    assert set(obj) == {"meta", "data"}
    assert obj["meta"]["config"]["command"] == argv[0]
    return obj["data"]


def test_every_subcommand_has_help(capsys):
    for name in COMMANDS:
        with pytest.raises(SystemExit) as e:
            main([name, "--help"])
        assert e.value.code == 0
        assert "--config" in capsys.readouterr().out


def test_trace_growth(capsys):
    data = report(capsys, "trace-growth", "--spec", SL2Z, "--L", "12", "--nmax", "10")
    assert data["counts"] == [2 * n + 1 for n in range(11)]
    assert data["gap"] == "1"  # exact values are serialized as strings


def test_qrs_verify(capsys):
    data = report(capsys, "qrs-verify", "--a", "3/2", "--F0", "1", "--F1", "1",
                  "--G0", "0", "--G1", "1", "--horizon", "40")
    assert data["plateau"] and data["max_gcd"] == 1


def test_qrs_verify_input_file(capsys, tmp_path):
    f = tmp_path / "in.json"
    f.write_text(json.dumps({"a": "5/2", "F0": "2", "F1": "5/2", "horizon": 40,
                             "pair": {"G0": "0", "G1": "1"}}))
    data = report(capsys, "qrs-verify", "--input", str(f))
    assert data["max_gcd"] == 2
    f.write_text(json.dumps({"a": "5/2", "bogus": 1}))
    assert run(capsys, "qrs-verify", "--input", str(f))[0] == 2


def test_zaffine_density(capsys):
    data = report(capsys, "zaffine-density", "--spaces", '[["0","2"],["0","3"]]',
                  "--lo", "0", "--hi", "12")
    assert data["union"] == {"exact": 9, "bound": 9, "singles": 12, "pairwise": 3}
    assert data["pairs"][0]["period_lcm"] == "6"


def test_dirichlet_csv_and_sidecar(capsys, tmp_path):
    out = tmp_path / "d.csv"
    code, _, err = run(capsys, "dirichlet", "--m", "4", "--x", "100", "--csv", "--out", str(out))
    assert code == 0, err
    raw = out.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "x,a,m,n_primes,S" and len(lines) == 3
    side = json.loads((tmp_path / "d.csv.meta.json").read_text())
    assert set(side) == {"meta", "data"} and side["meta"]["config"]["format"] == "csv"


def test_family_build(capsys):
    data = report(capsys, "family-build", "--matrix", '[["3/2","1"],["1/2","1"]]',
                  "--n", "1", "--budget", "30")
    assert data["decompositions"]["1"] == {"K": 1, "S": 3, "T": 2, "L": 2}
    assert [e["witness"] for e in data["entries"]] == [2, 5, 11, 17, 23, 29]


def test_arith_check(capsys):
    data = report(capsys, "arith-check", "--spec", CUSP12, "--ball-length", "5")
    assert data["takeuchi"]["condition1"] == "pass"
    assert data["structure"]["ok"] and data["structure"]["N"] == 12


def test_arith_check_exit_1_when_structure_fails(capsys, tmp_path):
    # SL(2, Z) conjugated by diag(1/2, 2): integer traces, but N b is not integral for N = 2
    spec = tmp_path / "conj.json"
    spec.write_text(json.dumps({"field": {"kind": "rational"},
                                "generators": [[["0", "-1/4"], ["4", "0"]],
                                               [["1", "1/4"], ["0", "1"]]]}))
    code, out, _ = run(capsys, "arith-check", "--spec", str(spec), "--N", "2", "--ball-length", "3")
    assert code == 1
    assert json.loads(out)["data"]["structure"]["ok"] is False


def test_fricke_planted(capsys):
    data = report(capsys, "fricke", "--planted", "--seed", "3", "--rmax", "6", "--scan-cap", "50")
    assert data["residual"] <= 1e-9
    assert data["trace_bound_violations"] == 0


@pytest.mark.filterwarnings("ignore:.*coincided within tolerance")
def test_fricke_bad_tail_exit_1(capsys, tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"g": 3, "triples": [[2, 1, 1], [3, 2, 1], [0.5, 1, 2], [1, 1, 1]],
                             "tail": {"a": 1.0, "d": 1.0, "nu": 2.0}}))
    code, out, _ = run(capsys, "fricke", "--coords", str(f), "--rmax", "4")
    assert code == 1
    assert json.loads(out)["data"]["residual"] > 1e-9


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "trace-growth")[0] == 2  # missing --spec
    assert run(capsys)[0] == 2
    assert run(capsys, "trace-growth", "--spec", SL2Z, "--bogus")[0] == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"spec": SL2Z, "typo": 1}))
    assert run(capsys, "trace-growth", "--config", str(cfg))[0] == 2
    assert run(capsys, "trace-growth", "--spec", str(tmp_path / "missing.json"))[0] == 2
    assert run(capsys, "fricke")[0] == 2


def test_resource_cap_exit_3(capsys):
    assert run(capsys, "trace-growth", "--spec", SL2Z, "--L", "12", "--cap", "100")[0] == 3


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"spec": SL2Z, "L": 8, "nmax": 7}))
    rc = parse_config(["trace-growth", "--config", str(cfg), "--L", "12"])
    assert rc.params["L"] == 12 and rc.params["nmax"] == 7
    rc = parse_config(["trace-growth", "--config", str(cfg)])
    assert rc.params["L"] == 8 and rc.params["cap"] == 10**6


def test_meta_echoes_resolved_config(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"m": 5, "x": "50"}))
    code, out, _ = run(capsys, "dirichlet", "--config", str(cfg), "--a", "1")
    meta = json.loads(out)["meta"]
    assert code == 0
    assert meta["config"]["params"] == {"a": [1], "csv": False, "m": 5, "x": [50.0]}
    assert meta["config"]["config"] == str(cfg) and "version" in meta


@pytest.mark.parametrize("argv", [
    ["trace-growth", "--spec", SL2Z, "--L", "8"],
    ["fricke", "--planted", "--seed", "1", "--rmax", "5", "--scan-cap", "40"],
])
def test_reports_are_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    ta, tb = a.read_text(), b.read_text()
    assert ta.replace(str(a), "") == tb.replace(str(b), "")
