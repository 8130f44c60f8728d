import json
from fractions import Fraction

import pytest

from npoint_flows import MapTable, TransitionMatrix, dirac, example_distribution
from npoint_flows.cli import main


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, nu in [("e0", example_distribution(6, 0)), ("e12", example_distribution(6, Fraction(1, 2))),
                     ("id3", dirac(MapTable.identity(3))), ("id10", dirac(MapTable.identity(10))),
                     ("const", dirac(MapTable.constant(3, 1)))]:
        p = tmp_path / f"{name}.json"
        p.write_text(nu.to_json())
        paths[name] = str(p)
    return paths


def run(capsys, *args):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_lift_one_point(capsys, files):
    code, out, _ = run(capsys, "lift", files["e0"], "--level", "1")
    A = TransitionMatrix.from_text(out)
    assert code == 0 and (A.m, A.n) == (6, 1)
    for i in range(6):
        block = 2 * (i // 2)
        assert A.row(i) == {block: Fraction(1, 2), block + 1: Fraction(1, 2)}


def test_lift_identity_and_errors(capsys, files):
    code, out, _ = run(capsys, "lift", files["id3"], "--level", "2")
    assert code == 0 and TransitionMatrix.from_text(out) == TransitionMatrix.identity(3, 2)
    code, out, err = run(capsys, "lift", files["e0"], "--level", "0")
    assert code == 2 and out == "" and "level" in err
    code, out, err = run(capsys, "lift", files["id10"], "--level", "8")
    assert code == 3 and out == "" and "lazy" in err


def test_detect(capsys, files):
    code, out, _ = run(capsys, "detect", files["e0"], files["e12"], "--seed", "1,2,3,4,5,6")
    assert code == 0 and json.loads(out)["detected_level"] == 5
    code, out, _ = run(capsys, "detect", files["e0"], files["e12"], "--seed", "1,2,1,4,1,6")
    assert code == 0 and json.loads(out)["detected_level"] == 3
    code, out, _ = run(capsys, "detect", files["e0"], files["e0"], "--seed", "1,2,3,4,5,6")
    assert code == 1 and json.loads(out)["detected_level"] is None


def test_detect_thread_env_does_not_change_output(capsys, files, monkeypatch):
    args = ("detect", files["e0"], files["e12"], "--seed", "1,2,3,4,5,6")
    _, serial, _ = run(capsys, *args)
    monkeypatch.setenv("NPOINT_FLOWS_THREADS", "4")
    _, threaded, _ = run(capsys, *args)
    assert serial == threaded


def test_detect_bad_inputs(capsys, files, tmp_path):
    code, _, err = run(capsys, "detect", files["e0"], files["id3"], "--seed", "1,2,3")
    assert code == 2 and err
    code, _, _ = run(capsys, "detect", files["e0"], files["e12"], "--seed", "1,x")
    assert code == 2
    code, _, _ = run(capsys, "detect", files["e0"], str(tmp_path / "missing.json"), "--seed", "1,2")
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"m": 2, "atoms": [{"map": [1, 2], "weight": "1/2"}]}')
    code, _, err = run(capsys, "detect", str(bad), str(bad), "--seed", "1,2")
    assert code == 2 and "defect" in err


def test_dof_tables(capsys, files):
    code, out, _ = run(capsys, "dof", "--m", "4")
    assert code == 0 and "n=4\t1\t13\t67\t175\t256" in out.splitlines()
    code, out, _ = run(capsys, "dof", "--m", "5", "--format", "json")
    assert json.loads(out)["table"]["5"] == [1, 21, 181, 821, 2101, 3125]


def test_dof_with_distribution(capsys, files):
    code, out, _ = run(capsys, "dof", files["const"], "--m", "3", "--k", "2", "--basis", "--format", "json")
    data = json.loads(out)["system"]
    assert code == 0 and data["rank"] == 19 and data["nullspace_dim"] == 8 and data["feasible"]
    assert len(data["basis"]) == 8
    code, _, err = run(capsys, "dof", files["const"], "--m", "3")
    assert code == 2 and "--k" in err
    code, _, _ = run(capsys, "dof", files["e0"], "--m", "6", "--k", "2")
    assert code == 3


def test_example(capsys):
    code, out, _ = run(capsys, "example", "--epsilon", "0")
    atoms = json.loads(out)["atoms"]
    assert code == 0 and len(atoms) == 4 and {a["weight"] for a in atoms} == {"1/4"}
    code, out, _ = run(capsys, "example", "--epsilon", "1/2")
    atoms = json.loads(out)["atoms"]
    assert len(atoms) == 8 and {a["weight"] for a in atoms} == {"1/8"}
    assert run(capsys, "example", "--epsilon", "2")[0] == 2
    assert run(capsys, "example", "--epsilon", "0.5")[0] == 2
    assert run(capsys, "example", "--m", "5", "--epsilon", "0")[0] == 2


def test_example_out_file(capsys, tmp_path):
    target = tmp_path / "nu.json"
    code, out, _ = run(capsys, "example", "--epsilon", "1/3", "--out", target)
    assert code == 0 and out == ""
    assert target.read_text() == example_distribution(6, Fraction(1, 3)).to_json()


def test_simulate(capsys, files):
    code, out, _ = run(capsys, "simulate", files["e12"], "--horizon", "0")
    assert code == 0 and out == ""
    args = ("simulate", files["e12"], "--horizon", "30", "--prng-seed", "5", "--embed")
    first, second = run(capsys, *args), run(capsys, *args)
    assert first == second and first[1].count("\n") > 0
    code, out, _ = run(capsys, "simulate", files["e12"], "--horizon", "10000", "--visited", "1,2,3,4,5,6")
    assert json.loads(out)["count"] == 8
    assert run(capsys, "simulate", files["e12"], "--horizon", "1", "--rate", "0")[0] == 2


def test_estimate(capsys, files):
    code, out, _ = run(capsys, "estimate", files["e12"], "--level", "2", "--steps", "500",
                       "--seed-tuple", "1,3")
    lines = out.splitlines()
    assert code == 0 and lines[1] == "# empirical steps=500 seed=0"
    assert {int(line.split("\t")[0]) for line in lines[2:]} == {2, 3, 8, 9}


def test_invariant(capsys, files):
    code, out, _ = run(capsys, "invariant", files["e0"], "--seed", "1,2,3,4,5,6")
    cascade = json.loads(out)["cascade"]
    assert code == 0 and [c["level"] for c in cascade] == [6, 5, 4, 3, 2, 1]
    assert cascade[-1] == {"level": 1, "support": [[5], [6]], "mass": ["1/2", "1/2"]}


def test_invariant_ambiguous(capsys, tmp_path):
    p = tmp_path / "amb.json"
    p.write_text('{"m": 3, "atoms": [{"map": [1, 1, 3], "weight": "1/2"}, {"map": [1, 3, 3], "weight": "1/2"}]}')
    code, out, err = run(capsys, "invariant", p, "--seed", "2")
    assert code == 2 and out == "" and "recurrent classes" in err


def test_birkhoff(capsys, files, tmp_path):
    code, out, _ = run(capsys, "birkhoff", files["e12"])
    assert code == 0 and sum(Fraction(a["weight"]) for a in json.loads(out)["atoms"]) == 1
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"matrix": [["1/3", "2/3"], ["2/3", "1/3"]]}))
    code, out, _ = run(capsys, "birkhoff", m)
    assert json.loads(out)["atoms"] == [{"map": [1, 2], "weight": "1/3"}, {"map": [2, 1], "weight": "2/3"}] \
        or json.loads(out)["atoms"] == [{"map": [2, 1], "weight": "2/3"}, {"map": [1, 2], "weight": "1/3"}]
    m.write_text(json.dumps({"matrix": [["1", "0"], ["1", "0"]]}))
    assert run(capsys, "birkhoff", m)[0] == 2


def test_verify_checks(capsys, files, tmp_path):
    assert run(capsys, "verify", "consistency", files["e0"], "--level", "2")[0] == 0
    broken = tmp_path / "broken.txt"
    broken.write_text("# m=2 n=2 format=npoint-sparse-v1\n0\t0\t1\n1\t1\t1/2\n1\t2\t1/2\n2\t2\t1\n3\t3\t1\n")
    code, out, _ = run(capsys, "verify", "consistency", "--matrix", broken)
    assert code == 1 and json.loads(out)["counterexample"]["r"] == 1
    assert run(capsys, "verify", "invariance", files["e12"], "--seed", "1,2,1,4,1,6")[0] == 0
    assert run(capsys, "verify", "example", "--grid", "1/2")[0] == 0
    code, out, _ = run(capsys, "verify", "basis-m3")
    assert code == 0 and json.loads(out)["nullspace_dim"] == 8
    assert run(capsys, "verify", "complementarity", files["e12"], "--u", "1,2", "--v", "1,2")[0] == 0
    assert run(capsys, "verify", "complementarity", files["const"], "--u", "1", "--v", "1")[0] == 2
    assert run(capsys, "verify", "bistochastic", files["e0"])[0] == 0
    code, out, _ = run(capsys, "verify", "bistochastic", files["const"])
    assert code == 1 and json.loads(out)["column_sums"] == ["3", "0", "0"]


def test_verify_missing_arguments(capsys):
    assert run(capsys, "verify", "bistochastic")[0] == 2
    assert run(capsys, "verify", "consistency")[0] == 2


def test_module_entry_point():
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "npoint_flows", "dof", "--m", "3"], capture_output=True, text=True)
    assert proc.returncode == 0 and "n=3\t1\t7\t19\t27" in proc.stdout
