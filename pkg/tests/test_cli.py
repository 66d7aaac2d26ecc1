"""CLI exit codes, certificate files, problem round trips and determinism."""

import json
import subprocess
import sys

import pytest

from inertia_embed import demos, serialize
from inertia_embed.cli import main


def write_problem(tmp_path, name):
    sc = demos.build(name)
    path = tmp_path / f"{name.replace('^', '_').replace(':', '_')}.json"
    path.write_text(serialize.dumps(serialize.problem_to_json(sc.ring, sc.structure, sc.rep, sc.form, name)))
    return path


@pytest.fixture(scope="module")
def c3xc5_cert(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cert")
    prob = write_problem(tmp, "c3xc5")
    out = tmp / "cert.json"
    assert main(["embed", str(prob), "--out", str(out)]) == 0
    return out


def test_embed_c3xc5_writes_sp6_certificate(c3xc5_cert):
    data = json.loads(c3xc5_cert.read_text())
    assert data["dimension"] == 6 and data["report"]["passed"]
    assert data["group"]["order"] == 15 and len(data["images"]) == 15


def test_verify_fresh_tampered_truncated(c3xc5_cert, tmp_path, capsys):
    assert main(["verify", str(c3xc5_cert)]) == 0
    data = json.loads(c3xc5_cert.read_text())
    p = data["precision"]
    data["images"][1][0][0][0] = (data["images"][1][0][0][0] + 5 ** (p - 1)) % 5 ** 16
    bad = tmp_path / "tampered.json"
    bad.write_text(json.dumps(data))
    capsys.readouterr()
    assert main(["verify", str(bad)]) == 1
    assert "FAILED: homomorphism" in capsys.readouterr().out
    trunc = tmp_path / "trunc.json"
    trunc.write_text(c3xc5_cert.read_text()[:200])
    assert main(["verify", str(trunc)]) == 2


def test_embed_parse_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["embed", str(bad)]) == 2
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"ell": 5}))
    assert main(["embed", str(missing)]) == 2
    prob = write_problem(tmp_path, "q8")
    assert main(["embed", str(prob), "--precision", "6"]) == 2


def test_embed_ell3_requires_force(tmp_path):
    prob = write_problem(tmp_path, "ell3-budget-probe")
    assert main(["embed", str(prob)]) == 5


def test_embed_not_inertia_form(tmp_path):
    prob = tmp_path / "d5.json"
    prob.write_text(json.dumps({"ell": 5, "group": {"family": "dihedral(5)"},
                                "rep": {"generator_images": {"1": [[1, 0], [0, 1]]}}}))
    assert main(["embed", str(prob)]) == 3


@pytest.mark.parametrize("name", ["q8", "c11sd5", "c3^4:c5"])
def test_round_trip_and_determinism(tmp_path, name):
    prob = write_problem(tmp_path, name)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["embed", str(prob), "--out", str(a), "--seed", "2"]) == 0
    assert main(["embed", str(prob), "--out", str(b), "--seed", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(["verify", str(a)]) == 0


def test_demo_command(capsys):
    assert main(["demo", "cyclic25"]) == 0
    out = capsys.readouterr().out
    assert "dimension: 20" in out and "induced" in out
    assert main(["demo", "--family", "nope"]) == 2
    assert main(["demo", "ell3-budget-probe"]) == 5
    capsys.readouterr()
    main(["demo", "ell3-budget-probe", "--force"])
    assert "BudgetViolation" in capsys.readouterr().out


def test_selftest_and_fault_injection():
    assert main(["selftest", "--seed", "0"]) == 0
    assert main(["selftest", "--inject-fault"]) == 1


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_selftest_seed_sweep(seed):
    assert main(["selftest", "--seed", str(seed)]) == 0


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "inertia_embed", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "0.1.0" in r.stdout


def test_problem_entries_with_shift_and_prec():
    from inertia_embed.padic import ring_create

    R = ring_create(5, 1, 16)
    K = serialize.kmatrix_from_input(R, [[{"coeffs": [1], "shift": -1, "prec": 10}, 0], [0, 1]])
    assert K.shift == -1 and K.integral.prec == 10
    with pytest.raises(serialize.InputError):
        serialize.kmatrix_from_input(R, [[1, 2], [3]])
