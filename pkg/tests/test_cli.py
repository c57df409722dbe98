import json
import math

import pytest

from alpharesolvent.cli import main
from alpharesolvent.mlf import rgamma


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ml_eval_prints_e(capsys):
    code, out, _ = run(capsys, "ml-eval", "--alpha", "1", "--beta", "1", "--z", "1")
    assert code == 0
    assert out.strip() == "2.718281828459045"


def test_ml_eval_complex(capsys):
    code, out, _ = run(capsys, "ml-eval", "--alpha", "1", "--z", "0+1j")
    assert code == 0
    assert complex(out.strip()) == pytest.approx(complex(math.cos(1), math.sin(1)), abs=1e-14)


def test_validation_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "ml-eval", "--alpha", "-1", "--z", "1")
    assert code == 2 and "alpha" in err
    code, _, _ = run(capsys, "family", "--A", "[[1, 2]]", "--out", str(tmp_path))
    assert code == 2
    code, _, _ = run(capsys, "solve", "--input", str(tmp_path / "missing.json"), "--out", str(tmp_path))
    assert code == 2


def test_envelope_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "family", "--A", "[[-100]]", "--method", "volterra", "--N", "512", "--out", str(tmp_path))
    assert code == 3 and "envelope" in err


def test_solve_zero_scenario(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "--input", "solve_zero", "--out", str(tmp_path))
    assert code == 0
    u = float(out.split("u(r) = ")[1].split()[0])
    assert u == pytest.approx(1.0 + 2.0 + rgamma(2.5), abs=1e-10)
    header = (tmp_path / "solution.csv").read_text().splitlines()[0]
    assert header == "t,u0,residual"
    summary = json.loads((tmp_path / "solution.json").read_text())
    assert summary["u_final"][0] == pytest.approx(u, abs=1e-15)


def test_flag_overrides_request(capsys, tmp_path):
    code, _, _ = run(capsys, "solve", "--input", "solve_zero", "--N", "64", "--out", str(tmp_path))
    assert code == 0
    assert len((tmp_path / "solution.csv").read_text().splitlines()) == 66


def test_family_json(capsys, tmp_path):
    code, _, _ = run(capsys, "family", "--A", "[[0,1],[-2,-2]]", "--kind", "P_alpha", "--N", "16", "--out", str(tmp_path))
    assert code == 0
    d = json.loads((tmp_path / "family.json").read_text())
    assert d["kind"] == "P_alpha" and d["dim"] == 2 and len(d["grid"]) == 17


def test_semivariation_table(capsys, tmp_path):
    code, out, _ = run(capsys, "semivariation", "--A", "[[-1]]", "--N", "64", "--out", str(tmp_path))
    assert code == 0
    d = json.loads((tmp_path / "semivariation.json").read_text())
    assert set(d) >= {"value", "n", "converged", "maximizer"}
    assert d["value"] == pytest.approx(0.6033706346819119, abs=1e-12)
    assert "SV_d" in out


def test_env_var_output_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("ALPHARESOLVENT_OUT", str(tmp_path / "env"))
    code, _, _ = run(capsys, "family", "--A", "[[-1]]", "--N", "8")
    assert code == 0 and (tmp_path / "env" / "family.json").exists()
    code, _, _ = run(capsys, "family", "--A", "[[-1]]", "--N", "8", "--out", str(tmp_path / "flag"))
    assert (tmp_path / "flag" / "family.json").exists()


def test_verify_is_deterministic_and_anchored(capsys, tmp_path):
    code1, out, _ = run(capsys, "verify", "--N", "256", "--out", str(tmp_path / "a"))
    code2, _, _ = run(capsys, "verify", "--N", "256", "--out", str(tmp_path / "b"))
    a = (tmp_path / "a" / "verify.json").read_bytes()
    assert a == (tmp_path / "b" / "verify.json").read_bytes()
    assert code1 == code2
    report = json.loads(a)
    anchors = {c["anchor"] for c in report["checks"]}
    for required in (
        "P-identity(a)",
        "P-identity(b)",
        "P-identity(c)",
        "P-identity(d)",
        "remark:A(g_alpha*S)",
        "resolvent-definition(c)",
        "stieltjes-lemma",
        "strong-solution-formula",
        "theorem-proof-inequality",
        "corollary:tAP-bounded",
    ):
        assert required in anchors
    lines = [ln for ln in out.splitlines() if ln.startswith(("PASS", "FAIL"))]
    assert len(lines) == len(report["checks"]) and all("[" in ln for ln in lines)


def test_verify_default_scenario_passes(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--out", str(tmp_path))
    assert code == 0, out
    assert json.loads((tmp_path / "verify.json").read_text())["all_passed"]
