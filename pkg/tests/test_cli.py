import csv
import json
import math

import numpy as np
import pytest

from toricurv.cli import _selftest_checks, main
from toricurv.formats import (
    immersion_to_obj,
    load_immersion,
    parse_immersion,
    save_immersion,
)
from toricurv.errors import ParseError
from toricurv.immersion import evaluate_jet


@pytest.fixture()
def hex_file(tmp_path, hexagonal):
    path = tmp_path / "hex2.json"
    save_immersion(hexagonal, path)
    return str(path)


@pytest.fixture()
def clifford_file(tmp_path):
    path = tmp_path / "clifford2.json"
    path.write_text(json.dumps({"type": "clifford", "m": 2}))
    return str(path)


# ---------------------------------------------------------------- formats

def test_parse_clifford_shorthand(clifford2):
    imm = parse_immersion({"type": "clifford", "m": 2})
    np.testing.assert_allclose(evaluate_jet(imm, [0.4, 1.0], 0).value,
                               evaluate_jet(clifford2, [0.4, 1.0], 0).value, atol=1e-15)


def test_parse_gromov_with_scale(hexagonal):
    imm = parse_immersion({"type": "gromov", "B": [[1, 0], [0, 1], [1, 1]], "scale": 0.5})
    np.testing.assert_allclose(evaluate_jet(imm, [0.7, 0.2], 0).value,
                               0.5 * evaluate_jet(hexagonal, [0.7, 0.2], 0).value, atol=1e-15)


def test_roundtrip_fourier(wavy2, tmp_path):
    path = tmp_path / "wavy.json"
    save_immersion(wavy2, path)
    back = load_immersion(path)
    theta = [1.0, 2.5]
    np.testing.assert_allclose(evaluate_jet(back, theta, 2).d2,
                               evaluate_jet(wavy2, theta, 2).d2, atol=0)


@pytest.mark.parametrize("obj,fragment", [
    ({"type": "mystery"}, "type"),
    ({"type": "fourier", "q": 4, "terms": []}, "n"),
    ({"type": "fourier", "n": 2, "q": 4, "terms": [{"k": [1], "a": [0] * 4, "b": [0] * 4}]}, "terms[0].k"),
    ({"type": "fourier", "n": 2, "q": 4, "terms": [{"k": [1, 0], "a": [0] * 3, "b": [0] * 4}]}, "terms[0].a"),
    ({"type": "fourier", "n": 2, "q": 4, "scale": -1, "terms": []}, "scale"),
    ({"type": "clifford"}, "m"),
    ({"type": "gromov", "B": [[1, "x"]]}, "B"),
])
def test_parse_errors_name_the_field(obj, fragment):
    with pytest.raises(ParseError) as err:
        parse_immersion(obj)
    assert fragment in str(err.value)


# ---------------------------------------------------------------- verify command

def test_verify_hexagonal_all_pass(hex_file, tmp_path, capsys):
    out = tmp_path / "reports.json"
    code = main(["verify", hex_file, "--grid", "16,16", "--out", str(out)])
    assert code == 0
    reports = json.loads(out.read_text())
    assert [r["name"] for r in reports] == ["ball", "avg_h", "2d", "flat", "sphere",
                                            "main", "bow", "constant_k", "conjecture"]
    assert all(r["status"] == "pass" for r in reports)
    assert all(r["config"]["input_sha256"] for r in reports)


def test_verify_byte_identical_reruns(hex_file, tmp_path):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["verify", hex_file, "--grid", "16,16", "--out", str(out1)]) == 0
    assert main(["verify", hex_file, "--grid", "16,16", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_verify_bow_skipped_on_scaled_fixture(tmp_path):
    path = tmp_path / "halved.json"
    path.write_text(json.dumps({"type": "clifford", "m": 2, "scale": 0.5}))
    out = tmp_path / "rep.json"
    code = main(["verify", str(path), "--checks", "bow", "--grid", "16,16",
                 "--out", str(out)])
    assert code == 0
    reports = json.loads(out.read_text())
    assert reports[0]["status"] == "skipped"


def test_verify_out_of_ball_fails(tmp_path, clifford2):
    obj = immersion_to_obj(clifford2)
    obj["translate"] = [0.5, 0.0, 0.0, 0.0]
    path = tmp_path / "shifted.json"
    path.write_text(json.dumps(obj))
    code = main(["verify", str(path), "--grid", "16,16", "--out",
                 str(tmp_path / "rep.json")])
    assert code == 1


def test_verify_csv_format(hex_file, tmp_path):
    out = tmp_path / "rep.csv"
    code = main(["verify", hex_file, "--grid", "16,16", "--format", "csv",
                 "--out", str(out)])
    assert code == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "name,status,pass,margin,tolerance"
    assert len(rows) == 10


def test_verify_parse_error_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["verify", str(bad)]) == 2


# ---------------------------------------------------------------- analyze command

def test_analyze_clifford_summary(clifford_file, tmp_path):
    base = tmp_path / "report"
    code = main(["analyze", clifford_file, "--grid", "16,16", "--out", str(base)])
    assert code == 0
    summary = json.loads((tmp_path / "report.json").read_text())
    assert abs(summary["avg_zh"] - 1.5) < 1e-10
    assert abs(summary["avg_H"] - 2.0) < 1e-10
    assert summary["max_gauss_residual"] < 1e-9
    assert abs(summary["K_max"] - math.sqrt(2)) < 1e-8
    assert abs(summary["K_min"] - 1.0) < 1e-8
    with (tmp_path / "report.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["theta_1", "theta_2", "norm_f", "norm_H", "zh", "sc",
                       "k_min", "k_max", "beta"]
    assert len(rows) == 1 + 256


def test_analyze_hexagonal_constant_K(hex_file, tmp_path):
    base = tmp_path / "hexrep"
    assert main(["analyze", hex_file, "--grid", "16,16", "--out", str(base)]) == 0
    summary = json.loads((tmp_path / "hexrep.json").read_text())
    assert summary["K_max"] - summary["K_min"] < 1e-10


def test_analyze_rejects_degenerate(tmp_path):
    path = tmp_path / "flat.json"
    path.write_text(json.dumps({"type": "fourier", "n": 2, "q": 4,
                                "translate": [0.5, 0, 0, 0], "terms": []}))
    assert main(["analyze", str(path), "--out", str(tmp_path / "x")]) == 2


def test_analyze_malformed_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"type": "fourier", "n": 2, "q": 4,
                                "terms": [{"k": [1, 0], "a": [1, 0, 0], "b": [0, 0, 0, 0]}]}))
    assert main(["analyze", str(path)]) == 2
    assert "terms[0].a" in capsys.readouterr().err


# ---------------------------------------------------------------- design command

def test_design_validate_builtin(tmp_path):
    out = tmp_path / "hex.json"
    assert main(["design", "validate", "hex2", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["is_constant_curvature"] is True
    assert report["c"] == "1/2"
    assert report["K2"] == "3/2"
    assert report["is_optimal"] is True
    assert abs(report["K"] - 1.224744871391589) < 1e-12


def test_design_validate_axdiag3(tmp_path):
    out = tmp_path / "ax.json"
    assert main(["design", "validate", "axdiag3", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["K2"] == "7/3"
    assert report["is_optimal"] is False


def test_design_validate_matrix_file(tmp_path):
    mat = tmp_path / "hex.txt"
    mat.write_text("# hexagonal\n1 0\n0 1\n1 1\n")
    out = tmp_path / "rep.json"
    assert main(["design", "validate", str(mat), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["is_optimal"] is True


def test_design_rank_deficient_exit_2(tmp_path):
    mat = tmp_path / "bad.txt"
    mat.write_text("1 0\n2 0\n")
    assert main(["design", "validate", str(mat)]) == 2


def test_design_emit_then_verify_pipeline(tmp_path):
    emitted = tmp_path / "d4.json"
    assert main(["design", "emit", "d4", "--out", str(emitted)]) == 0
    out = tmp_path / "rep.json"
    code = main(["verify", str(emitted), "--checks", "flat", "--grid", "6,6,6,6",
                 "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())[0]
    assert report["status"] == "pass"
    assert abs(report["margin"]) < 1e-9


# ---------------------------------------------------------------- explore command

def test_explore_cli_runs(tmp_path):
    out = tmp_path / "probe.json"
    code = main(["explore", "--n", "2", "--q", "6", "--fmax", "1",
                 "--grid", "10,10", "--iterations", "25", "--restarts", "1",
                 "--seed", "42", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["counterexample_candidate"] is False
    assert payload["sup_zh"] >= 1.5 - 1e-3
    assert payload["best_immersion"]["type"] == "fourier"


# ---------------------------------------------------------------- selftest failure path

def test_selftest_failure_injection():
    results = list(_selftest_checks(seed=0, fail_injection=True))
    assert any(not ok for _, ok, _ in results)
