import json

import pytest

from tauberian.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_dist_csv(capsys):
    code, out, err = run(["analyze-dist", "--dist", "zeta_diff", "--r", "2", "--x-max", "1e4", "--format", "csv"],
                         capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,tail,slope"
    assert float(lines[-1].split(",")[2]) == pytest.approx(-2.0, abs=0.01)
    assert "slope" in err  # achieved values are logged


def test_outputs_are_byte_identical(tmp_path, capsys):
    paths = [tmp_path / f"o{i}.json" for i in range(2)]
    for p in paths:
        assert main(["verify-lemmas", "--suite", "signs", "--output", str(p), "-q"]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    doc = json.loads(paths[0].read_text())
    assert doc["schema"] == "v1" and doc["result"]["passed"]


def test_config_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "analyze-dist", "dist": "pareto", "r": 2.0, "x_max": 100.0}))
    code, out, _ = run(["analyze-dist", "--config", str(cfg), "--r", "3"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["params"]["r"] == 3.0 and doc["params"]["x_max"] == 100.0
    assert doc["result"]["slope"][-1] == pytest.approx(-3.0)


@pytest.mark.parametrize("content", ['{"bogus": 1}', "not json", '[1, 2]', '{"command": "mg1"}',
                                     '{"r": [1, 2]}'])
def test_bad_config_exits_2(tmp_path, capsys, content):
    cfg = tmp_path / "c.json"
    cfg.write_text(content)
    assert run(["analyze-dist", "--config", str(cfg)], capsys)[0] == 2


def test_bad_flags_and_domain_exit_2(capsys):
    assert run(["analyze-dist", "--nope"], capsys)[0] == 2
    assert run(["analyze-dist", "--r", "-1"], capsys)[0] == 2
    assert run(["appendix", "--params", "2"], capsys)[0] == 2
    assert run(["appendix", "--case", "A1", "--params", "1,3"], capsys)[0] == 2


def test_numeric_failure_exits_3_with_diagnostic(capsys):
    code, out, _ = run(["mg1", "--a-mean", "1.5", "--N", "100"], capsys)
    assert code == 3
    diag = json.loads(out)
    assert diag["error"] == "InstabilityError" and diag["schema"] == "v1"


def test_theorem_check_pareto(capsys):
    code, out, _ = run(["theorem-check", "--dist", "pareto", "--r", "1"], capsys)
    assert code == 0
    assert -1.05 <= json.loads(out)["result"]["eta_estimate"] <= -0.95


def test_bound_even_L_has_null_lower(capsys):
    code, out, _ = run(["bound", "--r", "1", "--L", "2", "--x-max", "1e3", "-q"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert res["lower"][0] is None and res["upper"][0] > 0


def test_bound_csv(capsys):
    code, out, _ = run(["bound", "--r", "1", "--x-max", "1e3", "--format", "csv", "-q"], capsys)
    assert code == 0 and out.startswith("x,lower,upper,tail_exact")


def test_verify_correction_suite(capsys):
    code, out, _ = run(["verify-lemmas", "--suite", "correction", "--format", "csv"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "lemma,name,status,achieved,tolerance"
    assert all(line.split(",")[2] == "pass" for line in out.splitlines()[1:])


def test_fit_singularity(capsys):
    code, out, _ = run(["fit-singularity", "--dist", "zeta_diff", "--r", "2"], capsys)
    res = json.loads(out)["result"]
    assert code == 0 and res["kind"] == "power_log" and res["sign_ok"]


def test_mg1_report(capsys):
    code, out, _ = run(["mg1", "--N", "2000"], capsys)
    res = json.loads(out)["result"]
    assert code == 0 and res["eta_b"] == pytest.approx(-3, abs=0.05)


def test_appendix(capsys):
    code, out, _ = run(["appendix", "--case", "A2", "--params", "1,2", "--x-min", "100", "--x-max", "1000"],
                       capsys)
    assert code == 0
    assert json.loads(out)["result"]["scaled"][-1] == pytest.approx(1.0, rel=0.01)
