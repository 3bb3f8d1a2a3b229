import json
import math

import pytest

import verifem


def test_estimator_names():
    assert "cre_analytic" in verifem.estimator_names


def test_cre_bounds_exact_error():
    r = verifem.estimate("fig1_square", 8, "cre_analytic")
    assert r["kind"] == "guaranteed_upper"
    assert r["effectivity"] >= 1.0
    assert math.isclose(math.sqrt(sum(x * x for x in r["indicators"])), r["eta"], rel_tol=1e-12)


def test_unknown_problem_raises():
    with pytest.raises(ValueError):
        verifem.estimate("nope", 4, "zz")


def test_config_errors_carry_line():
    ok, line, _ = verifem.check_config("problem = sin_sin\nestimators = zz\nbogus = 1\n")
    assert not ok and line == 3


def test_run_writes_report(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("problem = sin_sin\nn = 4\nestimators = zz, cre_analytic\nvtk = false\n")
    code, err = verifem.run("estimate", cfg, tmp_path / "out")
    assert code == 0, err
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report
