from __future__ import annotations

import json

import pytest

from fermistar.verify import ConfigError, SuiteConfig, run
from fermistar.verify.cli import main
from fermistar.verify.report import SCHEMA_VERSION, CheckRecord, Report
from fermistar.verify.suites import SUITE_CAPS, suite_rng


@pytest.mark.parametrize("kwargs", [
    {"m": 3}, {"m": 18}, {"m": 0}, {"hbar": 0.0}, {"tol": -1.0}, {"seed": -1},
    {"seed": 2 ** 64}, {"suites": ("nope",)}, {"samples": 0},
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SuiteConfig(**kwargs)


def test_config_normalises_suites():
    cfg = SuiteConfig(suites=("star", "algebra", "star"))
    assert cfg.suites == ("algebra", "star")
    assert SuiteConfig(suites="all").suites == tuple(SUITE_CAPS)
    assert "output" not in SuiteConfig(output="x.json").to_json()


def test_suite_rng_is_seeded_per_suite():
    a = suite_rng(7, "star").integers(0, 2 ** 32, 4)
    b = suite_rng(7, "star").integers(0, 2 ** 32, 4)
    c = suite_rng(7, "algebra").integers(0, 2 ** 32, 4)
    assert list(a) == list(b) and list(a) != list(c)


def test_trivial_star_run_has_zero_residuals():
    report = run(SuiteConfig(m=2, suites=("star",), samples=1))
    assert report.passed
    exact = [r for r in report.records if r.max_residual == 0]
    assert len(exact) >= len(report.records) - 2
    assert all(r.m == 2 for r in report.records)


def test_states_suite_reproduces_worked_example():
    report = run(SuiteConfig(m=4, suites=("states",), samples=2))
    worked = [r for r in report.records if r.anchor == "states.worked_example"]
    assert worked and worked[0].passed
    assert report.passed


def test_report_is_deterministic_and_parallel_safe():
    cfg = SuiteConfig(m=4, seed=7, suites=("algebra", "star", "polarization"), samples=2)
    a = run(cfg).to_json(timing=False)
    b = run(cfg, jobs=3).to_json(timing=False)
    assert a == b
    assert a["schema"] == SCHEMA_VERSION == 1


def test_report_pass_flag():
    ok = CheckRecord("a", "x.a", "pass", 0.0, 0.1)
    bad = CheckRecord("b", "x.b", "fail", 1.0, 0.1)
    assert Report({}, [ok]).passed
    assert not Report({}, [ok, bad]).passed
    inf = CheckRecord("c", "x.c", "error", float("inf"), 0.0)
    assert Report({}, [inf]).to_json()["records"][0]["max_residual"] == "inf"


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["verify", "algebra", "--m", "2", "--samples", "1", "--json", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1 and doc["passed"] is True
    assert doc["config"]["m"] == 2 and doc["config"]["suites"] == ["algebra"]
    assert all({"name", "anchor", "status", "max_residual", "runtime"} <= set(r) for r in doc["records"])
    # a tolerance far below rounding error makes numeric checks fail
    assert main(["verify", "--suite", "equivariance", "--tol", "1e-30", "--samples", "1", "--quiet"]) == 1
    assert main(["verify", "star", "--m", "5"]) == 2
    assert main(["verify", "nonsense"]) == 2
    assert main(["verify", "algebra", "--m", "2", "--samples", "1",
                 "--json", str(tmp_path / "missing" / "r.json")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--m", "four"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_cli_quiet_prints_summary_only(capsys):
    assert main(["verify", "algebra", "--m", "2", "--samples", "1", "--quiet"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 and lines[0].endswith("checks passed")
