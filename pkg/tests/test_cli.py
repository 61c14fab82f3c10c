import json
import subprocess
import sys
from pathlib import Path

import pytest

from selfdual import io
from selfdual.cli import main


def write_config(tmp_path, **entries):
    cfg = {"schema": 1, **entries}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg, indent=1))
    return p


SMALL_NS = dict(scenario="ns2d", grid={"n": 16}, time={"N": 16},
                forcing={"preset": "random_seeded", "amplitude": 0.05})


def test_solve_ns2d_small_writes_artifacts(tmp_path, capsys):
    cfg = write_config(tmp_path, **SMALL_NS)
    out = tmp_path / "run"
    assert main(["solve", str(cfg), "--output-dir", str(out)]) == 0
    report = json.loads((out / "run_report.json").read_text())
    for name in report["artifacts"]:
        assert (out / name).exists()
    assert report["passed"] and report["certified"]
    assert report["solver"]["termination"] == "value_certified"
    assert report["checks"]["oracle_agreement"]["pass"]
    assert set(report["functional"]) >= {"total", "energy_residual", "pde_residual", "boundary_residual", "gaps"}
    assert report["regularity_ratio"]["count"] == 17
    assert (out / "trace.csv").read_text().splitlines()[0] == "iter,total,grad_norm,step"
    P = io.read_path_binary(out / "path.bin")
    assert P.N == 16 and P.grid.n == 16
    assert "PASS" in capsys.readouterr().out


def test_exit_status_matches_report_checks(tmp_path):
    cfg = write_config(tmp_path, **SMALL_NS, solver={"max_iters": 1})
    out = tmp_path / "run"
    assert main(["solve", str(cfg), "--output-dir", str(out)]) == 1
    report = json.loads((out / "run_report.json").read_text())
    assert not report["passed"]
    assert report["passed"] == all(c["pass"] for c in report["checks"].values())


def test_deterministic_given_seed(tmp_path):
    cfg = write_config(tmp_path, **SMALL_NS)
    reports = []
    for name in ("a", "b"):
        assert main(["solve", str(cfg), "--output-dir", str(tmp_path / name), "--seed", "7"]) == 0
        reports.append((tmp_path / name / "run_report.json").read_text())
        assert (tmp_path / name / "path.bin").read_bytes() == (tmp_path / "a" / "path.bin").read_bytes()
    assert reports[0] == reports[1]
    assert json.loads(reports[0])["seed"] == 7


def test_malformed_config_exits_2_without_artifacts(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"schema": 1,\n "scenario": "ns2d",\n "grid": {"n": 12}}')
    out = tmp_path / "run"
    assert main(["solve", str(p), "--output-dir", str(out)]) == 2
    assert not out.exists()
    assert "line 3" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    assert main(["solve", str(tmp_path / "none.json"), "--output-dir", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_unknown_suite_exits_2(capsys):
    assert main(["verify", "nonsense"]) == 2
    assert "unknown suite" in capsys.readouterr().err


def test_bad_arguments_exit_2():
    assert main([]) == 2
    assert main(["solve"]) == 2


def test_verify_boundary_suite(capsys):
    assert main(["verify", "boundary"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out


def test_stationary_scenario_writes_field(tmp_path):
    cfg = write_config(tmp_path, scenario="ns_stationary", grid={"n": 16})
    out = tmp_path / "run"
    assert main(["solve", str(cfg), "--output-dir", str(out)]) == 0
    report = json.loads((out / "run_report.json").read_text())
    assert report["recovery_error"] <= 1e-5
    assert (out / "field.bin").exists() and (out / "field.csv").exists()


def test_stokes_scenario_reports_exact_comparison(tmp_path):
    cfg = write_config(tmp_path, scenario="stokes_decay", grid={"n": 16}, time={"N": 32})
    out = tmp_path / "run"
    assert main(["solve", str(cfg), "--output-dir", str(out)]) == 0
    report = json.loads((out / "run_report.json").read_text())
    assert report["exact_comparison"] <= 1e-5
    assert report["oracle"] is None


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "selfdual", "verify", "nonsense"], capture_output=True, text=True)
    assert r.returncode == 2


CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIG_DIR.glob("*.json")))
def test_example_configs_are_valid(name):
    from selfdual.config import load_config

    assert load_config(CONFIG_DIR / name).scenario
