import subprocess
import sys
from pathlib import Path

import pytest

from avoidset.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main

SCEN = Path(__file__).resolve().parents[1] / "scenarios"


def _run(*args):
    return main([str(a) for a in args])


def test_audit_dyadic_passes(tmp_path):
    assert _run("audit-landmarks", "--scenario", SCEN / "systems" / "dyadic.ini", "--out", tmp_path) == EXIT_OK
    summary = (tmp_path / "audit_summary.txt").read_text()
    assert "status=pass" in summary
    assert (tmp_path / "audit.tsv").read_text().startswith("property")


def test_audit_wrong_gamma_exit_one(tmp_path):
    code = _run("audit-landmarks", "--scenario", SCEN / "systems" / "dyadic_wrong_gamma.ini", "--out", tmp_path)
    assert code == EXIT_FAIL
    assert "fail\tseparation_exponent" in (tmp_path / "audit_summary.txt").read_text()


def test_build_writes_reports(tmp_path):
    assert _run("build", "--scenario", SCEN / "ap3_f3.ini", "--out", tmp_path) == EXIT_OK
    names = {p.name for p in tmp_path.iterdir()}
    assert {"stage_000.cubes", "stage_001.cubes", "ledger.tsv", "stages.tsv", "notes.txt", "measure.tsv",
            "frostman.tsv", "dimension.tsv", "renormalization.txt", "validation.tsv"} <= names
    rows = (tmp_path / "validation.tsv").read_text().splitlines()[1:]
    assert rows and all("\tpass\t" in r for r in rows)


def test_measure_and_capset(tmp_path):
    assert _run("measure", "--scenario", SCEN / "ap3_f3.ini", "--out", tmp_path / "m") == EXIT_OK
    assert _run("capset-limit", "--scenario", SCEN / "ap3_f3.ini", "--out", tmp_path / "c") == EXIT_OK
    lines = (tmp_path / "c" / "capset.tsv").read_text().splitlines()
    assert lines[0] == "depth\tcount\texponent\treference" and len(lines) == 5


def test_missing_file_is_input_error(tmp_path):
    assert _run("build", "--scenario", tmp_path / "nope.ini", "--out", tmp_path) == EXIT_INPUT


def test_bad_scenario_is_input_error(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text((SCEN / "ap3_f3.ini").read_text().replace("x - 2*y + z", "x - 0.5*y + z"))
    assert _run("verify", "--scenario", bad, "--out", tmp_path / "o") == EXIT_INPUT


def test_missing_required_flag():
    with pytest.raises(SystemExit) as ei:
        main(["build"])
    assert ei.value.code == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "avoidset.cli", "audit-landmarks", "--scenario",
                          str(SCEN / "systems" / "fq3.ini"), "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "pass" in out.stdout
