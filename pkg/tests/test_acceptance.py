"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria are checked at their stated tolerances and runtime limits. Two of
them fail by design; see the README section on the acceptance suite.
"""
import filecmp
import subprocess
import sys

import pytest

from genhilbert.acceptance import CRITERIA, format_line, run_criterion


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, capsys):
    res = run_criterion(number, seed=42, jobs=1)
    with capsys.disabled():
        print("\n" + format_line(res))
    assert res.passed, res.details
    assert res.runtime_ok, f"runtime {res.runtime:.2f} s exceeds {res.runtime_limit} s"


def test_criterion_12_cli_selftest_byte_identical(tmp_path, capsys):
    outs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "genhilbert.cli", "selftest", "--seed", "42", "--jobs", "8", "--out", str(out)],
            capture_output=True,
            text=True,
            timeout=600,
        )
        # exit status 1 only reports failed criteria; the files are still written
        assert proc.returncode in (0, 1), proc.stderr
        outs.append(out / "selftest_results.json")
    same = filecmp.cmp(outs[0], outs[1], shallow=False)
    with capsys.disabled():
        print(f"\n[{'PASS' if same else 'FAIL'}] criterion 12 (CLI): selftest --seed 42 --jobs 8 twice, results byte-identical={same}")
    assert same
