"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py`` (a PASS/FAIL line per criterion is
printed in the terminal summary) or ``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import sys
import time
from pathlib import Path

import pytest

from orbitresponse import validation as v
from orbitresponse.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
LINES: list[str] = []


def _record(result: v.CheckResult, elapsed: float) -> v.CheckResult:
    LINES.append(f"{result.line()} [{elapsed:.1f}s]")
    print(LINES[-1])
    return result


def _run(check) -> v.CheckResult:
    start = time.perf_counter()
    return _record(check(v.Settings()), time.perf_counter() - start)


def test_criterion_1_doubling_map():
    assert _run(v.check_doubling).passed


def test_criterion_2_benchmark_response():
    assert _run(v.check_benchmark).passed


def test_criterion_3_nonlinear_family():
    assert _run(v.check_nonlinear).passed


def test_criterion_4_trace_and_determinant_identities():
    assert _run(v.check_trace_identities).passed


def test_criterion_5_derivatives():
    assert _run(v.check_derivatives).passed


def test_criterion_6_circle_decay():
    assert _run(v.check_decay).passed


def test_criterion_7_cat_map_exact():
    assert _run(v.check_torus_exact).passed


def test_criterion_8_perturbed_cat_map():
    assert _run(v.check_torus_perturbed).passed


def test_criterion_9_validate_threads_byte_identical(tmp_path):
    start = time.perf_counter()
    outs = []
    for threads in (1, 8):
        path = tmp_path / f"validate_{threads}.json"
        main(["validate", "--config", str(CONFIGS / "validate_quick.toml"), "--threads", str(threads),
              "--out", str(path)])
        outs.append(path.read_bytes())
    same = outs[0] == outs[1]
    result = v.CheckResult("9 validate --threads 1 vs 8 byte-identical", same, 0.0, {"identical": same})
    assert _record(result, time.perf_counter() - start).passed


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
