"""The twelve acceptance criteria, run once through ``mtransform verify --suite all``.

Each test prints one line.  Criteria 2 and 6 contain a check that the
implementation cannot meet (see the decisions ledger); they are strict
xfails on the full criterion, and their remaining checks are asserted
separately.
"""

import json
import time

import pytest

from conftest import ACCEPTANCE_LINES
from mtransform import cli
from mtransform.acceptance import KNOWN_UNATTAINABLE

UNATTAINABLE = {n: k for n, k in KNOWN_UNATTAINABLE}


@pytest.fixture(scope="module")
def report(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify") / "report.json"
    t0 = time.perf_counter()
    code = cli.main(["verify", "--suite", "all", "--out", str(out), "--quiet"])
    wall = time.perf_counter() - t0
    data = json.loads(out.read_text())
    return {"code": code, "wall": wall, "data": data,
            "criteria": {c["number"]: c for c in data["criteria"]}}


def emit(c):
    verdict = "PASS" if c["status"] == "pass" else "FAIL"
    failing = [k for k, v in c["checks"].items() if not v]
    note = f" [expected: {', '.join(failing)}]" if c["status"] == "expected-fail" else ""
    line = f"criterion {c['number']:2d} {verdict} {c['title']} ({c['runtime']:.1f}s){note}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def assert_passes(c):
    emit(c)
    assert c["status"] == "pass", {k: v for k, v in c["checks"].items() if not v}


@pytest.mark.parametrize("number", [1, 3, 4, 5, 7, 8, 9, 10, 11])
def test_criterion(report, number):
    assert_passes(report["criteria"][number])


@pytest.mark.xfail(strict=True, reason="N=8/12/16 endpoint lattices decay like 1/N: the 12->16 gap ratio is 0.80")
def test_criterion_2(report):
    assert_passes(report["criteria"][2])


@pytest.mark.xfail(strict=True, reason="s_N^- - z_lower decays like 0.93/N and is 4.65e-3 at N=200, not 1e-6")
def test_criterion_6(report):
    assert_passes(report["criteria"][6])


@pytest.mark.parametrize("number", [2, 6])
def test_attainable_parts(report, number):
    c = report["criteria"][number]
    failing = {k for k, v in c["checks"].items() if not v}
    assert failing == {UNATTAINABLE[number]}
    assert c["status"] == "expected-fail" and c["known_unattainable"]


def test_criterion_12(report):
    c = report["criteria"][12]
    emit(c)
    assert report["code"] == 0
    assert report["wall"] < 300
    assert c["status"] == "pass"
