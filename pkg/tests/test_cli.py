import csv
import io
import json
import re
from fractions import Fraction

import numpy as np
import pytest

from mtransform import cli
from mtransform.exponential import chain_parameters, nt_thresholds


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestSweep:
    def test_concentrated_three_plateaus(self, capsys):
        code, out, _ = run(["sweep", "--kernel", "concentrated", "--M", "3", "--m1", "0.5", "--mM", "0.25",
                            "--potential", "truncq", "--zmin", "0", "--zmax", "2", "--samples", "801"], capsys)
        assert code == 0
        r = rows(out)
        assert list(r[0]) == ["z", "Qhat", "Q", "theta", "branch"]
        locked = {float(x["theta"]) for x in r if x["branch"].startswith(("lock", "convex", "broken"))}
        assert {round(t, 12) for t in locked} == {0.0, round(1 / 3, 12), round(2 / 3, 12), 1.0}

    def test_exponential_staircase_non_decreasing(self, capsys):
        code, out, _ = run(["sweep", "--kernel", "exp", "--sigma", "1", "--potential", "truncq",
                            "--zmin", "0", "--zmax", "2", "--samples", "401"], capsys)
        assert code == 0
        r = rows(out)
        assert "N_star" in r[0]
        theta = np.array([float(x["theta"]) for x in r])
        assert np.all(np.diff(theta) >= 0)
        assert theta[0] == 0 and theta[-1] == 1

    def test_convex_potential_theta_extremes(self, capsys):
        code, out, _ = run(["sweep", "--kernel", "concentrated", "--M", "2", "--potential", "convaffine",
                            "--tau", "1.5", "--samples", "101"], capsys)
        assert code == 0
        assert {float(x["theta"]) for x in rows(out)} <= {0.0, 1.0}

    def test_full_precision(self, capsys):
        _, out, _ = run(["sweep", "--kernel", "nn", "--m1", "0.3", "--potential", "dwell", "--zmin", "0.1",
                         "--zmax", "0.7", "--samples", "7"], capsys)
        for x in rows(out):
            assert float(x["Qhat"]) == float(repr(float(x["Qhat"])))
        assert rows(out)[1]["z"] == "0.20000000000000001"

    def test_deterministic(self, tmp_path):
        argv = ["sweep", "--kernel", "exp", "--sigma", "0.7", "--potential", "convaffine", "--samples", "201"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.main(argv + ["--out", str(a)]) == 0
        assert cli.main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_json(self, capsys):
        code, out, _ = run(["sweep", "--kernel", "concentrated", "--potential", "dwell", "--samples", "5",
                            "--format", "json"], capsys)
        data = json.loads(out)
        assert code == 0 and len(data["rows"]) == 5 and "diagram" in data

    @pytest.mark.parametrize("argv", [
        ["sweep", "--kernel", "exp", "--potential", "dwell"],
        ["sweep", "--samples", "1"],
        ["sweep", "--zmin", "2", "--zmax", "1"],
        ["sweep", "--kernel", "concentrated", "--M", "1"],
        ["sweep", "--kernel", "exp", "--sigma", "-1"],
        ["sweep", "--potential", "truncq", "--zstar", "2", "--eta", "1"],
    ])
    def test_usage_errors(self, argv, capsys):
        code, _, err = run(argv, capsys)
        assert code == 2 and err

    def test_unsupported_pair_lists_alternatives(self, capsys):
        _, _, err = run(["sweep", "--kernel", "exp", "--potential", "biqdw"], capsys)
        assert "truncq" in err and "oracle" in err.lower()


class TestDiagram:
    def test_plateau_boundaries_follow_thresholds(self, capsys):
        code, out, _ = run(["diagram", "--kernel", "exp", "--potential", "truncq", "--inv-sigma", "0.5,1",
                            "--zmin", "0", "--zmax", "3", "--samples", "3001"], capsys)
        assert code == 0
        r = rows(out)
        assert list(r[0]) == ["inv_sigma", "z", "theta", "region"]
        for inv in (0.5, 1.0):
            p = chain_parameters(1 / inv)
            lo, _ = nt_thresholds(p, 1.0, 1)
            broken = [float(x["z"]) for x in r if float(x["inv_sigma"]) == inv and x["region"] == "plateau:1"]
            assert min(broken) == pytest.approx(lo, abs=1e-3)

    def test_regions(self, capsys):
        _, out, _ = run(["diagram", "--kernel", "concentrated", "--M", "3", "--potential", "truncq",
                         "--inv-sigma-min", "1", "--inv-sigma-max", "2", "--inv-sigma-samples", "2",
                         "--samples", "201"], capsys)
        regions = {x["region"] for x in rows(out)}
        assert "bridge" in regions and "plateau:1/3" in regions
        for reg in regions - {"bridge"}:
            Fraction(reg.split(":")[1])

    def test_large_sigma_rows_widen_bridges(self, capsys):
        _, out, _ = run(["diagram", "--kernel", "concentrated", "--M", "2", "--potential", "truncq",
                         "--inv-sigma", "0.05,2", "--samples", "801"], capsys)
        r = rows(out)
        share = {inv: np.mean([x["region"] == "bridge" for x in r if float(x["inv_sigma"]) == inv])
                 for inv in (0.05, 2.0)}
        assert share[0.05] > share[2.0]

    def test_empty_grid(self, capsys):
        code, _, err = run(["diagram", "--inv-sigma", ""], capsys)
        assert code == 2 and err


class TestVerify:
    def test_bounds_suite(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, _, err = run(["verify", "--suite", "bounds", "--out", str(out)], capsys)
        assert code == 0
        assert re.search(r"^\[PASS\] criterion +1 ", err, re.M)
        report = json.loads(out.read_text())
        assert report["ok"] and {c["number"] for c in report["criteria"]} == {1, 10}

    def test_injected_perturbation_is_detected(self, tmp_path, capsys):
        code, _, _ = run(["verify", "--suite", "exponential", "--inject-cn-perturbation", "1e-3",
                          "--out", str(tmp_path / "r.json"), "--quiet"], capsys)
        assert code == 1

    def test_unknown_suite(self, capsys):
        code, _, _ = run(["verify", "--suite", "nope"], capsys)
        assert code == 2
