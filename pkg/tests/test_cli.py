import json

import pytest

from metricforms.cli import (
    EXIT_IDENTITY,
    EXIT_INPUT,
    EXIT_NUMERIC,
    EXIT_OK,
    main,
)

GOOD_FILE = """
name stretched-plane
dim 2
coords u v
signature 2 0
const k=2.0
domain u -1 1
domain v -1 1
g 1 1 = 1 + k * u^2
g 2 2 = 1
"""


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestFactor:
    def test_minkowski_point_gives_signature_roots(self, capsys):
        code, out, err = run(capsys, "factor", "minkowski",
                             "--point", "1,0,0,0")
        assert code == EXIT_OK
        assert "0+1i" in out
        assert "residual |V Vt - g| = 0.000e+00" in out

    def test_symbolic_output(self, capsys):
        code, out, err = run(capsys, "factor", "sphere2")
        assert code == EXIT_OK
        assert "A_1" in out and "A_2" in out
        assert "PASS" in out

    def test_json_point_serializes_complex_pairs(self, capsys):
        code, out, err = run(capsys, "factor", "minkowski",
                             "--point", "0,0,0,0", "--json")
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["factor_matrix"][3][3] == [0.0, 1.0]
        assert doc["residual"] == 0.0

    def test_numeric_needs_point(self, capsys):
        code, out, err = run(capsys, "factor", "minkowski",
                             "--strategy", "numeric")
        assert code == EXIT_INPUT
        assert "point" in err

    def test_wrong_point_arity(self, capsys):
        code, out, err = run(capsys, "factor", "minkowski", "--point", "1,2")
        assert code == EXIT_INPUT


class TestAnalyze:
    def test_human_report(self, capsys):
        code, out, err = run(capsys, "analyze", "sphere2",
                             "--strategy", "diagonal", "--seed", "42")
        assert code == EXIT_OK
        assert "christoffel_route_agreement" in out
        assert "overall: PASS" in out

    def test_json_deterministic(self, capsys):
        args = ("analyze", "sphere2", "--seed", "42", "--json")
        code1, out1, _ = run(capsys, *args)
        code2, out2, _ = run(capsys, *args)
        assert code1 == code2 == EXIT_OK
        assert out1 == out2
        doc = json.loads(out1)
        assert doc["overall_pass"] is True
        assert doc["schema"] == "metricforms-report/1"

    def test_json_validates_against_schema(self, capsys):
        jsonschema = pytest.importorskip("jsonschema")
        from metricforms import REPORT_SCHEMA

        code, out, err = run(capsys, "analyze", "schwarzschild", "--json")
        assert code == EXIT_OK
        jsonschema.validate(json.loads(out), REPORT_SCHEMA)

    def test_numeric_strategy_rejected(self, capsys):
        code, out, err = run(capsys, "analyze", "sphere2",
                             "--strategy", "numeric")
        assert code == EXIT_INPUT

    def test_tol_scale_impossible_tolerance_fails(self, capsys):
        code, out, err = run(capsys, "analyze", "sphere2",
                             "--tol-scale", "1e-20")
        assert code == EXIT_IDENTITY


class TestCheck:
    def test_flat_exact_case_exit_zero(self, capsys):
        code, out, err = run(capsys, "check", "euclidean3-cartesian")
        assert code == EXIT_OK
        lines = [l for l in out.splitlines() if l.startswith(("PASS", "FAIL"))]
        assert all(l.startswith("PASS") for l in lines)

    def test_every_catalog_manifold(self, capsys, catalog):
        for name in catalog:
            code, out, err = run(capsys, "check", name, "--points", "6")
            assert code == EXIT_OK, name


class TestClassify:
    def test_verdict_lines(self, capsys):
        code, out, _ = run(capsys, "classify", "sphere2")
        assert code == EXIT_OK
        assert "CURVED" in out
        code, out, _ = run(capsys, "classify", "minkowski")
        assert "CLOSED_FLAT" in out

    def test_caveat_case_prints_both_statuses(self, capsys):
        code, out, _ = run(capsys, "classify", "minkowski-cylindrical")
        assert code == EXIT_OK
        assert "CURVED" in out
        assert "max|dA|" in out and "max|Riemann|" in out

    def test_json(self, capsys):
        code, out, _ = run(capsys, "classify", "euclidean3-spherical",
                           "--json")
        doc = json.loads(out)
        assert doc["verdict"] == "CURVED"
        assert doc["max_riemann"] <= 1e-8


class TestGeodesic:
    def test_trajectory_file(self, capsys, tmp_path):
        out_path = tmp_path / "traj.csv"
        code, out, _ = run(capsys, "geodesic", "sphere2",
                           "--start", "1.5707963,0.4", "--velocity", "0,1",
                           "--steps", "50", "--step-size", "0.01",
                           "--out", str(out_path))
        assert code == EXIT_OK
        lines = out_path.read_text().splitlines()
        assert lines[0].startswith("s,x_theta,x_phi")
        assert len(lines) == 52   # header + start + 50 steps

    def test_json_output(self, capsys):
        code, out, _ = run(capsys, "geodesic", "euclidean2-cartesian",
                           "--start", "0,0", "--velocity", "1,0",
                           "--steps", "10", "--step-size", "0.01", "--json")
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["route_divergence"] <= 1e-6
        assert len(doc["classical"]["x"]) == 11

    def test_start_outside_domain(self, capsys):
        code, out, err = run(capsys, "geodesic", "sphere2",
                             "--start", "5,0.4", "--velocity", "0,1")
        assert code == EXIT_NUMERIC


class TestErrors:
    def test_unknown_metric_is_input_error(self, capsys):
        code, out, err = run(capsys, "check", "nope")
        assert code == EXIT_INPUT

    def test_bad_file_is_input_error(self, capsys, tmp_path):
        path = tmp_path / "bad.metric"
        path.write_text(GOOD_FILE.replace("signature 2 0", "signature 9 9"))
        code, out, err = run(capsys, "check", str(path))
        assert code == EXIT_INPUT
        assert "error" in err

    def test_user_file_works_end_to_end(self, capsys, tmp_path):
        path = tmp_path / "plane.metric"
        path.write_text(GOOD_FILE)
        code, out, err = run(capsys, "check", str(path), "--points", "6")
        assert code == EXIT_OK

    def test_singular_user_metric_is_numeric_fault(self, capsys, tmp_path):
        path = tmp_path / "singular.metric"
        path.write_text("""
name singular
dim 2
coords x y
signature 2 0
domain x -1 1
domain y -1 1
g 1 1 = 1
g 1 2 = 1
g 2 2 = 1
""")
        code, out, err = run(capsys, "check", str(path))
        assert code == EXIT_NUMERIC

    def test_usage_error_exits_3(self, capsys):
        code = main(["analyze"])
        capsys.readouterr()
        assert code == EXIT_INPUT
