import csv
import io
import json
import math
import os
import sys

sys.path.append(os.path.join(os.path.dirname(__file__), "src"))

import pytest

import cli
from core.exceptions import DepthExhaustedError, NotRayAlignedError, UnachievableFrequencyError
from services import tetra_service


def write_config(path, centers, alpha):
    path.write_text(json.dumps({"centers": centers, "alpha": alpha}))
    return str(path)


def tetra_centers(edge=math.pi):
    return [list(p) for p in tetra_service.tetra_vertices(edge).points]


@pytest.fixture
def one_center(tmp_path):
    return write_config(tmp_path / "one.json", [[0, 0, 0]], [{"re": 1.0, "im": 0.0}])


def read_csv(path):
    lines = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_solve_one_center(one_center, tmp_path):
    out = tmp_path / "roots.json"
    code = cli.main(["solve", "--input", one_center, "--window=-1,1,-14,1", "--output", str(out)])
    assert code == cli.EXIT_OK
    roots = json.loads(out.read_text())["roots"]
    assert len(roots) == 1
    assert roots[0]["mult"] == 1
    assert roots[0]["im"] == pytest.approx(-12.566371, abs=1e-6)
    assert roots[0]["re"] == pytest.approx(0.0, abs=1e-10)


def test_solve_tetra_optimizer_reports_a_triple_root(tmp_path):
    a = tetra_service.optimal_alpha_oracle(0.5, math.pi).alpha_star
    path = write_config(tmp_path / "tetra.json", tetra_centers(), [a] * 4)
    out = tmp_path / "roots.csv"
    code = cli.main(["solve", "--input", path, "--window=0.45,0.55,-0.19,-0.09", "--format", "csv", "--output", str(out)])
    assert code == cli.EXIT_OK
    rows = read_csv(out)
    assert [int(r["mult"]) for r in rows] == [3]


def test_malformed_json_exits_with_position(tmp_path, caplog):
    path = tmp_path / "broken.json"
    path.write_text('{"centers": [[0, 0, 0]],\n "alpha": [1.0,, 2]}')
    code = cli.main(["solve", "--input", str(path)])
    assert code == cli.EXIT_INPUT
    assert f"{path}:2:" in caplog.text


def test_length_mismatch_exits_with_input_error(tmp_path):
    path = write_config(tmp_path / "bad.json", [[0, 0, 0], [1, 0, 0]], [1.0])
    assert cli.main(["solve", "--input", path]) == cli.EXIT_INPUT


def test_solver_failures_map_to_exit_two():
    assert cli.exit_code_for(DepthExhaustedError("stuck", [(0.0, 1.0, -1.0, 0.0)])) == cli.EXIT_SOLVER
    assert cli.exit_code_for(NotRayAlignedError("not aligned")) == cli.EXIT_SOLVER
    assert cli.exit_code_for(UnachievableFrequencyError("f = 1")) == cli.EXIT_INPUT


def test_certify_nmin4_optimum_passes(tmp_path):
    optimum = tetra_service.optimal_alpha_oracle(1.5, math.pi)
    path = write_config(tmp_path / "tetra.json", tetra_centers(), [optimum.alpha_star] * 4)
    out = tmp_path / "cert.json"
    code = cli.main(["certify", "--input", path, "--k", f"{optimum.k.real},{optimum.k.imag}", "--output", str(out)])
    assert code == cli.EXIT_OK
    certificate = json.loads(out.read_text())
    assert certificate["passed"] is True
    assert certificate["residual"] < 1e-8


def test_certify_generic_resonance_fails(tmp_path):
    path = write_config(tmp_path / "pair.json", [[0, 0, 0], [1, 0, 0]], [0.05, 0.2])
    roots_out = tmp_path / "roots.json"
    assert cli.main(["solve", "--input", path, "--window=0.5,6,-4,-0.01", "--output", str(roots_out)]) == cli.EXIT_OK
    root = json.loads(roots_out.read_text())["roots"][0]
    code = cli.main(["certify", "--input", path, "--k", f"{root['re']},{root['im']}", "--output", str(tmp_path / "c.json")])
    assert code == cli.EXIT_CERTIFICATE


def test_certify_with_hint(one_center, tmp_path):
    out = tmp_path / "cert.json"
    code = cli.main(["certify", "--input", one_center, "--hint", "0.1,-12.4", "--output", str(out)])
    assert code == cli.EXIT_OK
    assert json.loads(out.read_text())["k"]["im"] == pytest.approx(-4 * math.pi, abs=1e-9)


def test_certify_without_k_or_hint(one_center):
    assert cli.main(["certify", "--input", one_center]) == cli.EXIT_SOLVER


def test_certify_non_root(one_center):
    assert cli.main(["certify", "--input", one_center, "--k", "1,-1"]) == cli.EXIT_SOLVER


def test_frontier_is_deterministic_and_marks_unachievable_bins(tmp_path):
    path = write_config(tmp_path / "tetra.json", tetra_centers(), ["inf"] * 4)
    outputs = []
    for name, threads in (("a.csv", "0"), ("b.csv", "1")):
        out = tmp_path / name
        code = cli.main([
            "frontier", "--input", path, "--f-range", "0,2", "--grid", "5", "--budget", "50",
            "--seed", "11", "--threads", threads, "--format", "csv", "--output", str(out),
        ])
        assert code == cli.EXIT_OK
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    rows = read_csv(tmp_path / "a.csv")
    assert [float(r["f"]) for r in rows] == pytest.approx([0.2, 0.6, 1.0, 1.4, 1.8])
    assert rows[2]["status"] == "unachievable"
    assert "r_oracle" in rows[0]
    assert list(rows[0])[:8] == ["f", "r", "alpha_1", "alpha_2", "alpha_3", "alpha_4", "k_re", "k_im"]
    assert outputs[0].decode().rstrip().splitlines()[-1].startswith("# max |r - r_oracle|")


def test_tetra_check_matches_the_oracle(tmp_path):
    out = tmp_path / "check.csv"
    code = cli.main([
        "tetra-check", "--f-range", "1.1,1.9", "--grid", "2", "--budget", "40", "--format", "csv", "--output", str(out),
    ])
    assert code == cli.EXIT_OK
    rows = read_csv(out)
    assert len(rows) == 2
    for row in rows:
        assert abs(float(row["r_solver"]) - float(row["r_oracle"])) <= 1e-6
        assert float(row["max|dalpha|"]) <= 1e-6


def test_refine_from_a_seed(tmp_path):
    optimum = tetra_service.optimal_alpha_oracle(1.5, math.pi)
    path = write_config(tmp_path / "seed.json", tetra_centers(), [optimum.alpha_star + 1e-4 * j for j in range(4)])
    out = tmp_path / "point.json"
    code = cli.main(["refine", "--input", path, "--f", "1.5", "--r", str(optimum.r + 1e-3), "--output", str(out)])
    assert code == cli.EXIT_OK
    point = json.loads(out.read_text())
    assert point["r"] == pytest.approx(optimum.r, abs=1e-7)
    assert point["certificate"]["passed"] is True


def test_bounds_report(tmp_path):
    path = write_config(tmp_path / "pair.json", [[0, 0, 0], [1, 0, 0]], [0.0, 0.0])
    out = tmp_path / "report.json"
    code = cli.main(["bounds", "--input", path, "--window=-10,10,-8,0.5", "--output", str(out)])
    assert code == cli.EXIT_OK
    assert json.loads(out.read_text())["violations"] == []


def test_expand(tmp_path):
    path = write_config(tmp_path / "pair.json", [[0, 0, 0], [2, 0, 0]], [0.1, "inf"])
    out = tmp_path / "ep.json"
    assert cli.main(["expand", "--input", path, "--output", str(out)]) == cli.EXIT_OK
    payload = json.loads(out.read_text())
    assert payload["n"] == 1 and payload["nu"] == 0
    assert "bounds" not in payload

    path = write_config(tmp_path / "pair2.json", [[0, 0, 0], [2, 0, 0]], [0.1, 0.2])
    assert cli.main(["expand", "--input", path, "--output", str(out)]) == cli.EXIT_OK
    payload = json.loads(out.read_text())
    assert [t["q"] for t in payload["terms"]] == pytest.approx([0.0, 4.0])
    assert payload["bounds"]["c11"] == pytest.approx(0.5)
