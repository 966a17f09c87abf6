import json

import pytest

from lib.cli import build_parser, main
from lib.errors import UsageError


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_gen_is_deterministic(capsys):
    argv = ["gen", "--kind", "simplex", "--dim", "2", "--n", "10", "--seed", "3"]
    code, first = run(capsys, *argv)
    _, second = run(capsys, *argv)
    assert code == 0
    assert first == second
    document = json.loads(first)
    assert document["dim"] == 2
    assert len(document["points"]) == 10


def test_gen_rejects_bad_dimension(capsys):
    code, out = run(capsys, "gen", "--kind", "simplex", "--dim", "9")
    assert code == 1
    assert json.loads(out)["error"] == "InvalidParameterError"


def test_unknown_kind_is_an_argument_error():
    with pytest.raises(UsageError):
        build_parser().parse_args(["gen", "--kind", "torus"])


@pytest.mark.parametrize("argv", [
    ["gen", "--kind", "torus"],
    ["width"],
    ["no-such-command"],
])
def test_usage_errors_exit_with_status_one(capsys, argv):
    code, out = run(capsys, *argv)
    assert code == 1
    assert json.loads(out)["error"] == "UsageError"


@pytest.mark.parametrize("other, verdict", [
    ("square_shifted.json", "Disjoint"),
    ("triangle.json", "Intersecting"),
    ("box_halfspaces.json", "Intersecting"),
])
def test_intersect_fixtures(capsys, fixtures_dir, other, verdict):
    code, out = run(capsys, "intersect", "--in", str(fixtures_dir / "square.json"),
                    "--in", str(fixtures_dir / other), "--timings")
    document = json.loads(out)
    assert code == 0
    assert document["verdict"] == verdict
    assert "query" in document["timings"]


def test_intersect_generated_pair(capsys, tmp_path):
    pair_path = tmp_path / "pair.json"
    assert main(["gen", "--kind", "near-touching-pair", "--n", "20", "--seed", "2", "--margin", "3",
                 "--out", str(pair_path)]) == 0
    assert json.loads(pair_path.read_text())["certificate"]["status"] == "separated"
    code, out = run(capsys, "intersect", "--in", str(pair_path))
    assert code == 0
    assert json.loads(out)["verdict"] == "Disjoint"


def test_width_of_rectangle(capsys, fixtures_dir):
    code, out = run(capsys, "width", "--in", str(fixtures_dir / "rectangle.json"), "--eps", "0.05")
    document = json.loads(out)
    assert code == 0
    assert document["width"] == pytest.approx(1.0, rel=0.2)
    assert "timings" not in document


def test_kernel_and_build(capsys, fixtures_dir):
    path = str(fixtures_dir / "rectangle.json")
    _, out = run(capsys, "kernel", "--in", path)
    kernel = json.loads(out)
    assert 1 <= kernel["size"] <= kernel["source_size"] == 5
    _, out = run(capsys, "build", "--in", path)
    assert set(json.loads(out)) == {"eps", "kernel", "body", "map"}


def test_minksum_json_and_svg(capsys, tmp_path, fixtures_dir):
    square, triangle = str(fixtures_dir / "square.json"), str(fixtures_dir / "triangle.json")
    code, out = run(capsys, "minksum", "--in", square, "--in", triangle, "--algo", "bi")
    assert code == 0
    assert json.loads(out)["points"]
    svg_path = tmp_path / "sum.svg"
    assert main(["minksum", "--in", square, "--in", triangle, "--format", "svg", "--out", str(svg_path)]) == 0
    assert "<svg" in svg_path.read_text()


def test_minksum_of_halfspaces_converts(capsys, fixtures_dir):
    code, out = run(capsys, "minksum", "--in", str(fixtures_dir / "box_halfspaces.json"))
    assert code == 0
    assert json.loads(out)["points"]


def test_svg_needs_planar_input(capsys, fixtures_dir):
    path = str(fixtures_dir / "tetrahedron.json")
    code, out = run(capsys, "minksum", "--in", path, "--format", "svg")
    assert code == 1
    assert json.loads(out)["error"] == "DimensionMismatchError"


def test_missing_input_file(capsys, tmp_path):
    code, out = run(capsys, "width", "--in", str(tmp_path / "missing.json"))
    assert code == 1
    assert json.loads(out)["error"] == "ParseError"


def test_wrong_number_of_inputs(capsys, fixtures_dir):
    path = str(fixtures_dir / "square.json")
    code, out = run(capsys, "width", "--in", path, "--in", path)
    assert code == 1
    assert json.loads(out)["error"] == "InvalidParameterError"


def test_selftest_single_check(capsys):
    code, out = run(capsys, "selftest", "--check", "exact_identities")
    report = json.loads(out)
    assert code == 0
    assert report["passed"]
    assert [r["name"] for r in report["results"]] == ["exact_identities"]


@pytest.mark.parametrize("argv", [
    ["bench", "--dim", "2", "--n", "300", "--eps", "0.1", "--eps", "0.04"],
    ["selftest", "--check", "exact_identities"],
])
def test_seeded_reports_are_byte_identical(capsys, argv):
    _, first = run(capsys, *argv)
    _, second = run(capsys, *argv)
    assert first == second
    assert "seconds" not in first


def test_bench_timings_on_request(capsys):
    _, out = run(capsys, "bench", "--dim", "2", "--n", "200", "--eps", "0.1", "--timings")
    assert json.loads(out)["rows"][0]["build_seconds"] >= 0.0
