"""Problem-document parsing, the command-line entry point, and its exit
codes and output formats."""
import json

import pytest

from centercut.cli import main, parse_problem, serialize
from centercut.errors import ParseError, SchemaError

SQUARE_ROWS = [[1, 0, 1], [-1, 0, 0], [0, 1, 1], [0, -1, 0]]
GRID4_ROWS = [[1, 0, 4], [-1, 0, 0], [0, 1, 4], [0, -1, 0]]
EMPTY_LATTICE_ROWS = [[1, 0, 0.8], [-1, 0, -0.2], [0, 1, 1], [0, -1, 0]]

DEPTH_DOC = {
    "schema_version": 1,
    "command": "depth",
    "measure": {"family": "finite",
                "points": [[0, 0], [1, 0], [0, 1], [1, 1]]},
    "point": [0.5, 0.5],
}

SOLVE_DOC = {
    "schema_version": 1,
    "command": "solve",
    "objective": {"type": "quadratic", "Q": [[1, 0], [0, 1]], "c": [0.3, 0.7]},
    "constraint": {"kind": "lattice", "n": 2},
    "measure": {"family": "lattice", "polytope": GRID4_ROWS},
    "E0": {"lower": [0, 0], "upper": [4, 4]},
    "delta": 0.5,
}


def _write(tmp_path, doc, name="in.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def _run(tmp_path, doc, command, extra=()):
    inp = _write(tmp_path, doc, f"{command}.json")
    out = tmp_path / f"{command}.out"
    code = main([command, "--input", inp, "--output", str(out)] + list(extra))
    return code, out


# ---------------------------------------------------------------------------
# parsing

def test_parse_minimal_documents():
    assert parse_problem(json.dumps(DEPTH_DOC))["command"] == "depth"
    assert parse_problem(json.dumps(SOLVE_DOC))["command"] == "solve"


def test_parse_invalid_json():
    with pytest.raises(ParseError):
        parse_problem("{nope")


def test_parse_missing_key_is_named():
    doc = {k: v for k, v in SOLVE_DOC.items() if k != "delta"}
    with pytest.raises(SchemaError, match="delta"):
        parse_problem(json.dumps(doc))


def test_parse_unknown_key_rejected():
    doc = dict(DEPTH_DOC, typo=1)
    with pytest.raises(SchemaError, match="typo"):
        parse_problem(json.dumps(doc))
    doc = dict(DEPTH_DOC)
    doc["measure"] = dict(doc["measure"], extra=[1])
    with pytest.raises(SchemaError, match="extra"):
        parse_problem(json.dumps(doc))


def test_parse_schema_version_checked():
    with pytest.raises(SchemaError, match="schema_version"):
        parse_problem(json.dumps(dict(DEPTH_DOC, schema_version=2)))
    doc = {k: v for k, v in DEPTH_DOC.items() if k != "schema_version"}
    with pytest.raises(SchemaError, match="schema_version"):
        parse_problem(json.dumps(doc))


def test_parse_bench_instances_validated():
    doc = {"schema_version": 1, "command": "bench",
           "instances": [{"id": "x", "command": "depth"}]}
    with pytest.raises(SchemaError, match="solve or adversary-run"):
        parse_problem(json.dumps(doc))


def test_serialize_round_trip_idempotent():
    for doc in (DEPTH_DOC, SOLVE_DOC):
        s1 = serialize(parse_problem(json.dumps(doc)))
        s2 = serialize(parse_problem(s1))
        assert s1 == s2


# ---------------------------------------------------------------------------
# subcommands end to end

def test_cli_depth(tmp_path):
    code, out = _run(tmp_path, DEPTH_DOC, "depth")
    assert code == 0
    got = json.loads(out.read_text())
    assert got["value"] == 0.5
    assert got["exact"] is True
    assert got["gap"] == 0.0
    assert len(got["witness"]) == 2


def test_cli_centerpoint_exact_integer(tmp_path):
    doc = {"schema_version": 1, "command": "centerpoint",
           "measure": {"family": "lattice",
                       "polytope": [[1, 0, 2], [-1, 0, 0], [0, 1, 2], [0, -1, 0]]},
           "method": "exact2d-int"}
    code, out = _run(tmp_path, doc, "centerpoint")
    assert code == 0
    got = json.loads(out.read_text())
    assert got["point"] == [1.0, 1.0]
    assert got["depth"] == 5.0 / 9.0
    assert got["method"] == "exact2d-int"
    assert got["guarantee"]["floor"] == 0.25


def test_cli_centerpoint_centroid(tmp_path):
    doc = {"schema_version": 1, "command": "centerpoint",
           "measure": {"family": "uniform", "polytope": SQUARE_ROWS},
           "method": "centroid"}
    code, out = _run(tmp_path, doc, "centerpoint")
    assert code == 0
    got = json.loads(out.read_text())
    assert got["point"] == [0.5, 0.5]
    assert got["depth"] == pytest.approx(0.5, abs=1e-9)
    assert got["guarantee"]["grunbaum_floor"] == pytest.approx(4.0 / 9.0)


def test_cli_centerpoint_mc_sample_count(tmp_path):
    doc = {"schema_version": 1, "command": "centerpoint",
           "measure": {"family": "uniform", "polytope": SQUARE_ROWS},
           "method": "mc", "eps": 0.15, "delta": 0.2, "seed": 4}
    code, out = _run(tmp_path, doc, "centerpoint")
    assert code == 0
    got = json.loads(out.read_text())
    assert got["samples_used"] == 103
    assert abs(got["point"][0] - 0.5) <= 0.2


def test_cli_solve(tmp_path):
    code, out = _run(tmp_path, SOLVE_DOC, "solve")
    assert code == 0
    got = json.loads(out.read_text())
    assert got["best_point"] == [0.0, 1.0]
    assert got["best_value"] == pytest.approx(0.18, abs=1e-12)
    assert got["oracle_calls"] == got["iterations"]
    assert got["upper_bound"] == 13


def test_cli_flag_overrides_document(tmp_path):
    code, out = _run(tmp_path, SOLVE_DOC, "solve", ["--delta", "0.9"])
    assert code == 0
    assert json.loads(out.read_text())["delta"] == 0.9


def test_cli_adversary_run(tmp_path):
    doc = {"schema_version": 1, "command": "adversary-run",
           "game": {"kind": "integer_fiber", "n": 2, "B": 8}, "delta": 0.5}
    code, out = _run(tmp_path, doc, "adversary-run")
    assert code == 0
    got = json.loads(out.read_text())
    assert got["lower_bound"] == 8
    assert got["bound_ok"] is True
    assert got["consistent"] is True


def test_cli_csv_format(tmp_path):
    code, out = _run(tmp_path, DEPTH_DOC, "depth", ["--format", "csv"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0].split(",")[0] == "command"


# ---------------------------------------------------------------------------
# exit codes

def test_exit_code_parse_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert main(["depth", "--input", str(bad)]) == 2
    assert main(["depth", "--input", str(tmp_path / "missing.json")]) == 2


def test_exit_code_command_mismatch(tmp_path):
    inp = _write(tmp_path, DEPTH_DOC)
    assert main(["centerpoint", "--input", inp]) == 2


def test_exit_code_budget(tmp_path):
    doc = {"schema_version": 1, "command": "depth",
           "measure": {"family": "lattice",
                       "polytope": [[1, 0, 4000], [-1, 0, 0],
                                    [0, 1, 4000], [0, -1, 0]]},
           "point": [1.0, 1.0]}
    inp = _write(tmp_path, doc)
    assert main(["depth", "--input", inp]) == 3


def test_exit_code_empty_region(tmp_path):
    doc = {"schema_version": 1, "command": "depth",
           "measure": {"family": "lattice", "polytope": EMPTY_LATTICE_ROWS},
           "point": [0.5, 0.5]}
    inp = _write(tmp_path, doc)
    assert main(["depth", "--input", inp]) == 4


# ---------------------------------------------------------------------------
# bench

BENCH_DOC = {
    "schema_version": 1,
    "command": "bench",
    "instances": [
        {"id": "quad-lattice", **{k: v for k, v in SOLVE_DOC.items()
                                  if k != "schema_version"}},
        {"id": "fiber-8", "command": "adversary-run",
         "game": {"kind": "integer_fiber", "n": 2, "B": 8}, "delta": 0.5},
        {"id": "empty", "command": "solve",
         "objective": {"type": "quadratic", "Q": [[1, 0], [0, 1]], "c": [0, 0]},
         "constraint": {"kind": "lattice", "n": 2},
         "measure": {"family": "lattice", "polytope": EMPTY_LATTICE_ROWS},
         "E0": {"lower": [0, 0], "upper": [1, 1]}, "delta": 0.5},
    ],
}


def test_bench_rows_and_error_annotation(tmp_path):
    code, out = _run(tmp_path, BENCH_DOC, "bench", ["--format", "csv"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("id,kind,n,d,B,delta,strategy,oracle_calls")
    assert len(lines) == 4
    by_id = {ln.split(",")[0]: ln for ln in lines[1:]}
    assert "EmptyRegion" in by_id["empty"]
    assert ",true," in by_id["fiber-8"]
    assert by_id["quad-lattice"].split(",")[1] == "lattice"


def test_bench_byte_identical_reruns(tmp_path):
    inp = _write(tmp_path, BENCH_DOC)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["bench", "--input", inp, "--output", str(out1),
                 "--format", "csv"]) == 0
    assert main(["bench", "--input", inp, "--output", str(out2),
                 "--format", "csv"]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_bench_empty_suite(tmp_path):
    doc = {"schema_version": 1, "command": "bench", "instances": []}
    code, out = _run(tmp_path, doc, "bench", ["--format", "csv"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1   # header only
    code, out = _run(tmp_path, doc, "bench")
    assert json.loads(out.read_text())["rows"] == []
