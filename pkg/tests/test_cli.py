import contextlib
import io
import json

import jsonschema
import numpy as np
import pytest

from freemono.cli import main
from freemono.opsys import builtin_system, point_from_json, system_to_json
from freemono.report import REPORT_SCHEMA
from freemono.verifiers import pair_margin
from freemono.freeexpr import catalog


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def zero_point(tmp_path):
    path = tmp_path / "zero-point.json"
    path.write_text(json.dumps(
        {"system": "scalar", "level": 1, "coeffs": [{"n": 1, "entries": [[[0.0, 0.0]]]}]}))
    return str(path)


@pytest.fixture
def pd_point(tmp_path):
    path = tmp_path / "pd-point.json"
    path.write_text(json.dumps(
        {"system": "scalar", "level": 1, "coeffs": [{"n": 1, "entries": [[[4.0, 0.0]]]}]}))
    return str(path)


class TestExitCodes:
    def test_pass_is_zero(self, tmp_path):
        code, _, _ = run_cli("check", "--function", "identity", "--suite", "monotone",
                             "--levels", "1..2", "--trials", "20", "--seed", "1",
                             "--out", str(tmp_path / "r.json"))
        assert code == 0

    def test_violation_is_one(self, tmp_path):
        code, _, _ = run_cli("check", "--function", "square", "--suite", "monotone",
                             "--levels", "2..2", "--trials", "1000", "--seed", "7",
                             "--out", str(tmp_path / "r.json"))
        assert code == 1
        doc = json.loads((tmp_path / "r.json").read_text())
        assert doc["verdict"] == "fail"
        assert doc["reports"][0]["witness"] is not None

    def test_usage_is_two(self):
        assert run_cli("check", "--suite", "monotone")[0] == 2
        assert run_cli("check", "--suite", "bogus")[0] == 2
        assert run_cli("check", "--function", "nope", "--suite", "monotone")[0] == 2
        assert run_cli("check", "--function", "identity", "--suite", "monotone",
                       "--levels", "0..9")[0] == 2
        assert run_cli("check", "--function", "identity", "--suite", "monotone",
                       "--trials", "0")[0] == 2
        assert run_cli("check", "--expr", "X1", "--suite", "monotone")[0] == 2
        assert run_cli("nonsense")[0] == 2

    def test_singular_eval_is_three(self, zero_point):
        # the input system is inferred from the point file
        code, _, err = run_cli("eval", "--expr", "inv(X1)", "--point", zero_point)
        assert code == 3
        assert "singular" in err

    def test_local_suite_on_block_system_is_usage_error(self):
        code, _, err = run_cli("check", "--function", "schur_complement",
                               "--suite", "local", "--trials", "5")
        assert code == 2


class TestEval:
    def test_happy_path(self, pd_point):
        code, out, _ = run_cli("eval", "--function", "msqrt", "--point", pd_point)
        assert code == 0
        doc = json.loads(out)
        point = point_from_json(doc)
        np.testing.assert_allclose(point.coeffs[0], [[2.0]], atol=1e-12)

    def test_expr_system_inferred_from_point(self, pd_point):
        code, out, _ = run_cli("eval", "--expr", "X1*X1", "--point", pd_point)
        assert code == 0
        doc = json.loads(out)
        np.testing.assert_allclose(point_from_json(doc).coeffs[0], [[16.0]])

    def test_missing_point_file(self):
        code, _, _ = run_cli("eval", "--function", "identity", "--point", "/nope.json")
        assert code == 2


class TestParseCommand:
    def test_schur_expression(self):
        code, out, _ = run_cli("parse", "--expr", "X[1,1] - X[1,2]*inv(X[2,2])*X[2,1]",
                               "--system", "block2")
        assert code == 0
        doc = json.loads(out)
        assert doc["canonical"] == "X[1,1] - X[1,2] * inv(X[2,2]) * X[2,1]"
        assert doc["ast"]["node"] == "sub"

    def test_syntax_error(self):
        code, _, err = run_cli("parse", "--expr", "X[1,", "--system", "block2")
        assert code == 2
        assert "offset 4" in err


class TestCatalogCommand:
    def test_lists_catalog(self):
        code, out, _ = run_cli("catalog")
        assert code == 0
        doc = json.loads(out)
        names = [f["name"] for f in doc["functions"]]
        assert "schur_complement" in names and "geometric_mean" in names


class TestDocuments:
    def test_schema_validates(self, tmp_path):
        path = tmp_path / "r.json"
        run_cli("check", "--function", "square", "--suite", "equivalence",
                "--levels", "1..2", "--trials", "30", "--seed", "3", "--out", str(path))
        doc = json.loads(path.read_text())
        jsonschema.validate(doc, REPORT_SCHEMA)

    def test_schema_validates_loewner_suite(self, tmp_path):
        path = tmp_path / "r.json"
        run_cli("check", "--suite", "loewner1d", "--levels", "2..2",
                "--trials", "10", "--seed", "3", "--out", str(path))
        doc = json.loads(path.read_text())
        jsonschema.validate(doc, REPORT_SCHEMA)

    def test_byte_determinism_same_config(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        argv = ("check", "--function", "msqrt", "--suite", "equivalence",
                "--levels", "1..2", "--trials", "25", "--seed", "11")
        run_cli(*argv, "--out", str(a))
        run_cli(*argv, "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_jobs_do_not_change_bytes(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        argv = ("check", "--function", "square", "--suite", "monotone",
                "--levels", "1..2", "--trials", "40", "--seed", "5")
        run_cli(*argv, "--jobs", "1", "--out", str(a))
        run_cli(*argv, "--jobs", "8", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_annotate_adds_key_outside_core(self, tmp_path):
        path = tmp_path / "r.json"
        run_cli("check", "--function", "identity", "--suite", "monotone",
                "--levels", "1..1", "--trials", "5", "--seed", "1",
                "--annotate", "--out", str(path))
        doc = json.loads(path.read_text())
        assert "annotations" in doc
        jsonschema.validate(doc, REPORT_SCHEMA)

    def test_no_timestamps_by_default(self, tmp_path):
        path = tmp_path / "r.json"
        run_cli("check", "--function", "identity", "--suite", "monotone",
                "--levels", "1..1", "--trials", "5", "--seed", "1", "--out", str(path))
        doc = json.loads(path.read_text())
        assert "annotations" not in doc

    def test_witness_reproduces_margin(self, tmp_path):
        path = tmp_path / "r.json"
        run_cli("check", "--function", "square", "--suite", "monotone",
                "--levels", "2..2", "--trials", "500", "--seed", "7", "--out", str(path))
        doc = json.loads(path.read_text())
        witness = doc["reports"][0]["witness"]
        square = catalog("square")
        a = point_from_json(witness["A"])
        b = point_from_json(witness["B"])
        assert abs(pair_margin(square, a, b) - witness["margin"]) <= 1e-10

    def test_exit_zero_iff_all_pass(self, tmp_path):
        path = tmp_path / "r.json"
        code, _, _ = run_cli("check", "--function", "msqrt", "--suite", "equivalence",
                             "--levels", "1..2", "--trials", "25", "--seed", "2",
                             "--out", str(path))
        doc = json.loads(path.read_text())
        assert (code == 0) == all(r["verdict"] == "pass" for r in doc["reports"])
        assert doc["numerical_failures"] == []


class TestUserSystems:
    def test_system_json_file(self, tmp_path):
        sys_doc = system_to_json(builtin_system("block2"))
        sys_doc["name"] = "my_block2"
        path = tmp_path / "sys.json"
        path.write_text(json.dumps(sys_doc))
        code, out, _ = run_cli("parse", "--expr", "X[2,1]", "--system", str(path))
        assert code == 0

    def test_expr_check_with_named_system(self, tmp_path):
        code, _, _ = run_cli("check", "--expr", "X1 + X2", "--system", "diagonal(2)",
                             "--suite", "monotone", "--levels", "1..2",
                             "--trials", "20", "--seed", "4",
                             "--out", str(tmp_path / "r.json"))
        assert code == 0
