import json

import pytest

from steinops.cli import main

CHI3 = {"kind": "second_chaos", "lambdas": [1.0], "multiplicities": [3]}
MCKAY = {"kind": "mckay", "a": 0.5, "b": 1.0, "c": 2.0}
BIV = {"kind": "multivariate_gamma", "C": [[2.0, 0.5], [0.5, 1.0]],
       "alpha": 1.0, "lambdas": [1.0, 1.0]}
NORMAL = {"kind": "normal", "mu": 0.0, "sigma2": 1.0}
PRODUCT = {"kind": "second_chaos", "lambdas": [0.5, -0.5]}


@pytest.fixture
def spec_file(tmp_path):
    def write(doc, name="spec.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)
    return write


def run(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


class TestBuildOperator:
    def test_chi_square_fixture(self, capsys, spec_file):
        rc, out, err = run(capsys, "build-operator", "--spec", spec_file(CHI3))
        assert rc == 0 and err == ""
        doc = json.loads(out)
        assert doc == {"coeff_polys": [[0.0, 1.0], [-6.0, -2.0]]}

    def test_route_selection(self, capsys, spec_file):
        path = spec_file(PRODUCT)
        rc, out, _ = run(capsys, "build-operator", "--spec", path,
                         "--route", "malliavin")
        assert rc == 0
        doc = json.loads(out)
        assert doc["coeff_polys"][0] == [0.0, -0.25]

    def test_text_output(self, capsys, spec_file):
        rc, out, _ = run(capsys, "build-operator", "--spec", spec_file(CHI3),
                         "--output", "text")
        assert rc == 0
        assert "coeff_polys:" in out

    def test_out_file(self, tmp_path, capsys, spec_file):
        target = tmp_path / "op.json"
        rc, out, _ = run(capsys, "build-operator", "--spec", spec_file(CHI3),
                         "--out", str(target))
        assert rc == 0 and out == ""
        assert json.loads(target.read_text())["coeff_polys"][0] == [0.0, 1.0]


class TestVerify:
    def test_pass_exit_zero(self, capsys, spec_file):
        rc, out, err = run(capsys, "verify", "--spec", spec_file(NORMAL),
                           "--n", "10000", "--seed", "0",
                           "--degrees", "0,1,2")
        assert err == ""
        doc = json.loads(out)
        assert doc["verdict"] == "pass"
        assert rc == 0
        assert [t["fn"] for t in doc["tests"]] == ["damped_0", "damped_1",
                                                   "damped_2"]

    def test_n_too_small(self, capsys, spec_file):
        rc, out, err = run(capsys, "verify", "--spec", spec_file(NORMAL),
                           "--n", "9999")
        assert rc == 2
        assert "n too small" in err

    def test_bad_degrees(self, capsys, spec_file):
        rc, _, err = run(capsys, "verify", "--spec", spec_file(NORMAL),
                         "--n", "10000", "--degrees", "2,x")
        assert rc == 2 and "degrees" in err
        rc, _, err = run(capsys, "verify", "--spec", spec_file(NORMAL),
                         "--n", "10000", "--degrees", "-1")
        assert rc == 2 and "degrees" in err

    def test_invalid_spec_field(self, capsys, spec_file):
        bad = dict(MCKAY, c=0.5)
        rc, _, err = run(capsys, "verify", "--spec", spec_file(bad),
                         "--n", "10000")
        assert rc == 2
        assert "c: must exceed 1" in err

    def test_unknown_kind(self, capsys, spec_file):
        rc, _, err = run(capsys, "verify", "--spec",
                         spec_file({"kind": "weibull"}), "--n", "10000")
        assert rc == 2
        assert "kind" in err

    def test_missing_spec_file(self, capsys, tmp_path):
        rc, _, err = run(capsys, "verify", "--spec",
                         str(tmp_path / "absent.json"), "--n", "10000")
        assert rc == 2
        assert "cannot read" in err

    def test_malformed_spec_file(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        rc, _, err = run(capsys, "verify", "--spec", str(path), "--n", "10000")
        assert rc == 2
        assert "invalid JSON" in err

    def test_wrong_route_for_kind(self, capsys, spec_file):
        rc, _, err = run(capsys, "verify", "--spec", spec_file(NORMAL),
                         "--n", "10000", "--route", "malliavin")
        assert rc == 2
        assert "malliavin" in err

    def test_mckay_report_includes_recursion(self, capsys, spec_file):
        rc, out, _ = run(capsys, "verify", "--spec", spec_file(MCKAY),
                         "--n", "50000", "--seed", "1", "--degrees", "0,1,2")
        doc = json.loads(out)
        assert [row["order"] for row in doc["recursion"]] == [2, 3, 4]
        assert doc["verdict"] == "pass"
        assert rc == 0

    def test_operator_override_round_trip(self, capsys, tmp_path, spec_file):
        spec = spec_file(CHI3)
        op_path = tmp_path / "op.json"
        rc, _, _ = run(capsys, "build-operator", "--spec", spec,
                       "--out", str(op_path))
        assert rc == 0
        args = ["verify", "--spec", spec, "--n", "10000", "--seed", "3",
                "--degrees", "0,1"]
        rc1, direct, _ = run(capsys, *args)
        rc2, override, _ = run(capsys, *args, "--operator", str(op_path))
        assert rc1 == rc2 == 0
        assert direct == override

    def test_operator_file_errors(self, capsys, tmp_path, spec_file):
        rc, _, err = run(capsys, "verify", "--spec", spec_file(NORMAL),
                         "--n", "10000", "--operator",
                         str(tmp_path / "none.json"))
        assert rc == 2 and "operator" in err
        bad = tmp_path / "op.json"
        bad.write_text("[1,2")
        rc, _, err = run(capsys, "verify", "--spec", spec_file(NORMAL),
                         "--n", "10000", "--operator", str(bad))
        assert rc == 2 and "invalid JSON" in err

    def test_wrong_operator_fails_with_exit_one(self, capsys, tmp_path,
                                                spec_file):
        # chi-square operator against a standard normal: detectably biased
        spec = spec_file(CHI3)
        op_path = tmp_path / "op.json"
        run(capsys, "build-operator", "--spec", spec, "--out", str(op_path))
        rc, out, _ = run(capsys, "verify", "--spec", spec_file(NORMAL),
                         "--n", "20000", "--seed", "0", "--degrees", "1,2",
                         "--operator", str(op_path))
        assert rc == 1
        assert json.loads(out)["verdict"] == "fail"

    def test_text_output(self, capsys, spec_file):
        rc, out, _ = run(capsys, "verify", "--spec", spec_file(NORMAL),
                         "--n", "10000", "--degrees", "0,1",
                         "--output", "text")
        assert rc == 0
        assert "verdict: pass" in out and "damped_0" in out


class TestCompare:
    def test_fourier_vs_malliavin(self, capsys, spec_file):
        rc, out, _ = run(capsys, "compare", "--spec", spec_file(PRODUCT),
                         "--routes", "fourier,malliavin")
        assert rc == 0
        doc = json.loads(out)
        assert doc["equivalent"] is True
        assert doc["scalar"] == pytest.approx(-4.0, rel=1e-9)

    def test_mckay_closed_form_scalar(self, capsys, spec_file):
        rc, out, _ = run(capsys, "compare", "--spec", spec_file(MCKAY),
                         "--routes", "closed-form,fourier")
        assert rc == 0
        doc = json.loads(out)
        assert doc["scalar"] == pytest.approx(-1 / 3, rel=1e-9)

    def test_route_count_validated(self, capsys, spec_file):
        rc, _, err = run(capsys, "compare", "--spec", spec_file(PRODUCT),
                         "--routes", "fourier")
        assert rc == 2 and "routes" in err

    def test_unknown_route_name(self, capsys, spec_file):
        rc, _, err = run(capsys, "compare", "--spec", spec_file(PRODUCT),
                         "--routes", "fourier,laplace")
        assert rc == 2 and "laplace" in err


class TestMappings:
    def test_mckay_map_fixture(self, capsys, spec_file):
        rc, out, _ = run(capsys, "mckay-map", "--spec", spec_file(BIV))
        assert rc == 0
        doc = json.loads(out)
        assert doc["a"] == pytest.approx(0.5, abs=1e-15)
        assert doc["b"] == pytest.approx(2.4748737341529163, rel=1e-12)
        assert doc["c"] == pytest.approx(2.1213203435596424, rel=1e-12)

    def test_mckay_map_requires_bivariate(self, capsys, spec_file):
        rc, _, err = run(capsys, "mckay-map", "--spec", spec_file(MCKAY))
        assert rc == 2 and "2x2" in err

    def test_levy_decompose(self, capsys, spec_file):
        rc, out, _ = run(capsys, "levy-decompose", "--spec", spec_file(MCKAY))
        assert rc == 0
        doc = json.loads(out)
        assert (doc["shape"], doc["rate1"], doc["rate2"]) == (1.0, 1.0, 3.0)
        assert "exp(" in doc["levy_density"]

    def test_levy_requires_mckay(self, capsys, spec_file):
        rc, _, err = run(capsys, "levy-decompose", "--spec", spec_file(NORMAL))
        assert rc == 2 and "mckay" in err


class TestCumulants:
    def test_second_chaos_includes_delta(self, capsys, spec_file):
        rc, out, _ = run(capsys, "cumulants", "--spec", spec_file(CHI3),
                         "--order", "4")
        assert rc == 0
        doc = json.loads(out)
        assert doc["kappa1"] == 0.0
        assert doc["orders"] == [2, 3, 4]
        assert doc["values"] == pytest.approx([6.0, 24.0, 144.0])
        assert abs(doc["delta"]) < 1e-9

    def test_mckay_cumulants(self, capsys, spec_file):
        rc, out, _ = run(capsys, "cumulants", "--spec", spec_file(MCKAY),
                         "--order", "2")
        doc = json.loads(out)
        assert rc == 0
        assert doc["kappa1"] == pytest.approx(4 / 3, rel=1e-14)
        assert doc["values"] == pytest.approx([10 / 9], rel=1e-14)

    def test_order_guard(self, capsys, spec_file):
        rc, _, err = run(capsys, "cumulants", "--spec", spec_file(MCKAY),
                         "--order", "1")
        assert rc == 2 and "order" in err

    def test_multivariate_unsupported(self, capsys, spec_file):
        rc, _, err = run(capsys, "cumulants", "--spec", spec_file(BIV))
        assert rc == 2 and "kind" in err
