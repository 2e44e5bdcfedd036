import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cotgeo.checks import CheckRecord, overall_pass
from cotgeo.cli import main, parse_point
from cotgeo.model import ModelError, load_model, parse_model
from cotgeo.report import dumps
from cotgeo.sampling import SamplingPlan, sample_points

MODELS = Path(__file__).resolve().parent.parent / "models"
EUCLID = {"dimension": 2, "hamiltonian": "0.5*(p1^2+p2^2)+x1^2*x2"}


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, data, name="m.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
    return p


class TestLoadModel:
    def test_euclidean(self):
        m = parse_model(EUCLID)
        assert m.n == 2
        assert m.hamiltonian((1.0, 1.0, 1.0, 0.0)) == 1.5

    def test_shape_error(self):
        with pytest.raises(ModelError, match="shape error") as e:
            parse_model({"dimension": 2, "hamiltonian": "p1^2+p2^2", "connection": [["0"]]})
        assert e.value.field == "connection"

    def test_curved(self):
        m = parse_model({"dimension": 1, "hamiltonian": "0.5*(1+x1^2)*p1^2"})
        assert m.chart.coords == ("x1", "p1")

    def test_parse_error_has_field_and_offset(self):
        with pytest.raises(ModelError) as e:
            parse_model({"dimension": 1, "hamiltonian": "p1*"})
        assert e.value.field == "hamiltonian"
        assert e.value.offset == 3

    def test_tangent_names_in_hamiltonian(self):
        with pytest.raises(ModelError):
            parse_model({"dimension": 1, "hamiltonian": "y1^2"})

    def test_unknown_field(self):
        with pytest.raises(ModelError, match="unknown field"):
            parse_model(dict(EUCLID, potential="x1"))

    def test_missing_ingredients(self):
        with pytest.raises(ModelError):
            parse_model({"dimension": 1, "tangent_structure": [["1"]]})

    def test_explicit_ingredients(self):
        m = load_model(MODELS / "skew.json")
        assert m.hamiltonian is None
        assert m.vector_field is not None and m.tangent_structure is not None

    def test_sampling_fields(self):
        m = parse_model(dict(EUCLID, sampling={"seed": 7, "count": 5, "x_box": [[0, 1], [0, 2]]}))
        assert (m.sampling.seed, m.sampling.count) == (7, 5)
        with pytest.raises(ModelError):
            parse_model(dict(EUCLID, sampling={"count": 2.5}))
        with pytest.raises(ModelError):
            parse_model(dict(EUCLID, sampling={"p_box": [[1, 0], [0, 1]]}))

    def test_bad_json(self):
        with pytest.raises(ModelError) as e:
            load_model(MODELS / "malformed.json")
        assert e.value.field == "<json>"
        assert e.value.offset is not None

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelError):
            load_model(tmp_path / "absent.json")

    def test_name_from_file(self):
        assert load_model(MODELS / "curved1.json").name == "curved1"


class TestSampling:
    def test_deterministic(self):
        plan = SamplingPlan(2)
        assert np.array_equal(sample_points(plan), sample_points(plan))
        assert not np.array_equal(sample_points(plan), sample_points(plan.replace(seed=43)))

    def test_null_section_excluded(self):
        pts = sample_points(SamplingPlan(1, p_box=((-0.2, 0.2),), count=200))
        assert np.all(np.abs(pts[:, 1]) >= 0.1)
        assert pts.shape == (200, 2)

    def test_boxes(self):
        pts = sample_points(SamplingPlan(2, x_box=((0, 1), (2, 3))))
        assert np.all((pts[:, 0] >= 0) & (pts[:, 0] <= 1) & (pts[:, 1] >= 2) & (pts[:, 1] <= 3))

    def test_invalid(self):
        with pytest.raises(ValueError):
            SamplingPlan(1, count=0)
        with pytest.raises(ValueError):
            sample_points(SamplingPlan(1, p_box=((-0.01, 0.01),), count=5), max_batches=3)


class TestReport:
    def test_seventeen_digits(self):
        assert dumps(0.1) == "0.10000000000000001"
        assert dumps(2.0) == "2.0"
        assert dumps(3) == "3"
        assert dumps(float("nan")) == '"nan"'

    def test_key_order_and_nesting(self):
        text = dumps({"b": [1, 2.5], "a": {"c": True, "d": None}})
        assert text.index('"b"') < text.index('"a"')
        assert json.loads(text) == {"b": [1, 2.5], "a": {"c": True, "d": None}}

    def test_overall_pass_ignores_informational(self):
        ok = CheckRecord("x", "a", 0.0, 1.0, 1)
        bad = CheckRecord("y", "a", 2.0, 1.0, 1)
        info = CheckRecord("z", "a", 2.0, 1.0, 1, informational=True)
        assert overall_pass([ok, info])
        assert not overall_pass([ok, bad])


class TestCheckCommand:
    def test_euclidean_passes(self, capsys):
        code, out, err = run(["check", MODELS / "euclidean.json", "--no-timestamp"], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["pass"] is True
        assert rep["seed"] == 42 and rep["count"] == 100
        assert all(r["anchor"] for r in rep["records"])
        assert all(r["pass"] for r in rep["records"])
        nabla = next(r for r in rep["records"] if r["name"] == "nabla_J.vanishes")
        assert nabla["max_abs_residual"] <= 1e-9
        assert "overall: PASS" in err

    def test_report_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            assert run(["check", MODELS / "curved2.json", "--report", p, "--samples", 30], capsys)[0] == 0
        ja, jb = json.loads(a.read_text()), json.loads(b.read_text())
        assert "timestamp" in ja
        ja.pop("timestamp"), jb.pop("timestamp")
        assert ja == jb
        run(["check", MODELS / "curved2.json", "--report", a, "--samples", 30, "--no-timestamp"], capsys)
        run(["check", MODELS / "curved2.json", "--report", b, "--samples", 30, "--no-timestamp"], capsys)
        assert a.read_bytes() == b.read_bytes()

    def test_broken_connection_fails(self, capsys):
        code, out, _ = run(["check", MODELS / "broken.json", "--no-timestamp"], capsys)
        assert code == 1
        rep = json.loads(out)
        assert rep["pass"] is False
        failed = [r for r in rep["records"] if not r["pass"] and not r["informational"]]
        assert [r["name"] for r in failed] == ["nabla_J.vanishes"]
        assert abs(failed[0]["max_abs_residual"] - 0.2) <= 1e-6

    def test_malformed_exits_2(self, capsys):
        code, _, err = run(["check", MODELS / "malformed.json"], capsys)
        assert code == 2
        assert "offset" in err

    def test_non_symmetric_structure_is_informational(self, capsys):
        code, out, _ = run(["check", MODELS / "skew.json", "--no-timestamp"], capsys)
        assert code == 0
        sym = next(r for r in json.loads(out)["records"] if r["name"] == "tangent_structure.symmetry")
        assert sym["informational"] and sym["max_abs_residual"] == 1.0

    def test_tolerance_override(self, capsys):
        code, out, _ = run(["check", MODELS / "broken.json", "--tol-symbolic", "1", "--tol-identity", "1",
                          "--no-timestamp"], capsys)
        assert code == 0
        assert json.loads(out)["tolerances"]["symbolic"] == 1.0

    def test_seed_override(self, capsys):
        _, out, _ = run(["check", MODELS / "free.json", "--seed", 5, "--samples", 10, "--no-timestamp"], capsys)
        rep = json.loads(out)
        assert (rep["seed"], rep["count"]) == (5, 10)
        assert all(r["points_evaluated"] == 10 for r in rep["records"])

    def test_singular_hamiltonian_exits_2(self, tmp_path, capsys):
        p = write(tmp_path, {"dimension": 1, "hamiltonian": "x1*p1"})
        assert run(["check", p], capsys)[0] == 2


class TestEvalCommand:
    def test_connection(self, capsys):
        code, out, _ = run(["eval", MODELS / "curved1.json", "--object", "connection", "--at", "x=1;p=1"], capsys)
        assert code == 0
        assert json.loads(out)["value"] == [[-0.5]]

    def test_jacobi(self, capsys):
        _, out, _ = run(["eval", MODELS / "euclidean.json", "--object", "jacobi", "--at", "x=1,1;p=0,0.5"], capsys)
        assert json.loads(out)["value"] == [[2.0, 2.0], [2.0, 0.0]]

    def test_curvature_one_dimension(self, capsys):
        _, out, _ = run(["eval", MODELS / "curved1.json", "--object", "curvature", "--at", "x=0.3;p=1.2"], capsys)
        assert json.loads(out)["value"] == [[[0.0]]]

    def test_metric(self, capsys):
        _, out, _ = run(["eval", MODELS / "curved1.json", "--object", "metric", "--at", "x=2;p=1"], capsys)
        assert json.loads(out)["value"] == [[5.0]]

    @pytest.mark.parametrize("obj", ["tension", "torsion", "strong_torsion", "almost_complex"])
    def test_other_objects(self, obj, capsys):
        code, out, _ = run(["eval", MODELS / "warped.json", "--object", obj, "--at", "x=0.1,0.2;p=1,-1"], capsys)
        assert code == 0
        assert np.all(np.isfinite(np.array(json.loads(out)["value"])))

    def test_unknown_object(self, capsys):
        code, _, err = run(["eval", MODELS / "curved1.json", "--object", "ricci", "--at", "x=1;p=1"], capsys)
        assert code == 2
        assert "connection" in err and "almost_complex" in err

    def test_off_chart_point(self, capsys):
        code, _, err = run(["eval", MODELS / "euclidean.json", "--object", "connection", "--at", "x=1;p=1,1"], capsys)
        assert code == 2
        assert "off-chart" in err

    def test_parse_point(self):
        assert parse_point("x=1, 2; p=3 4", 2).tolist() == [1.0, 2.0, 3.0, 4.0]
        with pytest.raises(ValueError):
            parse_point("x=1;q=2", 1)
        with pytest.raises(ValueError):
            parse_point("x=a;p=2", 1)


class TestLegendreCommand:
    def test_euclidean(self, capsys):
        code, out, _ = run(["legendre", MODELS / "euclidean.json", "--no-timestamp"], capsys)
        assert code == 0
        recs = {r["name"]: r for r in json.loads(out)["records"]}
        assert recs["legendre.roundtrip"]["max_abs_residual"] <= 1e-10
        for name in ("duality.condition_a", "duality.condition_b", "duality.metric", "duality.symplectic"):
            assert recs[name]["max_abs_residual"] <= 1e-10

    def test_perturbation_table(self, capsys):
        code, out, _ = run(["legendre", MODELS / "euclidean.json", "--epsilon", "0.01", "--no-timestamp"], capsys)
        assert code == 0
        rows = json.loads(out)["perturbation"]
        assert [r["epsilon"] for r in rows] == pytest.approx([1e-2, 1e-3, 1e-4], rel=1e-12)
        pts = sample_points(SamplingPlan(2))
        for r in rows:
            assert r["condition_b"] == pytest.approx(2 * r["epsilon"] * np.max(np.abs(pts[:, 2])), rel=1e-9)

    def test_free_particle_newton(self, capsys):
        code, out, _ = run(["legendre", MODELS / "free.json", "--no-timestamp"], capsys)
        assert code == 0
        assert json.loads(out)["max_newton_iterations"] <= 1

    def test_needs_hamiltonian(self, capsys):
        assert run(["legendre", MODELS / "skew.json"], capsys)[0] == 2

    def test_non_quadratic_without_lagrangian(self, tmp_path, capsys):
        p = write(tmp_path, {"dimension": 1, "hamiltonian": "0.25*p1^4+p1^2"})
        code, _, err = run(["legendre", p], capsys)
        assert code == 2
        assert "lagrangian" in err

    def test_inconsistent_lagrangian_fails(self, tmp_path, capsys):
        p = write(tmp_path, dict(EUCLID, lagrangian="0.5*(y1^2+y2^2)-x1^2*x2+1"))
        code, out, _ = run(["legendre", p, "--no-timestamp"], capsys)
        assert code == 1
        rec = next(r for r in json.loads(out)["records"] if r["name"] == "lagrangian.consistency")
        assert abs(rec["max_abs_residual"] - 1.0) <= 1e-12 and not rec["pass"]


def test_validate(capsys):
    code, out, _ = run(["validate", MODELS / "warped.json"], capsys)
    assert code == 0
    assert "valid" in out


def test_console_script_exit_codes(tmp_path):
    exe = [sys.executable, "-m", "cotgeo.cli"]
    ok = subprocess.run(exe + ["check", str(MODELS / "free.json"), "--samples", "10"], capture_output=True)
    bad = subprocess.run(exe + ["check", str(MODELS / "malformed.json")], capture_output=True)
    assert (ok.returncode, bad.returncode) == (0, 2)
