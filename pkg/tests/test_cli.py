from __future__ import annotations

import json

import numpy as np
import pytest

from affine_explode import double_vol, heston, model_to_dict, read_csv, stock_growth_rate
from affine_explode.cli import run
from oracles import HestonOracle, double_vol_p0

ORC = HestonOracle()


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    header, rows = read_csv(text)
    return header, rows


def test_equilibria(capsys):
    code, out, _ = call(capsys, "equilibria", "--preset", "heston", "--w", "1")
    assert code == 0
    header, rows = table(out)
    assert header == ["nu1", "pattern", "eig1", "kind"]
    assert rows[0][0] == pytest.approx(-0.08, abs=1e-15) and rows[0][3] == "stable"
    assert rows[1][0] == pytest.approx(2.08, abs=1e-15) and rows[1][3] == "unstable(type 1)"


def test_critical(capsys):
    code, out, _ = call(capsys, "critical", "--T", "1")
    assert code == 0
    _, rows = table(out)
    p, q = ORC.critical_exponents(1.0)
    assert rows[0][0] == pytest.approx(p, abs=1e-6)
    assert rows[0][1] == pytest.approx(q, abs=1e-6)


def test_json_output(capsys):
    code, out, _ = call(capsys, "critical", "--T", "1", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["command"] == "critical"
    assert doc["columns"] == ["pStar", "qStar"]
    assert doc["meta"]["T"] == 1.0


def test_json_non_finite(capsys):
    code, out, _ = call(capsys, "explode", "--u", "0,0", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["rows"][0][0] == "inf"


def test_output_file(capsys, tmp_path):
    path = tmp_path / "eq.csv"
    code, out, _ = call(capsys, "equilibria", "--w", "0.5", "-o", str(path))
    assert code == 0 and out == ""
    header, rows = table(path.read_text())
    assert len(rows) == 2


class TestValidate:
    def test_preset(self, capsys):
        code, out, _ = call(capsys, "validate", "--preset", "double_vol")
        assert code == 0
        assert "OK admissible" in out and "MARTINGALE holds" in out

    def test_bad_config(self, capsys, tmp_path):
        spec = heston().spec
        doc = {"m": 1, "n": 1, "b": spec.b.tolist(), "B": [[0.0, 0.0], [-0.5, 0.0]], "a": spec.a.tolist(), "alpha": [[[-0.16, 0.0], [0.0, 1.0]], [[0.0, 0.0], [0.0, 0.0]]]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        code, out, err = call(capsys, "validate", str(path))
        assert code == 2
        lines = [ln for ln in (out + err).splitlines() if ln.startswith("CONSTRAINT")]
        names = {ln.split()[1].rstrip(":") for ln in lines}
        assert {"PSD", "BV_NEGATIVE_EIGENVALUES"} <= names

    def test_martingale_failure(self, capsys, tmp_path):
        p = heston()
        path = tmp_path / "m.json"
        doc = model_to_dict(p.model, p.equity)
        doc["theta"] = [0.0, 1.0]
        path.write_text(json.dumps(doc))
        code, out, _ = call(capsys, "validate", str(path))
        assert code == 1 and "MARTINGALE fails" in out

    def test_garbage_file(self, capsys, tmp_path):
        path = tmp_path / "g.json"
        path.write_text("[")
        code, _, err = call(capsys, "validate", str(path))
        assert code == 2 and "invalid JSON" in err


class TestMembership:
    def test_negative_vector(self, capsys):
        code, out, _ = call(capsys, "membership", "--u", "-1,0.5")
        assert code == 0
        _, rows = table(out)
        assert rows[0][:2] == [-1.0, 0.5] and rows[0][2] == "interior"

    def test_boundary_csv_round_trip(self, capsys, tmp_path):
        path = tmp_path / "b.csv"
        code, _, _ = call(capsys, "boundary", "sinf", "--preset", "double_vol", "--w", "0.5", "--rays", "6", "--tol", "1e-8", "-o", str(path))
        assert code == 0
        code, out, _ = call(capsys, "membership", "--preset", "double_vol", "--from-csv", str(path), "--w", "0.5")
        assert code == 0
        header, rows = table(out)
        assert header == ["u1", "u2", "u3", "region"]
        finite = sum(1 for r in table(path.read_text())[1] if np.isfinite(r[2]))
        # unbounded rays have no boundary point and are skipped
        assert finite >= 3
        assert [r[3] for r in rows] == ["boundary"] * finite

    def test_finite_horizon(self, capsys, tmp_path):
        path = tmp_path / "b.csv"
        call(capsys, "boundary", "st", "--w", "0.5", "--T", "2", "--rays", "2", "-o", str(path))
        _, rows = table(path.read_text())
        r = rows[0][1]
        pts = tmp_path / "u.csv"
        pts.write_text(f"u1,u2\n{r - 1e-3},0.5\n{r + 1e-3},0.5\n")
        code, out, _ = call(capsys, "membership", "--from-csv", str(pts), "--T", "2")
        assert code == 0
        assert [row[2] for row in table(out)[1]] == ["interior", "outside"]


def test_boundary_radius(capsys):
    code, out, _ = call(capsys, "boundary", "sinf", "--w", "0.7", "--rays", "2", "--tol", "1e-9")
    _, rows = table(out)
    assert rows[0][1] == pytest.approx(ORC.boundary_radius(0.7), abs=1e-7)
    assert rows[1][1] == np.inf and rows[1][2] == "unbounded"


def test_explode_with_trajectory(capsys, tmp_path):
    v = ORC.U(1.0) + 1.0
    path = tmp_path / "traj.csv"
    code, out, _ = call(capsys, "explode", "--u", f"{v},1", "--trajectory", str(path))
    assert code == 0
    _, rows = table(out)
    assert rows[0][0] == pytest.approx(ORC.t_star(v, 1.0), rel=1e-6)
    assert rows[0][1] == 1.0 and np.isnan(rows[0][2])
    header, traj = table(path.read_text())
    assert header[:2] == ["t", "y1"] and len(traj) > 10


def test_explode_rate_on_boundary(capsys):
    p, _ = ORC.critical_exponents(1.0)
    th = heston().equity.theta
    u = (p + 1.0) * th
    code, out, _ = call(capsys, "explode", "--u", f"{float(u[0])!r},{float(u[1])!r}", "--T", "1")
    _, rows = table(out)
    assert rows[0][2] == pytest.approx(2.0 * 0.09 / 0.16, rel=1e-9)


def test_growth(capsys):
    code, out, _ = call(capsys, "growth", "--u", "0,0.5")
    assert code == 0
    _, rows = table(out)
    assert rows[0][2] == "interior"
    code, _, err = call(capsys, "growth", "--u", "10,1")
    assert code == 1 and "MomentExplodes" in err


def test_smile_long_term(capsys):
    code, out, _ = call(capsys, "smile", "--preset", "double_vol", "--T", "inf", "--x-grid", "-0.01:0.01:5")
    assert code == 0
    header, rows = table(out)
    assert header == ["x", "sigma2"] and len(rows) == 5
    assert all(r[1] > 0 for r in rows)


def test_smile_finite_T(capsys):
    code, out, _ = call(capsys, "smile", "--T", "1", "--x-grid", "1:3:3")
    _, rows = table(out)
    code2, out2, _ = call(capsys, "wings", "--T", "1")
    _, wings = table(out2)
    assert code == code2 == 0
    for x, s2 in rows:
        assert s2 == pytest.approx(wings[0][2] * x, rel=1e-12)


def test_param_override(capsys):
    code, out, _ = call(capsys, "smile", "--preset", "double_vol", "--param", "kappa1=0.5", "--param", "rho=0.3", "--T", "inf", "--x-grid", "0:0:1", "--json")
    assert code == 0
    pre = double_vol(kappa1=0.5, rho=0.3)
    lam = stock_growth_rate(pre.model, pre.equity.theta, double_vol_p0(0.5, 0.3))
    assert json.loads(out)["rows"][0][1] == pytest.approx(-8.0 * lam, abs=1e-12)


def test_model_file(capsys, tmp_path):
    p = heston()
    path = tmp_path / "h.json"
    path.write_text(json.dumps(model_to_dict(p.model, p.equity)))
    a = call(capsys, "critical", "--model", str(path), "--T", "2")
    b = call(capsys, "critical", "--T", "2")
    assert a == b


class TestOracle:
    def test_mc_is_deterministic(self, capsys):
        argv = ("oracle", "mc", "--u", "0,0.5", "--T", "1", "--paths", "2000", "--dt", "0.02", "--seed", "4")
        a, b = call(capsys, *argv), call(capsys, *argv)
        assert a == b and a[0] == 0
        header, rows = table(a[1])
        assert header[:3] == ["mean", "stderr", "transform"]
        assert abs(rows[0][3]) <= 4.0 * rows[0][1]

    def test_manifold(self, capsys):
        code, out, _ = call(capsys, "oracle", "manifold", "--w", "1")
        _, rows = table(out)
        assert code == 0 and rows[0][1] == pytest.approx(ORC.U(1.0), abs=1e-12)


class TestErrors:
    def test_missing_argument(self, capsys):
        assert call(capsys, "equilibria")[0] == 2

    def test_unknown_param(self, capsys):
        assert call(capsys, "equilibria", "--w", "1", "--param", "nope=1")[0] == 2

    def test_wrong_length(self, capsys):
        assert call(capsys, "growth", "--u", "1,2,3")[0] == 2

    def test_no_equity(self, capsys):
        assert call(capsys, "critical", "--preset", "cascading", "--T", "1")[0] == 2
