import csv
import io
import math

import numpy as np
import pytest

from brwspeed import cli
from brwspeed import convex as cx
from brwspeed import speeds as sp
from brwspeed.model import (
    Deterministic,
    OffspringKernel,
    PointMass,
    ReproductionModel,
    dump_model,
    gaussian_kernel,
    load_model,
)

from modelgen import two_gaussian


@pytest.fixture
def files(tmp_path):
    paths = {}
    models = {
        "gauss": ReproductionModel(("a",), {(0, 0): gaussian_kernel(math.log(2), 0.0, 1.0)}),
        "pair": two_gaussian(),
        "walk": ReproductionModel(("a",), {(0, 0): OffspringKernel(Deterministic(1), PointMass(0.75))}),
    }
    for name, m in models.items():
        paths[name] = tmp_path / f"{name}.json"
        dump_model(m, paths[name])
    return paths


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def data_rows(text):
    return list(csv.reader(io.StringIO("".join(ln + "\n" for ln in text.splitlines() if not ln.startswith("#")))))


def test_analyze_one_type(capsys, files):
    code, out, _ = run(capsys, "analyze", files["gauss"])
    assert code == 0
    assert out.startswith("# brwspeed ")
    assert "C0 {a}" in out
    speed = float(out.split("lower speed: ")[1].split()[0])
    assert speed == pytest.approx(1.17741, abs=1e-3)
    assert "theorem: overall" in out


def test_analyze_super_speed_line(capsys, files):
    code, out, _ = run(capsys, "analyze", files["pair"])
    assert code == 0
    assert "SUPER-SPEED: yes (pairwise speed 0.2500 > per-class max 0.0000)" in out


def test_analyze_bad_json(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"types": ["a"], "initial": "a", "kernels": [], "colour": 1}')
    code, _, err = run(capsys, "analyze", p)
    assert code == 2 and "colour" in err


def test_analyze_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", tmp_path / "nope.json")
    assert code == 2 and "nope.json" in err


def test_analyze_grid_failure(capsys, tmp_path):
    m = {
        "types": ["a"],
        "initial": "a",
        "kernels": [{"from": "a", "to": "a", "count": {"poisson": 1}, "disp": {"lattice": [0, 1, 1, 0.5, 1]}}],
    }
    p = tmp_path / "m.json"
    p.write_text(__import__("json").dumps(m))
    code, _, err = run(capsys, "analyze", p, "--grid", "0.25,1/64")
    assert code == 3 and "moment" in err


def test_rate_matched_and_round_trip(capsys, files):
    code, out, _ = run(capsys, "rate", files["pair"], "--a=-0.5:0.4:10")
    assert code == 0
    rows = data_rows(out)
    assert rows[0] == ["a", "r_lower", "swfdg_upper", "R_expect", "flags"]
    body = rows[1:]
    a = np.array([float(r[0]) for r in body])
    lo = np.array([float(r[1]) for r in body])
    assert all(r[1] == r[2] for r in body)
    assert body[-1][1] == "inf"
    cs = sp.build_class_structure(load_model(files["pair"]))
    prof = sp.rate_profile(cs, sp.enumerate_routes(cs)[0], np.linspace(-0.5, 0.4, 10))
    assert np.array_equal(a, prof.a) and np.array_equal(lo, prof.r_lower)
    assert np.array_equal(np.array([float(r[3]) for r in body]), prof.R_expect)


def test_simulate_walk_and_determinism(capsys, files):
    argv = ("simulate", files["walk"], "--gens", "6", "--seed", "4", "--replicates", "2", "--count-at", "0,1")
    code, out, _ = run(capsys, *argv)
    assert code == 0
    rows = data_rows(out)
    assert rows[0] == ["replicate", "generation", "type", "rightmost", "count_retained", "count_at_0", "count_at_1", "bias_flag"]
    for r in rows[1:]:
        assert float(r[3]) == pytest.approx(0.75 * int(r[1]))
    _, again, _ = run(capsys, *argv)
    assert again == out


def test_simulate_rejects_zero_replicates(capsys, files):
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", str(files["walk"]), "--gens", "3", "--replicates", "0"])
    assert exc.value.code == 2


def test_transform_natural_of_wedge(capsys):
    code, out, _ = run(capsys, "transform", "--fn", "cut; 0:1, 1:0; 1", "--op", "natural")
    assert code == 0
    f = cx.from_text("\n".join(ln for ln in out.splitlines() if not ln.startswith("#")))
    expect = cx.PLConvex.build([0.0, 1.0], [1.0, 0.0], None, 0.0)
    assert cx.allclose(f, expect)


def test_transform_lambda_scalar(capsys):
    code, out, _ = run(capsys, "transform", "--fn", "0; 0:-0.5; 2", "--op", "lambda")
    assert code == 0
    assert float(out.splitlines()[-1]) == pytest.approx(0.25)


def test_transform_rejects_bad_literals(capsys):
    for lit in ("cut; 0:1; ", "cut; 0:1 1:0 2:3; cut=inf extra; x", "cut; 0:inf; cut", "cut; 0:0, 1:2, 2:3; cut"):
        code, _, err = run(capsys, "transform", "--fn", lit, "--op", "dual")
        assert code == 2, lit
        assert "error" in err


def test_function_literal_override():
    f = cli.parse_function("cut=inf; 0.2:1, 1:0; cut")
    assert f.lo_value == math.inf and f.hi_value == 0.0
    assert cli.parse_function("cut; 0:1, 1:0; 1").right_slope == 1.0
