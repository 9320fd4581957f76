"""Acceptance suite: one test per criterion, each under its own time budget.

Run with ``pytest -v tests/test_acceptance.py``; the terminal summary prints
one PASS/FAIL line per criterion. Criteria split into two checks report FAIL
when either check fails.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from brwspeed import brwsim as bs
from brwspeed import cli
from brwspeed import convex as cx
from brwspeed import speeds as sp
from brwspeed.interval import INF, Interval
from brwspeed.model import (
    Deterministic,
    DiscreteTable,
    LatticeSeries,
    Normal,
    OffspringKernel,
    PointMass,
    Poisson,
    ReproductionModel,
    dump_model,
    gaussian_kernel,
    transform,
)

from modelgen import expectation_recipe, gaussian_then_degenerate, random_chain_model, two_gaussian
from plgen import grid, random_pl

EXACT = dict(atol=1e-12, rtol=1e-12)
SIM_SEED = 20240611
GAUSS_SPEED = math.sqrt(2 * math.log(2))


@contextmanager
def budget(seconds):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"took {elapsed:.2f}s, budget {seconds}s"


def one_type(kernel):
    return ReproductionModel(("a",), {(0, 0): kernel})


def gaussian_model():
    return one_type(gaussian_kernel(math.log(2), 0.0, 1.0))


# -- 1: exact calculus ---------------------------------------------------


def _natural_shape(f):
    nat = cx.natural(f)
    if nat.kind == cx.MINUS_INF:
        return
    vt, gam = cx.vartheta(f), cx.ratio_inf(f)
    t = np.union1d(grid(1 / 64, 10.0, 1 / 64), f.knots[f.knots > 0])
    nv, fv = nat(t), f(t)
    fin = np.isfinite(fv)
    assert np.all(nv[fin] <= fv[fin] + 1e-12)
    ratio = nv / t
    assert np.all(np.diff(ratio[np.isfinite(ratio)]) <= 1e-12)
    below = (t < vt) & (t >= f.knots[0])
    assert np.allclose(nv[below], fv[below], **EXACT)
    if math.isfinite(vt):
        above = t > vt
        assert np.allclose(nv[above], t[above] * gam, **EXACT)


def test_c01_exact_calculus():
    rng = np.random.default_rng(SIM_SEED)
    n = 0
    with budget(10):
        while n < 500:
            f, g = random_pl(rng), random_pl(rng)
            assert cx.allclose(cx.fenchel_dual(cx.fenchel_dual(f)), cx.closure(f), **EXACT)
            m = cx.pointwise_max(f, g)
            if m.kind == cx.PROPER:
                lhs = cx.fenchel_dual(m)
                rhs = cx.convex_minorant(cx.fenchel_dual(f), cx.fenchel_dual(g))
                assert cx.allclose(lhs, rhs, **EXACT)
            s = cx.sweep(f)
            assert s.kind != cx.PROPER or cx.allclose(cx.sweep(s), s, **EXACT)
            assert cx.lambda_(f) == cx.lambda_(s)
            _natural_shape(random_pl(rng, k_convex=True))
            n += 1
    assert n >= 500


# -- 2-5: named instances ------------------------------------------------


def test_c02_one_type_gaussian_speed():
    with budget(1):
        cs = sp.build_class_structure(gaussian_model(), grid=sp.GridConfig(8.0, 1 / 512))
        lam = cx.lambda_(sp.recursion_r(cs, sp.enumerate_routes(cs)[0]))
    assert lam == pytest.approx(GAUSS_SPEED, abs=1e-3)


@pytest.mark.parametrize("k", [Deterministic(1), Deterministic(2), Deterministic(5), Poisson(1.7)])
def test_c03_degenerate_nonnegative_growth(k):
    mu = -0.375
    with budget(1):
        cs = sp.build_class_structure(one_type(OffspringKernel(k, PointMass(mu))))
        dual = cx.fenchel_dual(cs.kappa(0))
    alpha = math.log(k.expected)
    assert cx.allclose(cs.kappa(0), cx.PLConvex.build([0.0], [alpha], None, mu), atol=0, rtol=0)
    a = np.concatenate((np.linspace(-50.0, mu, 101), [mu]))
    assert np.array_equal(dual(a), np.full(a.size, -alpha))
    assert dual.hi == mu and dual.right_cut
    assert dual(np.nextafter(mu, INF)) == INF and dual(mu + 3.0) == INF


def test_c03_degenerate_negative_growth():
    with budget(1):
        cs = sp.build_class_structure(one_type(OffspringKernel(Poisson(0.6), PointMass(0.5))))
        assert cx.sw_fd(cs.kappa(0)).kind == cx.PLUS_INF


def test_c04_two_gaussian_super_speed():
    with budget(5):
        cs = sp.build_class_structure(two_gaussian())
        route = sp.enumerate_routes(cs)[0]
        rep = sp.analyze(cs)
        f_speed = sp.speed_of(sp.recursion_f(cs, route))
        oracle = sp.nested_speed_oracle(cs, route)
    assert all(abs(v) <= 1e-3 for v in rep.class_speeds.values())
    assert rep.pairwise.speed == pytest.approx(0.25, abs=1e-3)
    assert f_speed == pytest.approx(0.25, abs=1e-3)
    assert oracle == pytest.approx(0.25, abs=5e-3)


def test_c05_gaussian_then_degenerate():
    with budget(5):
        cs = sp.build_class_structure(gaussian_then_degenerate())
        route = sp.enumerate_routes(cs)[0]
        f2 = sp.recursion_f(cs, route)
        oracle = sp.nested_speed_oracle(cs, route, constrained=False)
        pair = sp.pairwise_speed(cs).speed
    assert cx.vartheta(f2) == pytest.approx(0.38755, abs=1e-3)
    assert sp.speed_of(f2) == pytest.approx(0.48394, abs=1e-3)
    assert pair == pytest.approx(0.48394, abs=1e-3)
    assert oracle == pytest.approx(0.48394, abs=1e-3)


# -- 6: restricted link --------------------------------------------------


def _open_link():
    cs = sp.build_class_structure(two_gaussian()).with_link_domain((0, 1), Interval.open(0.2, 0.6))
    route = sp.enumerate_routes(cs)[0]
    return cs, route, sp.recursion_f(cs, route), sp.recursion_g(cs, route)


def _dominates(g, f):
    th = np.linspace(0.2, 8.0, 2001)[1:]
    return bool(np.all(g(th) >= f(th) - 1e-12))


def test_c06_literal_separation():
    # Stated as written: the upper-bound speed sits 0.05 below the lower one.
    with budget(5):
        cs, route, f, g = _open_link()
    assert _dominates(g, f)
    assert g.lo == 0.2 and g.lo_value == INF
    assert sp.speed_of(g) <= sp.speed_of(f) - 0.05, (
        f"upper-bound speed {sp.speed_of(g):.5f} vs lower-bound speed {sp.speed_of(f):.5f}"
    )


def test_c06_correct_direction():
    # A pointwise larger rate has a smaller dual, so its speed can only be larger.
    with budget(5):
        cs, route, f, g = _open_link()
        oracle = sp.nested_speed_oracle(cs, route)
    assert _dominates(g, f)
    assert g.lo == 0.2 and g.lo_value == INF and math.isfinite(f(0.2))
    assert sp.speed_of(g) >= sp.speed_of(f) + 0.05
    assert oracle == pytest.approx(sp.speed_of(g), abs=5e-3)


# -- 7-8: random instances -----------------------------------------------


def _random_structures():
    for s in range(100):
        rng = np.random.default_rng(7000 + s)
        yield sp.build_class_structure(random_chain_model(rng, int(rng.integers(1, 5))))


def test_c07_pairwise_equals_route_maximum():
    worst = 0.0
    with budget(60):
        for cs in _random_structures():
            rep = sp.analyze(cs)
            best = max(sp.speed_of(rr.f) for rr in rep.routes)
            worst = max(worst, abs(rep.pairwise.speed - best))
    assert worst <= 5e-3


def test_c08_expectation_versus_almost_sure():
    with budget(10):
        for cs in _random_structures():
            for route in sp.enumerate_routes(cs):
                for r, R in zip(sp.recursion_r_all(cs, route), sp.recursion_R_all(cs, route)):
                    a = cx.probe_points(r, R)
                    assert np.all(r(a) >= R(a) - 1e-9)
        cs = sp.build_class_structure(expectation_recipe())
        route = sp.enumerate_routes(cs)[0]
        lr = cx.lambda_(sp.recursion_r(cs, route))
        lR = cx.lambda_(sp.recursion_R(cs, route))
    assert lR >= lr + 0.05


# -- 9-10: simulation ----------------------------------------------------


def test_c09_simulated_speeds():
    with budget(120):
        one = bs.estimate_speed(bs.simulate(gaussian_model(), bs.SimConfig(20, SIM_SEED, 8, 10**5)), 0)
        two = bs.estimate_speed(bs.simulate(two_gaussian(), bs.SimConfig(22, SIM_SEED, 8, 2 * 10**5)), 1)
    assert 0.15 <= two.slope <= 0.35, f"type-2 slope {two.slope:.4f}"
    assert one.slope == pytest.approx(GAUSS_SPEED, rel=0.10), f"one-type slope {one.slope:.4f}"


def test_c10_count_rates():
    cs = sp.build_class_structure(gaussian_model())
    rate = cx.sw_fd(cs.kappa(0))
    with budget(60):
        cfg = bs.SimConfig(20, SIM_SEED, 8, 2 * 10**6, record_counts_at=(0.0, 0.8, 1.5))
        tr = bs.simulate(gaussian_model(), cfg)
        for a in (0.0, 0.8):
            est = bs.estimate_count_rate(tr, 0, a)
            assert not est.biased
            assert est.slope == pytest.approx(-float(rate(a)), rel=0.20), f"a={a}: {est.slope:.4f}"
        assert bs.estimate_count_rate(tr, 0, 1.5).hit_zero.all()


# -- 11: sampler fidelity ------------------------------------------------

LAWS = {
    "point": PointMass(-0.4),
    "normal": Normal(0.2, 0.7),
    "table": DiscreteTable(((-1.0, 0.3), (0.5, 0.7))),
    "lattice": LatticeSeries(0.1, 1.0, 2.0, 2.0, 0.0),
}
COUNTS = {"poisson": Poisson(1.3), "fixed": Deterministic(3)}


def test_c11_sampler_fidelity():
    rng = np.random.default_rng(SIM_SEED)
    n = 10**6
    with budget(30):
        for cname, count in COUNTS.items():
            for lname, law in LAWS.items():
                k = OffspringKernel(count, law)
                assert k.domain().contains(0.5)
                _, disp = k.sample_families(rng, n)
                est = np.exp(0.5 * disp).sum() / n
                assert est == pytest.approx(transform(k, 0.5), rel=0.02), f"{cname}/{lname}"


# -- 12: determinism -----------------------------------------------------


def test_c12_simulate_is_deterministic(tmp_path, capsys, monkeypatch):
    path = tmp_path / "model.json"
    dump_model(two_gaussian(), path)
    argv = ["simulate", str(path), "--gens", "12", "--seed", "9", "--replicates", "6", "--cap", "4000", "--count-at", "0,0.25"]
    outs = []
    with budget(60):
        for threads in ("1", "1", "4", "0"):
            monkeypatch.setenv(bs.THREADS_ENV, threads)
            assert cli.main(argv) == 0
            outs.append(capsys.readouterr().out.encode())
    assert len(outs[0]) > 1000
    assert all(o == outs[0] for o in outs)
