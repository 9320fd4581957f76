import math

import numpy as np
import pytest
from scipy.stats import norm

from brwspeed import brwsim as bs
from brwspeed.model import (
    Deterministic,
    LatticeSeries,
    ModelError,
    OffspringKernel,
    PointMass,
    Poisson,
    ReproductionModel,
    gaussian_kernel,
)


def walk(mu, k=1):
    return ReproductionModel(("a",), {(0, 0): OffspringKernel(Deterministic(k), PointMass(mu))})


def gaussian(alpha=math.log(2)):
    return ReproductionModel(("a",), {(0, 0): gaussian_kernel(alpha, 0.0, 1.0)})


def test_config_validation():
    with pytest.raises(ValueError, match="replicates"):
        bs.SimConfig(5, replicates=0)
    with pytest.raises(ValueError, match="cap_per_type"):
        bs.SimConfig(5, cap_per_type=0)


def test_deterministic_walk_is_exact():
    # a dyadic step keeps the repeated additions exact
    tr = bs.simulate(walk(0.625), bs.SimConfig(15, seed=3, replicates=2))
    n = np.arange(16)
    assert np.array_equal(tr.rightmost[:, :, 0], np.tile(0.625 * n, (2, 1)))
    est = bs.estimate_speed(tr, 0)
    assert est.slope == pytest.approx(0.625, abs=1e-12)
    assert est.final_mean == 0.625


def test_deterministic_walk_cap_invariance():
    a = bs.simulate(walk(0.7, k=2), bs.SimConfig(12, cap_per_type=5))
    b = bs.simulate(walk(0.7, k=2), bs.SimConfig(12, cap_per_type=5000))
    assert np.array_equal(a.rightmost, b.rightmost)
    assert a.biased.any() and not b.biased.any()


def test_subcritical_extinction():
    m = ReproductionModel(("a",), {(0, 0): OffspringKernel(Poisson(0.5), PointMass(0.0))})
    tr = bs.simulate(m, bs.SimConfig(30, seed=1, replicates=300))
    extinct = np.mean(tr.precap[:, -1, 0] == 0)
    # generating-function iteration for the survival probability
    q = 0.0
    for _ in range(30):
        q = math.exp(0.5 * (q - 1))
    assert 1 - q < 1e-8
    assert extinct > 0.99


def test_determinism_and_thread_independence(monkeypatch):
    cfg = bs.SimConfig(10, seed=42, replicates=4, cap_per_type=500, record_counts_at=(0.0, 0.5))
    monkeypatch.setenv(bs.THREADS_ENV, "1")
    a = bs.simulate(gaussian(), cfg)
    monkeypatch.setenv(bs.THREADS_ENV, "4")
    b = bs.simulate(gaussian(), cfg)
    for name in ("rightmost", "retained", "precap", "count_at", "biased", "uncapped_estimate"):
        assert np.array_equal(getattr(a, name), getattr(b, name), equal_nan=True), name


def test_bad_thread_setting(monkeypatch):
    monkeypatch.setenv(bs.THREADS_ENV, "many")
    with pytest.raises(ValueError, match=bs.THREADS_ENV):
        bs.thread_count(4)


def test_cap_free_prefix_matches_uncapped():
    cfg_small = bs.SimConfig(9, seed=7, replicates=3, cap_per_type=40, record_counts_at=(0.0, 0.3))
    cfg_big = bs.SimConfig(9, seed=7, replicates=3, cap_per_type=10**6, record_counts_at=(0.0, 0.3))
    capped = bs.simulate(gaussian(), cfg_small)
    free = bs.simulate(gaussian(), cfg_big)
    assert not free.biased.any()
    for r in range(3):
        ok = ~capped.biased[r]
        assert ok.sum() >= 2
        assert np.array_equal(capped.rightmost[r, ok], free.rightmost[r, ok], equal_nan=True)
        assert np.array_equal(capped.count_at[r, ok], free.count_at[r, ok])
        assert np.array_equal(capped.precap[r, ok], free.precap[r, ok])


def test_counts_monotone_in_a():
    cfg = bs.SimConfig(10, seed=5, replicates=3, cap_per_type=2000, record_counts_at=(-0.5, 0.0, 0.4, 1.0))
    tr = bs.simulate(gaussian(), cfg)
    assert np.all(np.diff(tr.count_at, axis=3) <= 0)
    assert np.all(tr.count_at[..., 0] <= tr.precap)


def test_capping_keeps_rightmost():
    tr = bs.simulate(gaussian(), bs.SimConfig(12, seed=9, replicates=2, cap_per_type=50))
    assert np.all(tr.retained <= 50)
    assert np.all(tr.precap >= tr.retained)
    assert np.all(tr.uncapped_estimate >= tr.precap)


def test_periodic_class_alternates():
    k = OffspringKernel(Deterministic(2), PointMass(1.0))
    m = ReproductionModel(("a", "b"), {(0, 1): k, (1, 0): k})
    tr = bs.simulate(m, bs.SimConfig(10, cap_per_type=64))
    b = tr.rightmost[0, :, 0]
    assert np.all(np.isnan(b[1::2])) and np.array_equal(b[0::2], np.arange(0, 11, 2.0))
    assert bs.estimate_speed(tr, 0).present == 1
    even = np.arange(2, 11, 2)
    assert np.polyfit(even, b[even], 1)[0] == pytest.approx(1.0)


def test_count_rate_at_zero_matches_log_mean():
    cfg = bs.SimConfig(14, seed=11, replicates=6, cap_per_type=10**6, record_counts_at=(0.0,))
    est = bs.estimate_count_rate(bs.simulate(gaussian(), cfg), 0, 0.0)
    assert est.slope == pytest.approx(math.log(2), rel=0.15)
    assert not est.biased


def test_count_rate_requires_recorded_a():
    tr = bs.simulate(walk(0.1), bs.SimConfig(3, record_counts_at=(0.0,)))
    with pytest.raises(ValueError, match="not recorded"):
        bs.estimate_count_rate(tr, 0, 0.5)


def test_count_rate_beyond_speed_hits_zero():
    cfg = bs.SimConfig(12, seed=2, replicates=4, cap_per_type=10**5, record_counts_at=(1.0,))
    est = bs.estimate_count_rate(bs.simulate(walk(0.5, k=2), cfg), 0, 1.0)
    assert est.hit_zero.all()


def test_tail_probe_deterministic():
    p = bs.tail_probability_probe(walk(0.5), 0, 0.6, 5, 1000)
    assert p.successes == 0 and p.estimate == -math.inf and math.isfinite(p.upper)
    q = bs.tail_probability_probe(walk(0.5), 0, 0.4, 5, 1000)
    assert q.successes == 1000 and q.estimate == 0.0


def test_tail_probe_gaussian_against_first_moment():
    b, r = 1.5, 8
    p = bs.tail_probability_probe(gaussian(), 0, b, r, 100_000, seed=3)
    # first moment (1/r) log(2^r P(N(0, r) >= r b)) bounds the probability from above
    moment = (r * math.log(2) + norm.logsf(b * math.sqrt(r))) / r
    assert p.lower <= moment + 1e-12
    assert abs(p.estimate - moment) < 0.15


def test_lattice_with_left_mass_not_simulated():
    m = ReproductionModel(("a",), {(0, 0): OffspringKernel(Poisson(1.0), LatticeSeries(0, 1, 2, 1, 0.5))})
    with pytest.raises(ModelError, match="cannot be simulated"):
        bs.simulate(m, bs.SimConfig(2))


def test_early_extinction_flag():
    m = ReproductionModel(("a",), {(0, 0): OffspringKernel(Deterministic(0), PointMass(0.0))})
    tr = bs.simulate(m, bs.SimConfig(3, replicates=2))
    assert tr.early_extinction
    assert bs.estimate_speed(tr, 0).absent
