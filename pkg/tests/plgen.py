"""Random piecewise-linear convex instances for property tests."""

import numpy as np
from brwspeed.convex import PLConvex

# knots on a dyadic lattice so the 2**-13 brute-force grid hits every knot
LATTICE = 1.0 / 16
GRID_STEP = 2.0**-13


def random_pl(rng, *, k_convex=False, overrides=True, cut_tails=False, span=5.0):
    n = int(rng.integers(1, 7))
    lo_idx = 0 if k_convex else int(-span / LATTICE)
    hi_idx = int(span / LATTICE)
    idx = np.unique(rng.integers(lo_idx, hi_idx + 1, size=n))
    x = idx * LATTICE
    slopes = np.cumsum(rng.uniform(0.05, 1.5, size=max(len(x) - 1, 0))) + rng.uniform(-3, 1)
    y0 = rng.uniform(-2, 2)
    y = np.concatenate(([y0], y0 + np.cumsum(slopes * np.diff(x))))
    first = slopes[0] if slopes.size else rng.uniform(-2, 2)
    last = slopes[-1] if slopes.size else first
    left = None
    right = None
    if not (k_convex or cut_tails) and rng.random() < 0.5:
        left = first - rng.uniform(0.05, 1.0)
    if not cut_tails and rng.random() < 0.5:
        right = last + rng.uniform(0.05, 1.0)
    if k_convex and x[-1] <= 0 and right is None:
        right = rng.uniform(-1, 1)
    lo_v = hi_v = None
    if overrides and rng.random() < 0.3:
        lo_v = np.inf if rng.random() < 0.5 else y[0] + rng.uniform(0, 1)
    if overrides and rng.random() < 0.3:
        hi_v = np.inf if rng.random() < 0.5 else y[-1] + rng.uniform(0, 1)
    f = PLConvex.build(x, y, left, right, lo_v, hi_v)
    if f.kind != "proper":
        return random_pl(rng, k_convex=k_convex, overrides=overrides, cut_tails=cut_tails, span=span)
    return f


def grid(lo=-10.0, hi=10.0, step=GRID_STEP):
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def brute_dual(f, a):
    """sup over the grid of theta*a - f(theta); +inf outside the tail-slope range."""
    if f.left_slope is not None and a < f.left_slope:
        return np.inf
    if f.right_slope is not None and a > f.right_slope:
        return np.inf
    lo = f.knots[0] - 2.0
    hi = f.knots[-1] + 2.0
    if f.left_cut:
        lo = f.knots[0]
    if f.right_cut:
        hi = f.knots[-1]
    t = grid(lo, hi) if hi > lo else np.array([lo])
    vals = f.eval_closure(t)
    return float(np.max(t * a - vals))


def brute_running_ratio(f, theta):
    """theta * min(f(theta)/theta, inf over grid t < theta of cl f(t)/t).

    Points strictly left of theta see the closure, since a value at the left
    end of the domain is only approached from the right.
    """
    t = grid(GRID_STEP, float(np.max(theta)))
    run = np.minimum.accumulate(f.eval_closure(t) / t)
    idx = np.searchsorted(t, theta, side="left") - 1
    before = np.where(idx >= 0, run[np.maximum(idx, 0)], np.inf)
    return theta * np.minimum(f(theta) / theta, before)
