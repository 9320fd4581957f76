"""Hot numeric kernels, JIT-compiled with numba when available.

Every kernel has a pure-numpy twin with the same signature. Set
``BRWSPEED_DISABLE_JIT=1`` to force the numpy path (useful for debugging and
for the benchmark in ``benchmarks/bench_kernels.py``). Both paths return
bit-identical hulls; the power iteration agrees to within its stopping
tolerance.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

JIT_DISABLED = os.environ.get("BRWSPEED_DISABLE_JIT", "0").lower() not in ("", "0", "false", "no")
HAVE_JIT = numba is not None and not JIT_DISABLED


def _lower_hull_py(x, y):
    # Andrew's monotone chain, lower half; x strictly increasing.
    n = x.shape[0]
    idx = np.empty(n, dtype=np.int64)
    k = 0
    for i in range(n):
        while k >= 2:
            a = idx[k - 2]
            b = idx[k - 1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross <= 0.0:
                k -= 1
            else:
                break
        idx[k] = i
        k += 1
    return idx[:k].copy()


def _log_pf_batch_py(mats, tol, max_iter):
    # mats: (G, n, n) finite nonnegative irreducible blocks.
    g, n, _ = mats.shape
    out = np.empty(g)
    rows = mats.sum(axis=2)
    shift = 0.5 * rows.max(axis=1)
    shifted = mats + shift[:, None, None] * np.eye(n)[None, :, :]
    v = np.ones((g, n))
    lo = np.zeros(g)
    hi = np.full(g, np.inf)
    active = np.ones(g, dtype=bool)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        w = np.einsum("gij,gj->gi", shifted[idx], v[idx])
        ratio = w / v[idx]
        lo[idx] = ratio.min(axis=1)
        hi[idx] = ratio.max(axis=1)
        v[idx] = w / w.max(axis=1)[:, None]
        done = (hi[idx] - lo[idx]) <= tol * hi[idx]
        active[idx[done]] = False
    lam = 0.5 * (lo + hi) - shift
    out[:] = np.log(lam)
    return out




if HAVE_JIT:

    @numba.njit(cache=True)
    def _lower_hull_jit(x, y):
        n = x.shape[0]
        idx = np.empty(n, dtype=np.int64)
        k = 0
        for i in range(n):
            while k >= 2:
                a = idx[k - 2]
                b = idx[k - 1]
                cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
                if cross <= 0.0:
                    k -= 1
                else:
                    break
            idx[k] = i
            k += 1
        return idx[:k].copy()

    @numba.njit(cache=True)
    def _log_pf_batch_jit(mats, tol, max_iter):
        g, n, _ = mats.shape
        out = np.empty(g)
        v = np.empty(n)
        w = np.empty(n)
        for k in range(g):
            m = mats[k]
            shift = 0.0
            for i in range(n):
                s = 0.0
                for j in range(n):
                    s += m[i, j]
                if s > shift:
                    shift = s
            shift *= 0.5
            for i in range(n):
                v[i] = 1.0
            lo = 0.0
            hi = np.inf
            for _ in range(max_iter):
                wmax = 0.0
                lo = np.inf
                hi = 0.0
                for i in range(n):
                    s = shift * v[i]
                    for j in range(n):
                        s += m[i, j] * v[j]
                    w[i] = s
                    r = s / v[i]
                    if r < lo:
                        lo = r
                    if r > hi:
                        hi = r
                    if s > wmax:
                        wmax = s
                for i in range(n):
                    v[i] = w[i] / wmax
                if hi - lo <= tol * hi:
                    break
            out[k] = np.log(0.5 * (lo + hi) - shift)
        return out


    lower_hull = _lower_hull_jit
    log_pf_batch = _log_pf_batch_jit
else:
    lower_hull = _lower_hull_py
    log_pf_batch = _log_pf_batch_py

PY_KERNELS = {
    "lower_hull": _lower_hull_py,
    "log_pf_batch": _log_pf_batch_py,
}
JIT_KERNELS = (
    {
        "lower_hull": _lower_hull_jit,
        "log_pf_batch": _log_pf_batch_jit,
    }
    if HAVE_JIT
    else {}
)
