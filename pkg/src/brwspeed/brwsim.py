"""Seeded Monte-Carlo simulation of multitype branching random walks.

Generations are synchronous. After each generation every type keeps only its
``cap_per_type`` rightmost particles; observables at a generation are taken
before that truncation, and are marked biased once an earlier generation has
been truncated. Randomness comes from Philox streams keyed by ``(seed,
replicate)`` with the generation in the counter, so a run does not depend on
thread count or scheduling.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .model import ModelError, ReproductionModel

THREADS_ENV = "BRWSPEED_THREADS"
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    generations: int
    seed: int = 0
    replicates: int = 1
    cap_per_type: int = 100_000
    record_counts_at: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("generations", "replicates", "cap_per_type"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        object.__setattr__(self, "record_counts_at", tuple(float(a) for a in self.record_counts_at))


@dataclass(frozen=True)
class Trajectory:
    """Per replicate ``r``, generation ``n`` (0..generations) and type ``s``.

    ``rightmost[r, n, s]`` is NaN when type ``s`` is absent. ``count_at[r, n,
    s, k]`` counts particles at or right of ``n * a_k``. ``precap`` is the
    population before truncation and ``uncapped_estimate`` rescales it by the
    fraction of ancestors discarded so far. ``biased[r, n]`` is set once a
    generation before ``n`` was truncated.
    """

    config: SimConfig
    type_names: tuple[str, ...]
    rightmost: np.ndarray
    retained: np.ndarray
    precap: np.ndarray
    uncapped_estimate: np.ndarray
    count_at: np.ndarray
    biased: np.ndarray
    early_extinction: bool = field(default=False)

    @property
    def generations(self) -> int:
        return self.config.generations


def stream(seed: int, replicate: int, generation: int) -> np.random.Generator:
    """The random stream of one replicate's generation."""
    key = np.array([seed & _MASK64, replicate & _MASK64], dtype=np.uint64)
    counter = np.array([0, 0, generation, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def thread_count(n_jobs: int) -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        req = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if req < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0")
    if req == 0:
        req = os.cpu_count() or 1
    return max(1, min(req, n_jobs))


def _children(model: ReproductionModel, pops: list[np.ndarray], rng: np.random.Generator) -> list[np.ndarray]:
    out: list[list[np.ndarray]] = [[] for _ in range(model.n_types)]
    for (i, j), k in sorted(model.kernels.items()):
        parents = pops[i]
        if parents.size == 0 or k.mean_children == 0.0:
            continue
        counts, disp = k.sample_families(rng, parents.size)
        out[j].append(np.repeat(parents, counts) + disp)
    return [np.concatenate(c) if c else np.empty(0) for c in out]


def _run_replicate(model: ReproductionModel, cfg: SimConfig, rep: int):
    g, t, na = cfg.generations, model.n_types, len(cfg.record_counts_at)
    right = np.full((g + 1, t), np.nan)
    kept = np.zeros((g + 1, t), dtype=np.int64)
    pre = np.zeros((g + 1, t), dtype=np.int64)
    est = np.zeros((g + 1, t))
    cnt = np.zeros((g + 1, t, na), dtype=np.int64)
    biased = np.zeros(g + 1, dtype=bool)
    a = np.array(cfg.record_counts_at)

    pops = [np.empty(0) for _ in range(t)]
    pops[model.initial] = np.zeros(1)
    scale = 1.0
    capped_before = False
    for n in range(g + 1):
        if n > 0:
            pops = _children(model, pops, stream(cfg.seed, rep, n))
        biased[n] = capped_before
        before = after = 0
        for s, p in enumerate(pops):
            pre[n, s] = p.size
            est[n, s] = p.size * scale
            if p.size:
                right[n, s] = p.max()
                if na:
                    cnt[n, s] = (p[:, None] >= n * a[None, :]).sum(axis=0)
            if p.size > cfg.cap_per_type:
                p = np.partition(p, p.size - cfg.cap_per_type)[p.size - cfg.cap_per_type :]
                pops[s] = p
            kept[n, s] = p.size
            before += pre[n, s]
            after += p.size
        if after < before:
            capped_before = True
            scale *= before / after
        if after == 0:
            break
    return right, kept, pre, est, cnt, biased


def simulate(model: ReproductionModel, cfg: SimConfig) -> Trajectory:
    bad = [model.type_names[i] + ">" + model.type_names[j] for (i, j), k in sorted(model.kernels.items()) if not k.samplable]
    if bad:
        raise ModelError(f"kernels {', '.join(bad)} cannot be simulated (infinite mean)")
    reps = range(cfg.replicates)
    workers = thread_count(cfg.replicates)
    if workers == 1:
        results = [_run_replicate(model, cfg, r) for r in reps]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: _run_replicate(model, cfg, r), reps))
    right, kept, pre, est, cnt, biased = (np.stack(x) for x in zip(*results))
    early = bool(np.all(pre[:, min(2, cfg.generations)].sum(axis=1) == 0))
    return Trajectory(cfg, model.type_names, right, kept, pre, est, cnt, biased, early)


# -- estimators ----------------------------------------------------------


@dataclass(frozen=True)
class SpeedEstimate:
    ratios: np.ndarray  # (replicates, generations) of B/n, NaN when absent
    final_mean: float
    final_se: float
    slope: float
    present: int

    @property
    def absent(self) -> bool:
        return self.present == 0


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    if x.size < 2:
        return math.nan
    return float(np.polyfit(x, y, 1)[0])


def estimate_speed(tr: Trajectory, sigma: int) -> SpeedEstimate:
    """Rightmost-position speed of type ``sigma``.

    ``slope`` is the least-squares slope of the replicate-mean rightmost
    position against ``n`` over the last half of the generations, using the
    replicates present throughout that window.
    """
    g = tr.generations
    n = np.arange(1, g + 1)
    b = tr.rightmost[:, 1:, sigma]
    ratios = b / n
    last = b[:, -1]
    ok = ~np.isnan(last)
    present = int(ok.sum())
    if present == 0:
        return SpeedEstimate(ratios, math.nan, math.nan, math.nan, 0)
    fin = last[ok] / g
    se = float(fin.std(ddof=1) / math.sqrt(present)) if present > 1 else math.nan
    lo = g // 2
    window = b[:, lo:]
    full = ~np.any(np.isnan(window), axis=1)
    slope = _slope(n[lo:].astype(float), window[full].mean(axis=0)) if full.any() else math.nan
    return SpeedEstimate(ratios, float(fin.mean()), se, slope, present)


@dataclass(frozen=True)
class CountRateEstimate:
    a: float
    log_rate: np.ndarray  # (replicates, generations) of log(Z)/n; -inf once Z hits 0
    slope: float
    window: tuple[int, int]
    biased: bool
    hit_zero: np.ndarray  # per replicate: count is zero at the last generation
    truncated: bool


def estimate_count_rate(tr: Trajectory, sigma: int, a: float) -> CountRateEstimate:
    """Growth rate of the number of type-``sigma`` particles at or right of ``n a``.

    The slope of ``log`` of the mean count over surviving replicates is
    fitted on the last half of the generations before capping first binds,
    skipping generations where that mean is zero (``truncated`` then records
    that points were dropped). Averaging counts rather than logs keeps
    replicates whose front lags behind ``n a`` from voiding the fit.
    """
    try:
        k = tr.config.record_counts_at.index(float(a))
    except ValueError:
        raise ValueError(f"a = {a} was not recorded; add it to record_counts_at") from None
    g = tr.generations
    z = tr.count_at[:, :, sigma, k].astype(float)
    n = np.arange(g + 1)
    with np.errstate(divide="ignore"):
        logz = np.log(z)
        rate = logz[:, 1:] / n[1:]
    hit_zero = z[:, -1] == 0
    # growth rates are conditional on survival: drop replicates that died out
    alive = tr.precap[:, -1].sum(axis=1) > 0
    if not alive.any():
        return CountRateEstimate(float(a), rate, math.nan, (0, 0), bool(tr.biased.any()), hit_zero, True)
    z = z[alive]
    unbiased = ~tr.biased[alive].any(axis=0)
    end = int(np.argmin(unbiased)) if not unbiased.all() else g + 1
    lo = max(1, end // 2)
    zbar = z.mean(axis=0)
    pts = np.array([m for m in range(lo, end) if zbar[m] > 0], dtype=int)
    truncated = pts.size < end - lo
    slope = _slope(pts.astype(float), np.log(zbar[pts])) if pts.size >= 3 else math.nan
    biased = bool(tr.biased.any())
    return CountRateEstimate(float(a), rate, slope, (lo, end), biased, hit_zero, truncated)


@dataclass(frozen=True)
class TailProbe:
    b: float
    r: int
    samples: int
    successes: int
    estimate: float  # (1/r) log of the success fraction; -inf with no successes
    lower: float
    upper: float


def tail_probability_probe(
    model: ReproductionModel,
    sigma: int,
    b: float,
    r: int,
    samples: int,
    seed: int = 0,
    chunk: int = 10_000,
) -> TailProbe:
    """Estimate ``(1/r) log P(rightmost type-sigma particle at generation r >= r b)``.

    Independent trees are simulated in vectorized chunks without capping.
    The interval is a 95% Wilson interval on the probability, mapped through
    the same transform.
    """
    if r < 1 or samples < 1:
        raise ValueError("need r >= 1 and samples >= 1")
    hits = 0
    for c, start in enumerate(range(0, samples, chunk)):
        m = min(chunk, samples - start)
        pos = [np.empty(0) for _ in range(model.n_types)]
        tree = [np.empty(0, dtype=np.int64) for _ in range(model.n_types)]
        pos[model.initial] = np.zeros(m)
        tree[model.initial] = np.arange(m)
        for n in range(1, r + 1):
            rng = stream(seed, c, n)
            npos: list[list[np.ndarray]] = [[] for _ in range(model.n_types)]
            ntree: list[list[np.ndarray]] = [[] for _ in range(model.n_types)]
            for (i, j), k in sorted(model.kernels.items()):
                if pos[i].size == 0 or k.mean_children == 0.0:
                    continue
                counts, disp = k.sample_families(rng, pos[i].size)
                npos[j].append(np.repeat(pos[i], counts) + disp)
                ntree[j].append(np.repeat(tree[i], counts))
            pos = [np.concatenate(p) if p else np.empty(0) for p in npos]
            tree = [np.concatenate(p) if p else np.empty(0, dtype=np.int64) for p in ntree]
        best = np.full(m, -np.inf)
        np.maximum.at(best, tree[sigma], pos[sigma])
        hits += int(np.count_nonzero(best >= r * b))
    ci = binomtest(hits, samples).proportion_ci(confidence_level=0.95, method="wilson")

    def tr(p):
        return math.log(p) / r if p > 0 else -math.inf

    return TailProbe(float(b), r, samples, hits, tr(hits / samples), tr(ci.low), tr(ci.high))
