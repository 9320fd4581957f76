"""Reproduction laws: offspring kernels with exact transforms and samplers.

An offspring kernel describes the children of one type produced by a parent
of another type: a count law (Poisson or deterministic) and a displacement
law for each child. Only the mean intensity matters for the analysis, so the
transform of a kernel is ``mean count * E[exp(theta * X)]``.

The lattice family is the exception: it is specified directly as an
intensity on a lattice (``e^alpha e^{-phi w r} / r^3`` children at ``w r``
and ``p e^{psi r} / r^3`` at ``-r`` for ``r = 1, 2, ...``), and the count law
scales that intensity. With ``p > 0`` a parent has infinitely many children
on average, so such kernels are available to the analysis only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import mpmath
import numpy as np

from .interval import INF, Interval

_LATTICE_TAIL_RTOL = 1e-12
_LATTICE_MAX_TERMS = 2_000_000


class ModelError(ValueError):
    """Malformed model description; the message names the offending field."""


# -- count laws ----------------------------------------------------------


@dataclass(frozen=True)
class Poisson:
    mean: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and self.mean > 0):
            raise ModelError(f"count.poisson: mean must be positive and finite, got {self.mean!r}")

    @property
    def expected(self) -> float:
        return self.mean

    def sample(self, rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
        return rng.poisson(self.mean * scale, size=n)


@dataclass(frozen=True)
class Deterministic:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ModelError(f"count.det: k must be a nonnegative integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))

    @property
    def expected(self) -> float:
        return float(self.k)

    def sample(self, rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
        if scale == 1.0:
            return np.full(n, self.k, dtype=np.int64)
        # k independent copies of a unit with mean `scale`: floor plus a coin
        whole = math.floor(scale)
        frac = scale - whole
        extra = rng.binomial(self.k, frac, size=n) if frac > 0 else 0
        return np.full(n, self.k * whole, dtype=np.int64) + extra


CountLaw = Poisson | Deterministic


# -- displacement laws ---------------------------------------------------


@dataclass(frozen=True)
class PointMass:
    x: float

    def mgf(self, theta: float) -> float:
        return math.exp(theta * self.x)

    def domain(self) -> Interval:
        return Interval.real_line()

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, float(self.x))


@dataclass(frozen=True)
class Normal:
    mean: float
    var: float

    def __post_init__(self):
        if not (math.isfinite(self.var) and self.var >= 0):
            raise ModelError(f"disp.normal: variance must be nonnegative, got {self.var!r}")

    def mgf(self, theta: float) -> float:
        e = self.mean * theta + 0.5 * self.var * theta * theta
        return math.exp(e) if e < 709.0 else INF

    def domain(self) -> Interval:
        return Interval.real_line()

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(self.mean, math.sqrt(self.var), size=n)


@dataclass(frozen=True)
class DiscreteTable:
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.points:
            raise ModelError("disp.table: needs at least one [x, p] row")
        probs = [p for _, p in self.points]
        if any(p < 0 for p in probs) or abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ModelError("disp.table: probabilities must be nonnegative and sum to 1")

    @cached_property
    def _xs(self) -> np.ndarray:
        return np.array([x for x, _ in self.points], dtype=float)

    @cached_property
    def _cdf(self) -> np.ndarray:
        c = np.cumsum([p for _, p in self.points])
        c[-1] = 1.0
        return c

    def mgf(self, theta: float) -> float:
        return math.fsum(p * math.exp(theta * x) for x, p in self.points)

    def domain(self) -> Interval:
        return Interval.real_line()

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self._xs[np.searchsorted(self._cdf, rng.random(n), side="right")]


@dataclass(frozen=True)
class LatticeSeries:
    """Intensity ``e^alpha e^{-phi w r}/r^3`` at ``w r`` plus ``p e^{psi r}/r^3`` at ``-r``."""

    alpha: float
    w: float
    phi: float
    psi: float
    p: float

    def __post_init__(self):
        if not self.w > 0:
            raise ModelError(f"disp.lattice: spacing must be positive, got {self.w!r}")
        if not (0 < self.psi <= self.phi):
            raise ModelError(f"disp.lattice: need 0 < psi <= phi, got psi={self.psi!r}, phi={self.phi!r}")
        if not self.p >= 0:
            raise ModelError(f"disp.lattice: p must be nonnegative, got {self.p!r}")

    def intensity_transform(self, theta: float) -> float:
        if not self.domain().contains(theta):
            return INF
        up = math.exp(self.alpha) * float(mpmath.polylog(3, mpmath.exp((theta - self.phi) * self.w)))
        if self.p == 0:
            return up
        return up + self.p * float(mpmath.polylog(3, mpmath.exp(self.psi - theta)))

    def domain(self) -> Interval:
        if self.p > 0:
            return Interval.closed(self.psi, self.phi)
        return Interval.make(-INF, self.phi, False, True)

    @property
    def samplable(self) -> bool:
        return self.p == 0

    @cached_property
    def _table(self) -> tuple[np.ndarray, np.ndarray, float]:
        # terms r = 1..R with the neglected tail below 1e-12 of the total
        c = self.phi * self.w
        if c > 0:
            q = math.exp(-c)
            # tail after R is at most q^(R+1) / ((1 - q) (R+1)^3)
            r_max = 1
            while q ** (r_max + 1) / ((1 - q) * (r_max + 1) ** 3) > _LATTICE_TAIL_RTOL * q and r_max < _LATTICE_MAX_TERMS:
                r_max *= 2
        else:
            r_max = _LATTICE_MAX_TERMS
        r = np.arange(1, r_max + 1, dtype=float)
        weights = np.exp(-c * r) / r**3
        total = weights.sum()
        cdf = np.cumsum(weights) / total
        cdf[-1] = 1.0
        return r, cdf, float(math.exp(self.alpha) * total)

    @property
    def mass(self) -> float:
        """Expected number of children per unit of count intensity (``p = 0``)."""
        return self._table[2]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        r, cdf, _ = self._table
        return self.w * r[np.searchsorted(cdf, rng.random(n), side="right")]


DisplacementLaw = PointMass | Normal | DiscreteTable | LatticeSeries


# -- kernels -------------------------------------------------------------


@dataclass(frozen=True)
class OffspringKernel:
    count: CountLaw
    disp: DisplacementLaw

    def transform(self, theta: float) -> float:
        """Mean intensity transform ``E sum_children exp(theta * X)``."""
        return transform(self, theta)

    def domain(self) -> Interval:
        return self.disp.domain()

    @property
    def mean_children(self) -> float:
        return transform(self, 0.0)

    @property
    def samplable(self) -> bool:
        return not isinstance(self.disp, LatticeSeries) or self.disp.samplable

    def sample_families(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Children of ``n`` parents: per-parent counts and all displacements in parent order."""
        if not self.samplable:
            raise ModelError("lattice kernels with p > 0 have infinite mean and cannot be simulated")
        if isinstance(self.disp, LatticeSeries):
            counts = self.count.sample(rng, n, self.disp.mass)
        else:
            counts = self.count.sample(rng, n)
        return counts, self.disp.sample(rng, int(counts.sum()))


def transform(k: OffspringKernel, theta: float) -> float:
    if isinstance(k.disp, LatticeSeries):
        return k.count.expected * k.disp.intensity_transform(theta)
    return k.count.expected * k.disp.mgf(theta)


def transform_grid(k: OffspringKernel, theta) -> np.ndarray:
    """Vectorized :func:`transform` over an array of ``theta``."""
    t = np.asarray(theta, dtype=float)
    d = k.disp
    c = k.count.expected
    with np.errstate(over="ignore"):
        if isinstance(d, PointMass):
            return c * np.exp(t * d.x)
        if isinstance(d, Normal):
            return c * np.exp(d.mean * t + 0.5 * d.var * t * t)
        if isinstance(d, DiscreteTable):
            xs = d._xs
            ps = np.array([p for _, p in d.points])
            return c * (np.exp(np.multiply.outer(t, xs)) @ ps)
    return np.array([transform(k, float(x)) for x in t.ravel()]).reshape(t.shape)


def kernel_domain(k: OffspringKernel) -> Interval:
    return k.disp.domain()


def sample_offspring(k: OffspringKernel, rng: np.random.Generator) -> list[float]:
    """Displacements of the children of a single parent."""
    _, disp = k.sample_families(rng, 1)
    return disp.tolist()


# -- models --------------------------------------------------------------


@dataclass(frozen=True)
class ReproductionModel:
    type_names: tuple[str, ...]
    kernels: dict[tuple[int, int], OffspringKernel] = field(hash=False)
    initial: int = 0

    def __post_init__(self):
        n = len(self.type_names)
        if n == 0:
            raise ModelError("types: need at least one type")
        if len(set(self.type_names)) != n:
            raise ModelError("types: names must be unique")
        if not 0 <= self.initial < n:
            raise ModelError("initial: not a known type")
        for i, j in self.kernels:
            if not (0 <= i < n and 0 <= j < n):
                raise ModelError(f"kernels: index pair ({i}, {j}) out of range")

    @property
    def n_types(self) -> int:
        return len(self.type_names)

    def index(self, name: str) -> int:
        try:
            return self.type_names.index(name)
        except ValueError:
            raise ModelError(f"unknown type {name!r}") from None

    @property
    def support(self) -> frozenset[tuple[int, int]]:
        return frozenset(ij for ij, k in self.kernels.items() if k.mean_children != 0.0)

    def entry_domain(self, i: int, j: int) -> Interval:
        k = self.kernels.get((i, j))
        return Interval.real_line() if k is None else k.domain()

    def mean_matrix_at(self, theta: float) -> np.ndarray:
        return mean_matrix_at(self, theta)


def mean_matrix_at(model: ReproductionModel, theta: float) -> np.ndarray:
    """Entrywise transforms at ``theta``; absent kernels give 0."""
    n = model.n_types
    m = np.zeros((n, n))
    for (i, j), k in model.kernels.items():
        m[i, j] = transform(k, theta)
    return m


# -- JSON ----------------------------------------------------------------


def _only(obj: dict, allowed: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ModelError(f"{where}: expected an object")
    extra = set(obj) - allowed
    if extra:
        raise ModelError(f"{where}: unknown field {sorted(extra)[0]!r}")


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ModelError(f"{where}: expected a number")
    return float(v)


def _one_key(obj, where: str) -> tuple[str, object]:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ModelError(f"{where}: expected an object with exactly one field")
    return next(iter(obj.items()))


def _parse_count(obj, where: str) -> CountLaw:
    key, v = _one_key(obj, where)
    if key == "poisson":
        return Poisson(_num(v, f"{where}.poisson"))
    if key == "det":
        return Deterministic(_num(v, f"{where}.det"))
    raise ModelError(f"{where}: unknown field {key!r}")


def _parse_disp(obj, where: str) -> DisplacementLaw:
    key, v = _one_key(obj, where)
    w = f"{where}.{key}"
    if key == "point":
        return PointMass(_num(v, w))
    if key == "normal":
        if not isinstance(v, list) or len(v) != 2:
            raise ModelError(f"{w}: expected [mean, variance]")
        return Normal(_num(v[0], w), _num(v[1], w))
    if key == "table":
        if not isinstance(v, list) or not all(isinstance(r, list) and len(r) == 2 for r in v):
            raise ModelError(f"{w}: expected a list of [x, p] rows")
        return DiscreteTable(tuple((_num(x, w), _num(p, w)) for x, p in v))
    if key == "lattice":
        if not isinstance(v, list) or len(v) != 5:
            raise ModelError(f"{w}: expected [alpha, spacing, phi, psi, p]")
        return LatticeSeries(*(_num(x, w) for x in v))
    raise ModelError(f"{where}: unknown field {key!r}")


def model_from_dict(doc: dict) -> ReproductionModel:
    _only(doc, {"types", "initial", "kernels"}, "model")
    for key in ("types", "initial", "kernels"):
        if key not in doc:
            raise ModelError(f"{key}: missing")
    types = doc["types"]
    if not isinstance(types, list) or not all(isinstance(t, str) for t in types):
        raise ModelError("types: expected a list of names")
    names = tuple(types)
    if doc["initial"] not in names:
        raise ModelError(f"initial: unknown type {doc['initial']!r}")
    if not isinstance(doc["kernels"], list):
        raise ModelError("kernels: expected a list")
    kernels: dict[tuple[int, int], OffspringKernel] = {}
    for n, kd in enumerate(doc["kernels"]):
        where = f"kernels[{n}]"
        _only(kd, {"from", "to", "count", "disp"}, where)
        for key in ("from", "to", "count", "disp"):
            if key not in kd:
                raise ModelError(f"{where}.{key}: missing")
        for key in ("from", "to"):
            if kd[key] not in names:
                raise ModelError(f"{where}.{key}: unknown type {kd[key]!r}")
        ij = (names.index(kd["from"]), names.index(kd["to"]))
        if ij in kernels:
            raise ModelError(f"{where}: duplicate kernel {kd['from']!r} -> {kd['to']!r}")
        kernels[ij] = OffspringKernel(_parse_count(kd["count"], f"{where}.count"), _parse_disp(kd["disp"], f"{where}.disp"))
    return ReproductionModel(names, kernels, names.index(doc["initial"]))


def _count_to_dict(c: CountLaw) -> dict:
    return {"poisson": c.mean} if isinstance(c, Poisson) else {"det": c.k}


def _disp_to_dict(d: DisplacementLaw) -> dict:
    if isinstance(d, PointMass):
        return {"point": d.x}
    if isinstance(d, Normal):
        return {"normal": [d.mean, d.var]}
    if isinstance(d, DiscreteTable):
        return {"table": [list(r) for r in d.points]}
    return {"lattice": [d.alpha, d.w, d.phi, d.psi, d.p]}


def model_to_dict(model: ReproductionModel) -> dict:
    names = model.type_names
    return {
        "types": list(names),
        "initial": names[model.initial],
        "kernels": [
            {"from": names[i], "to": names[j], "count": _count_to_dict(k.count), "disp": _disp_to_dict(k.disp)}
            for (i, j), k in sorted(model.kernels.items())
        ],
    }


def load_model(path: str | Path) -> ReproductionModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return model_from_dict(doc)


def dump_model(model: ReproductionModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


# -- convenience constructors used by tests and examples -----------------


def gaussian_kernel(alpha: float, mu: float, var: float) -> OffspringKernel:
    """Poisson(e^alpha) children, each displaced by N(mu, var)."""
    return OffspringKernel(Poisson(math.exp(alpha)), Normal(mu, var))


def generic_gaussian_kernel(delta: float, b: float) -> OffspringKernel:
    """Gaussian kernel whose log-transform is ``(theta - 2 b delta)^2 / (4 delta)``."""
    return gaussian_kernel(delta * b * b, -b, 1.0 / (2.0 * delta))
