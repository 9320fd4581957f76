"""Class decomposition and per-class log Perron-Frobenius curves.

Types are grouped into strongly connected components of the "can have a
child of this type" graph and ordered so that every class comes after the
classes it descends from. For each class the log of the Perron-Frobenius
eigenvalue of its block of the mean transform matrix is sampled on a grid of
``theta`` and interpolated into a :class:`PLConvex`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from . import _kernels
from .convex import PLConvex, SampleMode, from_samples
from .interval import INF, Interval
from .model import PointMass, ReproductionModel, transform_grid

TOL_PF = 1e-12
MAX_PF_ITER = 100_000
THETA_MAX = 8.0
GRID_STEP = 1.0 / 512


class MomentConditionError(ValueError):
    """No finite transform on the positive half-line within the grid."""


class ReducibleBlockError(ValueError):
    pass


@dataclass(frozen=True)
class TypeGraph:
    n_types: int
    support: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n_types < 1:
            raise ValueError("need at least one type")
        for a, b in self.support:
            if not (0 <= a < self.n_types and 0 <= b < self.n_types):
                raise ValueError(f"support pair ({a}, {b}) out of range")

    @classmethod
    def of(cls, model: ReproductionModel) -> TypeGraph:
        return cls(model.n_types, model.support)


@dataclass(frozen=True)
class ClassDecomposition:
    """Classes in topological order.

    ``reach`` holds every pair ``(i, j)`` of class indices with ``i`` equal
    to or an ancestor of ``j``.
    """

    classes: tuple[tuple[int, ...], ...]
    class_of: tuple[int, ...]
    dag_edges: frozenset[tuple[int, int]]
    reach: frozenset[tuple[int, int]]
    self_communicating: tuple[bool, ...]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def precedes(self, i: int, j: int) -> bool:
        return (i, j) in self.reach


def scc_decompose(g: TypeGraph) -> ClassDecomposition:
    """Strongly connected components in a deterministic topological order.

    Ties between classes that are unordered by descent are broken by their
    smallest type index.
    """
    dg = nx.DiGraph()
    dg.add_nodes_from(range(g.n_types))
    dg.add_edges_from(g.support)
    cond = nx.condensation(dg)
    members = {c: tuple(sorted(cond.nodes[c]["members"])) for c in cond.nodes}
    order = list(nx.lexicographical_topological_sort(cond, key=lambda c: members[c][0]))
    pos = {c: i for i, c in enumerate(order)}
    classes = tuple(members[c] for c in order)
    class_of = [0] * g.n_types
    for i, cl in enumerate(classes):
        for t in cl:
            class_of[t] = i
    edges = frozenset((pos[a], pos[b]) for a, b in cond.edges)
    reach = set()
    for c in cond.nodes:
        reach.add((pos[c], pos[c]))
        for d in nx.descendants(cond, c):
            reach.add((pos[c], pos[d]))
    selfc = tuple(len(cl) > 1 or (cl[0], cl[0]) in g.support for cl in classes)
    return ClassDecomposition(classes, tuple(class_of), edges, frozenset(reach), selfc)


def period(block_support, vertices=None) -> int:
    """Period of an irreducible block: gcd of cycle lengths."""
    edges = list(block_support)
    if vertices is None:
        vertices = sorted({v for e in edges for v in e})
    if not vertices:
        raise ValueError("empty block")
    adj: dict[int, list[int]] = {v: [] for v in vertices}
    for a, b in edges:
        adj[a].append(b)
    start = vertices[0]
    level = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if w not in level:
                    level[w] = level[v] + 1
                    nxt.append(w)
        frontier = nxt
    d = 0
    for a, b in edges:
        if a in level and b in level:
            d = math.gcd(d, level[a] + 1 - level[b])
    if d == 0:
        raise ReducibleBlockError("block has no cycle")
    return d


def _is_irreducible(m: np.ndarray) -> bool:
    n = m.shape[0]
    if n == 1:
        return True
    dg = nx.DiGraph()
    dg.add_nodes_from(range(n))
    dg.add_edges_from(zip(*np.nonzero(m)))
    return nx.is_strongly_connected(dg)


def log_pf(m, *, check: bool = True) -> float:
    """Log of the Perron-Frobenius eigenvalue of a nonnegative irreducible matrix.

    Any infinite entry gives ``+inf``. 1x1 and 2x2 blocks use the closed form;
    larger ones use shifted power iteration.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("need a square matrix")
    if np.any(m < 0) or np.any(np.isnan(m)):
        raise ValueError("entries must be nonnegative")
    if np.any(np.isinf(m)):
        return INF
    if check and not _is_irreducible(m):
        raise ReducibleBlockError("matrix is not irreducible; pass a single class block")
    n = m.shape[0]
    if n == 1:
        return math.log(m[0, 0]) if m[0, 0] > 0 else -INF
    if n == 2:
        a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        half = 0.5 * (a - d)
        return math.log(0.5 * (a + d) + math.sqrt(half * half + b * c))
    return float(_kernels.log_pf_batch(m[None, :, :].copy(), TOL_PF, MAX_PF_ITER)[0])


def log_pf_many(mats: np.ndarray) -> np.ndarray:
    """:func:`log_pf` over a stack ``(G, n, n)`` of blocks with a common support."""
    mats = np.asarray(mats, dtype=float)
    g, n, _ = mats.shape
    out = np.full(g, INF)
    fin = np.all(np.isfinite(mats.reshape(g, -1)), axis=1)
    if not fin.any():
        return out
    m = mats[fin]
    with np.errstate(divide="ignore"):
        if n == 1:
            out[fin] = np.log(m[:, 0, 0])
        elif n == 2:
            a, b, c, d = m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
            half = 0.5 * (a - d)
            out[fin] = np.log(0.5 * (a + d) + np.sqrt(half * half + b * c))
        else:
            out[fin] = _kernels.log_pf_batch(np.ascontiguousarray(m), TOL_PF, MAX_PF_ITER)
    return out


def block_domain(model: ReproductionModel, types) -> Interval:
    """Intersection of the finiteness domains of all kernels inside a block."""
    dom = Interval.real_line()
    ts = set(types)
    for (i, j), k in model.kernels.items():
        if i in ts and j in ts:
            dom = dom.intersect(k.domain())
    return dom


def block_matrices(model: ReproductionModel, types, theta) -> np.ndarray:
    """Stack of the block's transform matrices at each ``theta``."""
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    idx = {ty: a for a, ty in enumerate(types)}
    out = np.zeros((t.size, len(types), len(types)))
    for (i, j), k in model.kernels.items():
        if i in idx and j in idx:
            out[:, idx[i], idx[j]] = transform_grid(k, t)
    return out


def kappa_exact(model: ReproductionModel, types, theta) -> np.ndarray:
    """Log PF eigenvalue of the block at each ``theta``; ``+inf`` off the domain or below 0."""
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    dom = block_domain(model, types)
    ok = np.array([x >= 0 and dom.contains(x) for x in t])
    out = np.full(t.shape, INF)
    if ok.any():
        out[ok] = log_pf_many(block_matrices(model, types, t[ok]))
    return out


@dataclass(frozen=True)
class KappaCurve:
    class_index: int
    curve: PLConvex
    domain: Interval
    period: int


def kappa_grid(dom: Interval, theta_max: float = THETA_MAX, h: float = GRID_STEP) -> np.ndarray:
    """Grid points of ``[0, theta_max]`` inside ``dom``, plus its finite endpoints."""
    n = int(round(theta_max / h))
    t = h * np.arange(n + 1)
    keep = np.array([dom.contains(x) for x in t], dtype=bool)
    t = t[keep]
    extra = [e for e, closed in ((dom.lo, dom.lo_closed), (dom.hi, dom.hi_closed)) if closed and 0 <= e <= theta_max]
    return np.unique(np.concatenate((t, extra)))


def kappa_curve(
    model: ReproductionModel,
    types,
    class_index: int = 0,
    theta_max: float = THETA_MAX,
    h: float = GRID_STEP,
) -> KappaCurve:
    """Sampled log PF curve of one class as a cut-tailed PL interpolant.

    The domain comes from the kernels' exact finiteness intervals, so its
    endpoints are grid points of the interpolant without any numerical
    probing. Below 0 the curve is ``+inf`` by convention.
    """
    types = tuple(types)
    dom = block_domain(model, types).intersect(Interval.make(0.0, INF, True, False))
    support = [(i, j) for (i, j) in model.support if i in types and j in types]
    if not support:
        raise ReducibleBlockError(f"class {class_index} has no internal reproduction")
    per = period(support, list(types))
    if len(types) == 1:
        k = model.kernels[(types[0], types[0])]
        if isinstance(k.disp, PointMass):
            # log-transform is exactly affine; keep its tail instead of cutting at theta_max
            curve = PLConvex.build([0.0], [math.log(k.mean_children)], None, k.disp.x)
            return KappaCurve(class_index, curve, dom, per)
    t = kappa_grid(dom, theta_max, h)
    vals = log_pf_many(block_matrices(model, types, t)) if t.size else t
    if not np.any(np.isfinite(vals) & (t > 0)):
        raise MomentConditionError(f"moment condition fails on grid for class {class_index} (domain {dom})")
    curve = from_samples(t, vals, SampleMode.INTERPOLATE)
    return KappaCurve(class_index, curve, dom, per)
