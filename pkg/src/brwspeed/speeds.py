"""Speeds of reducible branching random walks from their class structure.

The pipeline: split the types into classes, compute each class's log PF
curve, enumerate the class chains ("routes") from the initial class to the
target class together with the type pairs that link consecutive classes, run
the lower-bound (``r``/``f``), upper-bound (``g``) and expected-number
(``R``) recursions along each route, and combine routes. A pairwise formula
over ordered class pairs and a brute-force nested infimum provide
independent cross-checks of the recursions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import convex as cx
from .convex import MINUS_INF, PLUS_INF, PROPER, PLConvex
from .interval import INF, Interval
from .model import ReproductionModel
from .spectral import (
    GRID_STEP,
    THETA_MAX,
    ClassDecomposition,
    KappaCurve,
    TypeGraph,
    kappa_curve,
    kappa_exact,
    scc_decompose,
)

TOL_MATCH = 1e-9
TOL_MATCH_SAMPLED = 5e-3
ROUTE_CAP = 10_000
POSITIVE = Interval.make(0.0, INF, False, False)


class HullDegenerateError(ArithmeticError):
    """A convex minorant in the lower-bound recursion is ``-inf`` everywhere."""


class RouteLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridConfig:
    theta_max: float = THETA_MAX
    h: float = GRID_STEP


# -- class structure -----------------------------------------------------


@dataclass(frozen=True)
class ClassStructure:
    model: ReproductionModel
    decomposition: ClassDecomposition
    kappas: dict[int, KappaCurve]
    link_domains: dict[tuple[int, int], Interval]
    link_pairs: dict[tuple[int, int], tuple[tuple[int, int], ...]]
    pair_domains: dict[tuple[int, int], Interval]
    initial_class: int
    target_class: int
    active: tuple[bool, ...]
    grid: GridConfig = field(default_factory=GridConfig)

    @property
    def n_classes(self) -> int:
        return self.decomposition.n_classes

    def kappa(self, i: int) -> PLConvex:
        return self.kappas[i].curve

    def domain(self, i: int) -> Interval:
        return self.kappas[i].domain

    def with_link_domain(self, pair: tuple[int, int], dom: Interval) -> ClassStructure:
        """Copy with the finiteness domain of one linking type pair replaced.

        Built-in laws only produce closed finite endpoints; this lets an
        analysis explore links whose domain is open at an end.
        """
        pd = dict(self.pair_domains)
        pd[pair] = dom
        i, j = (self.decomposition.class_of[t] for t in pair)
        ld = dict(self.link_domains)
        ld[(i, j)] = Interval.real_line()
        for p in self.link_pairs[(i, j)]:
            ld[(i, j)] = ld[(i, j)].intersect(pd[p])
        return replace(self, pair_domains=pd, link_domains=ld)


def default_target(model: ReproductionModel, dec: ClassDecomposition) -> int:
    """Last type (in class order) that descends from the initial type."""
    ci = dec.class_of[model.initial]
    reach = [j for j in range(dec.n_classes) if dec.precedes(ci, j)]
    return dec.classes[max(reach)][0]


def build_class_structure(
    model: ReproductionModel, grid: GridConfig | None = None, target: int | None = None
) -> ClassStructure:
    grid = grid or GridConfig()
    dec = scc_decompose(TypeGraph.of(model))
    if target is None:
        target = default_target(model, dec)
    ci = dec.class_of[model.initial]
    ct = dec.class_of[target]
    if not dec.precedes(ci, ct):
        raise ValueError(f"type {model.type_names[target]!r} does not descend from the initial type")
    active = tuple(dec.precedes(ci, k) and dec.precedes(k, ct) for k in range(dec.n_classes))
    kappas = {}
    for k, types in enumerate(dec.classes):
        if dec.self_communicating[k]:
            kappas[k] = kappa_curve(model, types, k, grid.theta_max, grid.h)
    pairs: dict[tuple[int, int], list[tuple[int, int]]] = {}
    pdom: dict[tuple[int, int], Interval] = {}
    for a, b in sorted(model.support):
        i, j = dec.class_of[a], dec.class_of[b]
        if i != j:
            pairs.setdefault((i, j), []).append((a, b))
            pdom[(a, b)] = model.entry_domain(a, b)
    ldom = {}
    for ij, ps in pairs.items():
        d = Interval.real_line()
        for p in ps:
            d = d.intersect(pdom[p])
        ldom[ij] = d
    return ClassStructure(
        model, dec, kappas, ldom, {k: tuple(v) for k, v in pairs.items()}, pdom, ci, ct, active, grid
    )


# -- routes --------------------------------------------------------------


@dataclass(frozen=True)
class Route:
    classes: tuple[int, ...]
    links: tuple[tuple[int, int], ...]

    @property
    def length(self) -> int:
        return len(self.classes)

    def label(self, cs: ClassStructure) -> str:
        names = cs.model.type_names
        parts = [f"C{self.classes[0]}"]
        for (u, t), c in zip(self.links, self.classes[1:]):
            parts.append(f"-[{names[u]}>{names[t]}]-C{c}")
        return "".join(parts)


def enumerate_routes(cs: ClassStructure, source: int | None = None, target: int | None = None, cap: int = ROUTE_CAP):
    """All class chains from ``source`` to ``target`` times all choices of linking pair."""
    source = cs.initial_class if source is None else source
    target = cs.target_class if target is None else target
    dec = cs.decomposition
    if not dec.precedes(source, target):
        raise ValueError(f"class {source} does not precede class {target}")
    succ: dict[int, list[int]] = {}
    for i, j in sorted(dec.dag_edges):
        succ.setdefault(i, []).append(j)
    paths: list[tuple[int, ...]] = []

    def walk(path):
        last = path[-1]
        if last == target:
            paths.append(tuple(path))
            return
        for nxt in succ.get(last, []):
            if dec.precedes(nxt, target):
                walk(path + [nxt])

    walk([source])
    routes = []
    for p in paths:
        hops = [cs.link_pairs[(a, b)] for a, b in zip(p, p[1:])]
        for links in itertools.product(*hops):
            routes.append(Route(p, tuple(links)))
            if len(routes) > cap:
                raise RouteLimitError(f"more than {cap} routes; use pairwise_speed instead")
    return routes


def _route_data(cs: ClassStructure, route: Route):
    missing = [c for c in route.classes if c not in cs.kappas]
    if missing:
        raise ValueError(f"classes {missing} on the route have no internal reproduction")
    kap = [cs.kappa(c) for c in route.classes]
    doms = [cs.domain(c) for c in route.classes]
    links = [cs.pair_domains[p] for p in route.links]
    return kap, doms, links


# -- conditions ----------------------------------------------------------


def _point_in(iv: Interval, upper: float = INF) -> float:
    """A leftmost-leaning point of ``iv`` that is at most ``upper``."""
    if iv.lo_closed:
        return iv.lo
    hi = min(iv.hi, upper)
    if math.isfinite(hi):
        return 0.5 * (iv.lo + hi) if hi > iv.lo else iv.lo
    return iv.lo + 1.0 if math.isfinite(iv.lo) else 0.0


def chain_witness(sets: list[Interval]):
    """Points ``x_1 <= x_2 <= ...`` with ``x_k`` in ``sets[k]``, or the first failing index.

    Feasibility is decided exactly by propagating upper closures forward;
    the witness is then chosen backwards, leftmost-leaning at each step.
    """
    reach = []
    cur = None
    for k, s in enumerate(sets):
        cur = s if cur is None else s.intersect(cur.upper_closure())
        if cur.is_empty:
            return None, k
        reach.append(cur)
    pts = [0.0] * len(sets)
    upper = INF
    for k in range(len(sets) - 1, -1, -1):
        cand = reach[k].intersect(Interval.make(-INF, upper, False, math.isfinite(upper)))
        pts[k] = _point_in(cand, upper)
        upper = pts[k]
    return tuple(pts), None


@dataclass(frozen=True)
class Condition:
    holds: bool
    witness: tuple | None = None
    violation: str | None = None

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class ConditionReport:
    phi_order: Condition
    new_phi_order: Condition
    off_diag: Condition
    either_or: Condition
    ii: Condition
    best_speed: Condition
    same_domain: Condition
    first_supercritical: bool

    def label(self) -> str:
        if self.phi_order and self.off_diag:
            return "main"
        if self.new_phi_order and self.either_or and self.ii:
            return "alter"
        if self.new_phi_order and self.best_speed:
            return "best-speed"
        return "bounds-only"


def _subset(a: Interval, b: Interval, what: str) -> Condition:
    if a.issubset(b):
        return Condition(True)
    return Condition(False, violation=f"{what}: {a} not within {b}")


def same_domain_condition(cs: ClassStructure) -> Condition:
    """Every nonzero kernel has the same non-empty domain on ``[0, inf)``."""
    half = Interval.make(0.0, INF, True, False)
    doms = {cs.model.entry_domain(i, j).intersect(half) for (i, j) in cs.model.support}
    if len(doms) == 1 and not next(iter(doms)).is_empty:
        return Condition(True, witness=(str(next(iter(doms))),))
    return Condition(False, violation="kernel domains differ: " + ", ".join(sorted(str(d) for d in doms)))


def _ge_line_beyond(kappa: PLConvex, c: float, start: float, tol: float) -> bool:
    """Whether ``kappa(theta) >= c * theta`` for all ``theta >= start``."""
    if kappa.kind != PROPER:
        return kappa.kind == PLUS_INF
    if start > kappa.hi:
        return True
    if not kappa.right_cut and kappa.right_slope < c - tol:
        return False
    pts = np.concatenate(([start], kappa.knots[kappa.knots > start]))
    pts = pts[pts >= kappa.lo]
    if pts.size == 0:
        return kappa.right_cut or kappa.right_slope >= c - tol
    return bool(np.all(kappa(pts) - c * pts >= -tol * (1 + np.abs(c * pts))))


def check_conditions(cs: ClassStructure, route: Route, fs: list[PLConvex] | None = None) -> ConditionReport:
    kap, doms, links = _route_data(cs, route)
    k = len(kap)
    if fs is None:
        fs = recursion_f_all(cs, route)
    sets = [doms[0].intersect(POSITIVE)] + doms[1:]
    pts, bad = chain_witness(sets)
    phi = Condition(True, pts) if pts else Condition(False, violation=f"no admissible point for class position {bad + 1}")

    inter = [doms[0].intersect(POSITIVE)]
    for i in range(k - 1):
        inter += [links[i], doms[i + 1]]
    pts2, bad2 = chain_witness(inter)
    if pts2:
        newphi = Condition(True, pts2)
    else:
        what = f"class position {bad2 // 2 + 1}" if bad2 % 2 == 0 else f"link {bad2 // 2 + 1}"
        newphi = Condition(False, violation=f"no admissible point for {what}")

    off = Condition(True)
    acc = doms[0].upper_closure()
    for i in range(1, k):
        c = _subset(acc.intersect(doms[i]), links[i - 1], f"off-diagonal at hop {i}")
        if not c:
            off = c
            break
        acc = acc.intersect(doms[i].upper_closure())

    either = Condition(True)
    cond_ii = Condition(True)
    best = Condition(True)
    for i in range(k - 1):
        psi_lo, psi_hi = links[i].lo, links[i].hi
        vt = cx.vartheta(fs[i]) if fs[i].kind == PROPER else -INF
        if not (vt <= psi_hi):
            nat = cx.natural(fs[i])
            ok = False
            if nat.kind == PROPER and psi_hi > 0:
                c = nat(psi_hi) / psi_hi
                ok = math.isfinite(c) and _ge_line_beyond(kap[i + 1], c, psi_hi, TOL_MATCH)
            if not ok and either:
                either = Condition(False, violation=f"hop {i + 1}: vartheta {vt:.6g} > sup link {psi_hi:.6g}")
        dom_f = _f_domain(doms, i)
        c = _subset(dom_f.upper_closure().intersect(doms[i + 1]), Interval.make(psi_lo, INF, True, False), f"hop {i + 1}")
        if not c and cond_ii:
            cond_ii = c
        vk = cx.vartheta(kap[i + 1]) if cx.is_k_convex(kap[i + 1]) else -INF
        if not (vk >= psi_lo) and best:
            best = Condition(False, violation=f"hop {i + 1}: vartheta of next class {vk:.6g} < inf link {psi_lo:.6g}")
    best_speed = Condition(bool(newphi and either and best), violation=None if (newphi and either and best) else (best.violation or either.violation or newphi.violation))
    sup = float(kap[0].eval_closure(0.0)) > 0 if kap[0].kind == PROPER else False
    return ConditionReport(phi, newphi, off, either, cond_ii, best_speed, same_domain_condition(cs), bool(sup))


def _f_domain(doms: list[Interval], i: int) -> Interval:
    """Finiteness domain of ``f_i``: its own class domain within the upper closures before it."""
    d = doms[i]
    for j in range(i):
        d = d.intersect(doms[j].upper_closure())
    return d


# -- recursions ----------------------------------------------------------


def recursion_r_all(cs: ClassStructure, route: Route) -> list[PLConvex]:
    kap, _, _ = _route_data(cs, route)
    rs = [cx.sw_fd(kap[0])]
    for i in range(1, len(kap)):
        h = cx.convex_minorant(rs[-1], cx.fenchel_dual(kap[i]))
        if h.kind == MINUS_INF:
            raise HullDegenerateError(f"hull degenerate at route position {i + 1}")
        rs.append(cx.sweep(h))
    return rs


def recursion_r(cs: ClassStructure, route: Route) -> PLConvex:
    return recursion_r_all(cs, route)[-1]


def _nat_or_minus(f: PLConvex) -> PLConvex:
    if f.kind == PLUS_INF:
        return f
    if not cx.is_k_convex(f):
        return PLConvex.plus_inf()
    return cx.natural(f)


def recursion_f_all(cs: ClassStructure, route: Route) -> list[PLConvex]:
    kap, _, _ = _route_data(cs, route)
    fs = [kap[0]]
    for i in range(1, len(kap)):
        fs.append(cx.pointwise_max(_nat_or_minus(fs[-1]), kap[i]))
    return fs


def recursion_f(cs: ClassStructure, route: Route) -> PLConvex:
    return recursion_f_all(cs, route)[-1]


def recursion_g_all(cs: ClassStructure, route: Route) -> list[PLConvex]:
    kap, _, links = _route_data(cs, route)
    gs = [kap[0]]
    for i in range(1, len(kap)):
        nat = _nat_or_minus(gs[-1])
        if nat.kind == MINUS_INF:
            carried = nat
        elif nat.kind == PLUS_INF:
            carried = nat
        else:
            carried = _nat_or_minus(cx.restrict(nat, links[i - 1]))
        gs.append(cx.pointwise_max(carried, kap[i]))
    return gs


def recursion_g(cs: ClassStructure, route: Route) -> PLConvex:
    return recursion_g_all(cs, route)[-1]


def recursion_R_all(cs: ClassStructure, route: Route) -> list[PLConvex]:
    kap, _, _ = _route_data(cs, route)
    rs = [cx.fenchel_dual(kap[0])]
    for i in range(1, len(kap)):
        rs.append(cx.convex_minorant(rs[-1], cx.fenchel_dual(kap[i])))
    return rs


def recursion_R(cs: ClassStructure, route: Route) -> PLConvex:
    return recursion_R_all(cs, route)[-1]


def speed_of(f: PLConvex) -> float:
    """``Lambda`` of the conjugate; ``+inf`` (no information) for ``f`` identically ``+inf``."""
    if f.kind == PLUS_INF:
        return INF
    return cx.lambda_(cx.fenchel_dual(f))


def is_r_function(r: PLConvex, tol: float = TOL_MATCH) -> bool:
    """Increasing, convex, somewhere negative, left-continuous, ``+inf`` where positive."""
    if r.kind != PROPER or r.left_cut:
        return False
    if r.left_slope < -tol or np.any(r.slopes < -tol):
        return False
    if not np.min(r.values) < 0:
        return False
    if np.any(r.values > tol):
        return False
    if r.right_cut and r.hi_value != r.values[-1]:
        return False
    return r.right_cut or r.right_slope <= tol


# -- oracles and pairwise formula ---------------------------------------


def _constraint_grid(theta_max: float, step: float, extra) -> np.ndarray:
    t = step * np.arange(1, int(round(theta_max / step)) + 1)
    pts = [x for x in extra if 0 < x <= theta_max and math.isfinite(x)]
    return np.unique(np.concatenate((t, pts)))


def _nested_dp(q: np.ndarray, allowed: np.ndarray):
    """min over theta_1 <= ... <= theta_K of max_i q[i, theta_i], theta_i allowed."""
    k, n = q.shape
    v = np.where(allowed[0], q[0], INF)
    back = []
    for i in range(1, k):
        pm = np.minimum.accumulate(v)
        back.append(pm)
        v = np.where(allowed[i], np.maximum(q[i], pm), INF)
    j = int(np.argmin(v))
    best = float(v[j])
    path = [j]
    for pm_prev, i in zip(reversed(back), range(k - 2, -1, -1)):
        # prefix minimum of stage i at the chosen point: locate its argmin
        prev_v = pm_prev[: path[-1] + 1]
        path.append(int(np.argmin(prev_v)) if prev_v.size else 0)
    return best, path[::-1]


def nested_speed_oracle(
    cs: ClassStructure,
    route: Route,
    *,
    constrained: bool = True,
    step: float = 1.0 / 256,
    refine: int = 64,
    theta_max: float | None = None,
) -> float:
    """Brute-force infimum over ordered ``theta`` chains of the largest ``kappa_i(theta_i)/theta_i``.

    ``kappa`` is evaluated directly from the transforms (not from the PL
    curves). Constrained: ``theta_i`` lies in the upper closure of the
    incoming link's domain and below the outgoing link's supremum. A second
    pass refines the grid around the minimizing chain.
    """
    _, _, links = _route_data(cs, route)
    theta_max = theta_max or cs.grid.theta_max
    k = route.length
    types = [cs.decomposition.classes[c] for c in route.classes]
    ends = [e for d in links for e in (d.lo, d.hi)]

    def run(t):
        q = np.empty((k, t.size))
        allowed = np.ones((k, t.size), dtype=bool)
        for i in range(k):
            with np.errstate(invalid="ignore"):
                q[i] = kappa_exact(cs.model, types[i], t) / t
            q[i][np.isnan(q[i])] = INF
            if constrained:
                if i > 0:
                    up = links[i - 1].upper_closure()
                    allowed[i] &= np.array([up.contains(x) for x in t])
                if i < k - 1:
                    allowed[i] &= t <= links[i].hi
        return _nested_dp(q, allowed)

    t = _constraint_grid(theta_max, step, ends)
    best, path = run(t)
    if not math.isfinite(best) or refine <= 1:
        return best
    fine = [t]
    for j in path:
        lo, hi = max(t[max(j - 2, 0)], 1e-12), t[min(j + 2, t.size - 1)]
        fine.append(np.linspace(lo, hi, 4 * refine + 1))
    t2 = np.unique(np.concatenate(fine))
    best2, _ = run(t2)
    return min(best, best2)


def pair_speed(ki: PLConvex, kj: PLConvex) -> tuple[float, float]:
    """Speed of class ``j`` fed by class ``i``, computed two ways."""
    a = cx.convex_minorant(cx.sw_fd(ki), cx.fenchel_dual(kj))
    via_hull = cx.lambda_(a) if a.kind != MINUS_INF else INF
    via_nat = speed_of(cx.pointwise_max(_nat_or_minus(ki), kj))
    return via_hull, via_nat


@dataclass(frozen=True)
class PairwiseResult:
    speed: float
    pair: tuple[int, int]
    table: dict[tuple[int, int], tuple[float, float]]
    consistent: bool


def pairwise_speed(cs: ClassStructure, tol: float = TOL_MATCH) -> PairwiseResult:
    dec = cs.decomposition
    table = {}
    for i in range(dec.n_classes):
        for j in range(dec.n_classes):
            if cs.active[i] and cs.active[j] and dec.precedes(i, j) and i in cs.kappas and j in cs.kappas:
                table[(i, j)] = pair_speed(cs.kappa(i), cs.kappa(j))
    best_pair = max(table, key=lambda p: (table[p][0], -p[0], -p[1]))
    consistent = all(a == b or abs(a - b) <= tol * (1 + abs(a)) for a, b in table.values())
    return PairwiseResult(table[best_pair][0], best_pair, table, consistent)


# -- reports -------------------------------------------------------------


@dataclass(frozen=True)
class RouteReport:
    route: Route
    conditions: ConditionReport
    r: PLConvex
    f: PLConvex
    g: PLConvex
    R: PLConvex
    lower: float
    upper: float
    expectation: float
    match: bool
    r_function: bool
    reliable: bool

    @property
    def label(self) -> str:
        return self.conditions.label()


def analyze_route(cs: ClassStructure, route: Route) -> RouteReport:
    fs = recursion_f_all(cs, route)
    cond = check_conditions(cs, route, fs)
    r = recursion_r(cs, route)
    g = recursion_g(cs, route)
    big_r = recursion_R(cs, route)
    f = fs[-1]
    sfg = cx.sw_fd(g) if g.kind != PLUS_INF else PLConvex.plus_inf()
    match = cx.allclose(sfg, r, atol=TOL_MATCH, rtol=TOL_MATCH)
    lower = cx.lambda_(r)
    upper = speed_of(g)
    expect = cx.lambda_(big_r) if big_r.kind != MINUS_INF else INF
    return RouteReport(
        route, cond, r, f, g, big_r, lower, upper, expect, match, is_r_function(r), bool(cond.phi_order)
    )


@dataclass(frozen=True)
class SpeedReport:
    routes: tuple[RouteReport, ...]
    lower: float
    upper: float
    pairwise: PairwiseResult
    expectation: float
    class_speeds: dict[int, float]
    super_speed: bool
    overall: Condition
    label: str

    def rate_table(self, a_grid) -> np.ndarray:
        return aggregate_profile([rr.r for rr in self.routes], a_grid)


def aggregate_profile(rs: list[PLConvex], a_grid) -> np.ndarray:
    """Pointwise minimum of the route rate functions; it need not be convex."""
    a = np.asarray(a_grid, dtype=float)
    vals = np.full(a.shape, INF)
    for r in rs:
        if r.kind != PLUS_INF:
            vals = np.minimum(vals, r(a))
    return vals


def overall_condition(cs: ClassStructure, reports) -> Condition:
    """Conditions of the headline theorem across the whole structure."""
    first = cs.initial_class
    if first not in cs.kappas:
        return Condition(False, violation="initial class has no internal reproduction")
    if cs.kappas[first].period != 1:
        return Condition(False, violation="initial class is periodic")
    if not float(cs.kappa(first).eval_closure(0.0)) > 0:
        return Condition(False, violation="initial class is not supercritical")
    for rr in reports:
        if not rr.conditions.phi_order:
            return Condition(False, violation=f"route {rr.route.classes}: {rr.conditions.phi_order.violation}")
    for (i, j), dom in sorted(cs.link_domains.items()):
        if not (cs.active[i] and cs.active[j]) or i not in cs.kappas or j not in cs.kappas:
            continue
        lhs = cs.domain(i).upper_closure().intersect(cs.domain(j))
        if not lhs.issubset(dom):
            return Condition(False, violation=f"link C{i}->C{j}: {lhs} not within {dom}")
    return Condition(True)


def aggregate(cs: ClassStructure, reports: list[RouteReport], pairwise: PairwiseResult | None = None) -> SpeedReport:
    if not reports:
        raise ValueError("need at least one route")
    pairwise = pairwise or pairwise_speed(cs)
    lower = max(rr.lower for rr in reports)
    upper = max(rr.upper for rr in reports)
    expectation = max(rr.expectation for rr in reports)
    class_speeds = {
        c: (cx.ratio_inf(kc.curve) if cx.is_k_convex(kc.curve) else -INF)
        for c, kc in cs.kappas.items()
        if cs.active[c]
    }
    best_single = max(class_speeds.values())
    super_speed = pairwise.speed > best_single + TOL_MATCH_SAMPLED
    ov = overall_condition(cs, reports)
    if ov:
        label = "overall"
    else:
        label = max((rr.label for rr in reports), key=_ORDER.index)
    return SpeedReport(tuple(reports), lower, upper, pairwise, expectation, class_speeds, super_speed, ov, label)


_ORDER = ["main", "alter", "best-speed", "bounds-only"]


def _at_least(label: str, name: str) -> bool:
    return _ORDER.index(label) <= _ORDER.index(name)


def analyze(cs: ClassStructure) -> SpeedReport:
    routes = enumerate_routes(cs)
    return aggregate(cs, [analyze_route(cs, r) for r in routes])


# -- rate profile --------------------------------------------------------


@dataclass(frozen=True)
class RateProfile:
    a: np.ndarray
    r_lower: np.ndarray
    swfdg_upper: np.ndarray
    R_expect: np.ndarray
    refined: bool
    note: str


def rate_profile(cs: ClassStructure, route: Route, a_grid, report: RouteReport | None = None) -> RateProfile:
    """Rows ``(a, r_K(a), swFd g_K(a), R_K(a))`` for one route.

    ``refined`` says whether ``-swFd g_K`` is asserted as the count growth
    rate. For the built-in laws the displacement tails are pure exponentials
    at every finite end of their domains, so the tail regularity needed for
    that prediction holds; what remains is the interleaved chain condition
    and a supercritical first class.
    """
    rr = report or analyze_route(cs, route)
    a = np.asarray(a_grid, dtype=float)
    sfg = cx.sw_fd(rr.g) if rr.g.kind != PLUS_INF else PLConvex.plus_inf()
    R = rr.R(a) if rr.R.kind == PROPER else np.full(a.shape, -INF if rr.R.kind == MINUS_INF else INF)
    refined = bool(rr.conditions.new_phi_order) and rr.conditions.first_supercritical
    if rr.match:
        note = "matched bounds"
    elif refined:
        note = "refined prediction (regular tails)"
    else:
        note = "bounds only"
    return RateProfile(a, rr.r(a), sfg(a), R, refined, note)
