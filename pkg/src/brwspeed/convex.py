"""Exact calculus of piecewise-linear convex functions on the real line.

A :class:`PLConvex` is either one of the two constant improper functions
(``+inf`` everywhere, ``-inf`` everywhere) or a proper convex function given by
strictly increasing knots, the finite values at those knots, and a tail on
each side that is either cut (the function is ``+inf`` beyond the outermost
knot) or affine with a given slope. At a cut endpoint the function may take a
value strictly above its one-sided limit; that is how non-closed functions are
represented.

Everything here is closed over the class: conjugates, sweeps, pointwise
maxima, closed convex minorants and the ``natural`` transform map piecewise
linear convex functions to piecewise linear convex functions, so no sampling
is involved. Conjugation ignores endpoint overrides (it only sees the
closure).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .interval import INF, Interval, fmt_ext

PROPER = "proper"
PLUS_INF = "+inf"
MINUS_INF = "-inf"

_MERGE_RTOL = 1e-13
_COLLINEAR_RTOL = 1e-12
_CONVEX_RTOL = 1e-9
_CROSS_RTOL = 1e-9
TOL_CONVEXIFY = 1e-9


class ImproperFunctionError(ValueError):
    """Raised when an operation needs a function that is finite somewhere."""


class NotKConvexError(ValueError):
    """Raised when an operation needs a k-convex function.

    k-convex: convex, ``+inf`` on ``(-inf, 0)`` and finite somewhere on
    ``(0, inf)``.
    """


class NonConvexSamplesError(ValueError):
    pass


class SampleMode(str, Enum):
    INTERPOLATE = "interpolate"
    LOWER_HULL = "lower_hull"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PLConvex:
    """Piecewise-linear convex function; see the module docstring.

    Use :meth:`build`, :meth:`plus_inf` or :meth:`minus_inf` rather than the
    raw constructor. For a proper function ``lo_value``/``hi_value`` are the
    values taken at the first/last knot when that side is cut; they are at
    least the stored knot value, with equality meaning closed.
    """

    kind: str
    knots: np.ndarray
    values: np.ndarray
    left_slope: float | None = None
    right_slope: float | None = None
    lo_value: float = math.nan
    hi_value: float = math.nan

    # -- construction ---------------------------------------------------
    @classmethod
    def plus_inf(cls) -> PLConvex:
        return cls(PLUS_INF, _frozen([]), _frozen([]))

    @classmethod
    def minus_inf(cls) -> PLConvex:
        return cls(MINUS_INF, _frozen([]), _frozen([]))

    @classmethod
    def affine(cls, slope: float, intercept: float) -> PLConvex:
        """``theta -> intercept + slope * theta`` on the whole line."""
        return cls.build([0.0], [intercept], slope, slope)

    @classmethod
    def build(
        cls,
        knots,
        values,
        left_slope: float | None = None,
        right_slope: float | None = None,
        lo_value: float | None = None,
        hi_value: float | None = None,
        *,
        check: bool = True,
    ) -> PLConvex:
        """Validate and canonicalize a proper piecewise-linear convex function.

        Near-duplicate knots are merged and collinear knots dropped. A
        function whose only point carries an infinite override collapses to
        ``+inf`` everywhere.
        """
        x = np.array(knots, dtype=float).ravel()
        y = np.array(values, dtype=float).ravel()
        if x.size == 0 or x.shape != y.shape:
            raise ValueError("need matching, non-empty knots and values")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("knots and values must be finite")
        for s in (left_slope, right_slope):
            if s is not None and not math.isfinite(s):
                raise ValueError("tail slopes must be finite")
        dx = np.diff(x)
        if np.any(dx < 0):
            raise ValueError("knots must be increasing")
        close = dx <= _MERGE_RTOL * np.maximum(1.0, np.abs(x[1:]))
        if np.any(close):
            # one representative per run of near-equal knots; the last run
            # keeps its last knot so an exact right endpoint survives
            keep = np.concatenate(([True], ~close))
            if close[-1]:
                start = len(close) - 1
                while start > 0 and close[start - 1]:
                    start -= 1
                if start > 0:
                    keep[start] = False
                    keep[-1] = True
            x, y = x[keep], y[keep]

        lo_value = y[0] if (left_slope is not None or lo_value is None) else float(lo_value)
        hi_value = y[-1] if (right_slope is not None or hi_value is None) else float(hi_value)

        slopes = np.diff(y) / np.diff(x)
        full = np.concatenate(
            ([left_slope] if left_slope is not None else [], slopes, [right_slope] if right_slope is not None else [])
        )
        if check and full.size > 1:
            drop = full[1:] - full[:-1]
            scale = np.maximum(1.0, np.maximum(np.abs(full[1:]), np.abs(full[:-1])))
            if np.any(drop < -_CONVEX_RTOL * scale):
                i = int(np.argmin(drop / scale))
                raise ValueError(f"slopes decrease ({full[i]!r} -> {full[i + 1]!r}); not convex")

        # Drop knots whose two sides have the same slope (never a cut
        # endpoint). Any concave kink left at this point is rounding from a
        # short segment, so it goes too; repeat since neighbours' slopes move.
        while x.size > 1 or (left_slope is not None and right_slope is not None):
            slopes = np.diff(y) / np.diff(x)
            lslope = np.concatenate(([np.nan if left_slope is None else left_slope], slopes))
            rslope = np.concatenate((slopes, [np.nan if right_slope is None else right_slope]))
            scale = np.maximum(1.0, np.maximum(np.abs(lslope), np.abs(rslope)))
            flat = rslope - lslope <= _COLLINEAR_RTOL * scale
            flat &= ~(np.isnan(lslope) | np.isnan(rslope))
            if np.all(flat):
                # affine on the whole line: canonical single knot at 0
                s = left_slope
                return cls(PROPER, _frozen([0.0]), _frozen([y[0] - s * x[0]]), s, s, y[0] - s * x[0], y[0] - s * x[0])
            if not np.any(flat):
                break
            x, y = x[~flat], y[~flat]

        lo_value = y[0] if left_slope is not None else max(lo_value, y[0])
        hi_value = y[-1] if right_slope is not None else max(hi_value, y[-1])
        if x.size == 1 and left_slope is None and right_slope is None:
            v = max(lo_value, hi_value)
            if v == INF:
                return cls.plus_inf()
            # a one-point domain has no interior limit to differ from
            y = np.array([v])
            lo_value = hi_value = v
        return cls(PROPER, _frozen(x), _frozen(y), _opt(left_slope), _opt(right_slope), float(lo_value), float(hi_value))

    # -- basic queries --------------------------------------------------
    @property
    def is_proper(self) -> bool:
        return self.kind == PROPER

    @property
    def left_cut(self) -> bool:
        return self.left_slope is None

    @property
    def right_cut(self) -> bool:
        return self.right_slope is None

    @property
    def lo(self) -> float:
        """Infimum of the finiteness domain."""
        if self.kind == PLUS_INF:
            return INF
        if self.kind == MINUS_INF or not self.left_cut:
            return -INF
        return float(self.knots[0])

    @property
    def hi(self) -> float:
        if self.kind == PLUS_INF:
            return -INF
        if self.kind == MINUS_INF or not self.right_cut:
            return INF
        return float(self.knots[-1])

    @property
    def domain(self) -> Interval:
        """The set where the function is not ``+inf``."""
        if self.kind == PLUS_INF:
            return Interval.empty()
        if self.kind == MINUS_INF:
            return Interval.real_line()
        return Interval.make(
            self.lo, self.hi, self.left_cut and self.lo_value < INF, self.right_cut and self.hi_value < INF
        )

    @property
    def is_closed(self) -> bool:
        if self.kind != PROPER:
            return True
        return self.lo_value == self.values[0] and self.hi_value == self.values[-1]

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.knots)

    def __call__(self, theta):
        t = np.asarray(theta, dtype=float)
        out = self.eval_closure(t)
        if self.kind == PROPER:
            out = np.array(out, dtype=float, ndmin=1)
            tt = np.array(t, ndmin=1)
            if self.left_cut:
                out[tt == self.knots[0]] = self.lo_value
            if self.right_cut:
                out[tt == self.knots[-1]] = self.hi_value
            if t.ndim == 0:
                return float(out[0])
        return out if t.ndim else float(out)

    def eval_closure(self, theta):
        """Evaluate the closure (endpoint overrides ignored)."""
        t = np.asarray(theta, dtype=float)
        if self.kind == PLUS_INF:
            out = np.full(t.shape, INF)
        elif self.kind == MINUS_INF:
            out = np.full(t.shape, -INF)
        else:
            x, y = self.knots, self.values
            out = np.array(np.interp(t, x, y), dtype=float, ndmin=1)
            tt = np.array(t, ndmin=1)
            left = tt < x[0]
            right = tt > x[-1]
            if self.left_cut:
                out[left] = INF
            else:
                out[left] = y[0] + self.left_slope * (tt[left] - x[0])
            if self.right_cut:
                out[right] = INF
            else:
                out[right] = y[-1] + self.right_slope * (tt[right] - x[-1])
            if t.ndim == 0:
                return float(out[0])
        return out if t.ndim else float(out)

    def closure(self) -> PLConvex:
        return closure(self)

    def __repr__(self) -> str:
        if self.kind != PROPER:
            return f"PLConvex({self.kind})"
        return f"PLConvex({len(self.knots)} knots on {self.domain})"

    def to_text(self) -> str:
        return to_text(self)


def _opt(s):
    return None if s is None else float(s)


# -- internal helpers ---------------------------------------------------


def _merge_close(x: np.ndarray, keep=()) -> np.ndarray:
    """Drop points of sorted ``x`` within rounding of their left neighbour.

    Points listed in ``keep`` (exact domain ends) win over a near twin.
    """
    if x.size < 2:
        return x
    close = np.diff(x) <= _CROSS_RTOL * np.maximum(1.0, np.abs(x[1:]))
    if not close.any():
        return x
    out = [x[0]]
    for v, c in zip(x[1:], close):
        if c:
            if v in keep:
                out[-1] = v
        else:
            out.append(v)
    return np.array(out)


def _crossing(x0, y0, x1, y1) -> float:
    """Zero of the chord through (x0,y0),(x1,y1); assumes a sign change."""
    t = x0 + y0 * (x1 - x0) / (y0 - y1)
    return float(min(max(t, min(x0, x1)), max(x0, x1)))


def _truncate(f: PLConvex, lo: float, hi: float, lo_value=None, hi_value=None) -> PLConvex:
    """Restrict a proper ``f`` to ``[lo, hi]`` (inside its closed domain)."""
    x, y = f.knots, f.values
    inside = (x > lo) & (x < hi)
    xs = [x[inside]]
    ys = [y[inside]]
    if lo > -INF:
        xs.insert(0, [lo])
        ys.insert(0, [f.eval_closure(lo)])
    if hi < INF and hi != lo:
        xs.append([hi])
        ys.append([f.eval_closure(hi)])
    if lo == hi and hi_value is not None:
        lo_value = hi_value if lo_value is None else max(lo_value, hi_value)
        hi_value = lo_value
    return PLConvex.build(
        np.concatenate(xs),
        np.concatenate(ys),
        f.left_slope if lo == -INF else None,
        f.right_slope if hi == INF else None,
        lo_value,
        hi_value,
        check=False,
    )


def _nonpositive_set(f: PLConvex):
    """``(p, q)`` with ``{cl f <= 0} = [p, q]`` for proper ``f``, or None."""
    x, y = f.knots, f.values
    n = x.size
    neg = y <= 0
    sL, sR = f.left_slope, f.right_slope
    if neg.any():
        i = int(np.argmax(neg))
        j = n - 1 - int(np.argmax(neg[::-1]))
        if i > 0:
            p = _crossing(x[i - 1], y[i - 1], x[i], y[i])
        elif sL is None:
            p = float(x[0])
        elif sL >= 0:
            p = -INF
        else:
            p = float(x[0] - y[0] / sL)
        if j < n - 1:
            q = _crossing(x[j + 1], y[j + 1], x[j], y[j])
        elif sR is None:
            q = float(x[-1])
        elif sR <= 0:
            q = INF
        else:
            q = float(x[-1] - y[-1] / sR)
        return p, q
    if sL is not None and sL > 0:
        return -INF, float(x[0] - y[0] / sL)
    if sR is not None and sR < 0:
        return float(x[-1] - y[-1] / sR), INF
    return None


# -- the calculus -------------------------------------------------------


def evaluate(f: PLConvex, theta):
    return f(theta)


def closure(f: PLConvex) -> PLConvex:
    """Lower semicontinuous hull: endpoint overrides replaced by limits."""
    if f.kind != PROPER or f.is_closed:
        return f
    return PLConvex.build(f.knots, f.values, f.left_slope, f.right_slope, check=False)


def fenchel_dual(f: PLConvex) -> PLConvex:
    """Exact conjugate ``a -> sup_theta {theta a - f(theta)}``.

    Segment slopes of ``f`` become knots of the result and knots become
    slopes. The result is closed.
    """
    if f.kind == MINUS_INF:
        return PLConvex.plus_inf()
    if f.kind == PLUS_INF:
        raise ImproperFunctionError("improper function: conjugate of +inf everywhere")
    x, y = f.knots, f.values
    s = f.slopes
    dk = [s]
    dv = [s * x[:-1] - y[:-1]]
    if f.left_slope is not None:
        dk.insert(0, [f.left_slope])
        dv.insert(0, [f.left_slope * x[0] - y[0]])
    if f.right_slope is not None:
        dk.append([f.right_slope])
        dv.append([f.right_slope * x[-1] - y[-1]])
    dk = np.concatenate(dk)
    dv = np.concatenate(dv)
    left = float(x[0]) if f.left_cut else None
    right = float(x[-1]) if f.right_cut else None
    if dk.size == 0:
        return PLConvex.affine(float(x[0]), float(-y[0]))
    return PLConvex.build(dk, dv, left, right, check=False)


def sweep(f: PLConvex) -> PLConvex:
    """Keep ``f`` where it is ``<= 0`` and send strictly positive values to ``+inf``."""
    if f.kind != PROPER:
        return f
    pq = _nonpositive_set(f)
    if pq is None:
        return PLConvex.plus_inf()
    p, q = pq
    x = f.knots
    lo_value = hi_value = None
    if f.left_cut and p == x[0]:
        lo_value = f.lo_value if f.lo_value <= 0 else INF
    if f.right_cut and q == x[-1]:
        hi_value = f.hi_value if f.hi_value <= 0 else INF
    s = _truncate(f, p, q, lo_value, hi_value)
    if s.kind == PROPER and np.any(s.values > 0):
        # crossings can round to a hair above zero
        lo_v, hi_v = (v if v == INF else min(v, 0.0) for v in (s.lo_value, s.hi_value))
        s = PLConvex.build(s.knots, np.minimum(s.values, 0.0), s.left_slope, s.right_slope, lo_v, hi_v, check=False)
    return s


def sw_fd(f: PLConvex) -> PLConvex:
    """``sweep(fenchel_dual(f))``."""
    return sweep(fenchel_dual(f))


def pointwise_max(f: PLConvex, g: PLConvex) -> PLConvex:
    """Exact pointwise maximum; crossing points become knots."""
    if f.kind == MINUS_INF:
        return g
    if g.kind == MINUS_INF:
        return f
    if PLUS_INF in (f.kind, g.kind):
        return PLConvex.plus_inf()
    lo = max(f.lo, g.lo)
    hi = min(f.hi, g.hi)
    if lo > hi:
        return PLConvex.plus_inf()
    cand = np.concatenate((f.knots, g.knots))
    cand = cand[(cand >= lo) & (cand <= hi)]
    extra = [v for v in (lo, hi) if math.isfinite(v)]
    cand = _merge_close(np.unique(np.concatenate((cand, extra))), extra)
    if cand.size == 0:
        cand = np.array([0.0])
    fv = f.eval_closure(cand)
    gv = g.eval_closure(cand)
    d = fv - gv
    sign_change = d[:-1] * d[1:] < 0
    new = []
    if np.any(sign_change):
        i = np.nonzero(sign_change)[0]
        t = cand[i] + d[i] * (cand[i + 1] - cand[i]) / (d[i] - d[i + 1])
        # a crossing within rounding of a knot would only add a garbage slope
        gap = _CROSS_RTOL * np.maximum(1.0, np.abs(t))
        new.append(t[(t - cand[i] > gap) & (cand[i + 1] - t > gap)])
    left_slope = right_slope = None
    if lo == -INF:
        a, b = f.left_slope, g.left_slope
        left_slope = min(a, b)
        if a != b:
            t = cand[0] - d[0] / (a - b)
            if t < cand[0]:
                new.append([t])
    if hi == INF:
        a, b = f.right_slope, g.right_slope
        right_slope = max(a, b)
        if a != b:
            t = cand[-1] - d[-1] / (a - b)
            if t > cand[-1]:
                new.append([t])
    if new:
        cand = np.unique(np.concatenate([cand] + [np.asarray(v, float) for v in new]))
    vals = np.maximum(f.eval_closure(cand), g.eval_closure(cand))
    lo_value = max(f(lo), g(lo)) if lo > -INF else None
    hi_value = max(f(hi), g(hi)) if hi < INF else None
    return PLConvex.build(cand, vals, left_slope, right_slope, lo_value, hi_value, check=False)


def convex_minorant(f: PLConvex, g: PLConvex) -> PLConvex:
    """Greatest closed convex function below both ``f`` and ``g``.

    Computed directly as the lower convex hull of the union of the two
    epigraphs: knots of both plus the recession directions of the affine
    tails. Incompatible tails (steepest left tail steeper than the
    shallowest right tail) mean the hull is ``-inf`` everywhere.
    """
    if MINUS_INF in (f.kind, g.kind):
        return PLConvex.minus_inf()
    if f.kind == PLUS_INF:
        return closure(g)
    if g.kind == PLUS_INF:
        return closure(f)
    lefts = [s.left_slope for s in (f, g) if s.left_slope is not None]
    rights = [s.right_slope for s in (f, g) if s.right_slope is not None]
    L = max(lefts) if lefts else None
    R = min(rights) if rights else None
    if L is not None and R is not None and L > R:
        return PLConvex.minus_inf()
    x = np.concatenate((f.knots, g.knots))
    y = np.concatenate((f.values, g.values))
    order = np.lexsort((y, x))
    x, y = x[order], y[order]
    first = np.concatenate(([True], np.diff(x) > 0))
    x, y = x[first], y[first]
    idx = _kernels.lower_hull(x, y)
    hx, hy = x[idx], y[idx]
    if L is not None:
        s = np.diff(hy) / np.diff(hx)
        k = int(np.searchsorted(s, L, side="right"))
        hx, hy = hx[k:], hy[k:]
    if R is not None:
        s = np.diff(hy) / np.diff(hx)
        k = int(np.searchsorted(s, R, side="left"))
        hx, hy = hx[: k + 1], hy[: k + 1]
    return PLConvex.build(hx, hy, L, R, check=False)


def is_k_convex(f: PLConvex) -> bool:
    if f.kind != PROPER or not f.left_cut or f.knots[0] < 0:
        return False
    return bool(f.knots[-1] > 0 or not f.right_cut)


def _require_k_convex(f: PLConvex) -> None:
    if not is_k_convex(f):
        raise NotKConvexError(f"{f!r} is not k-convex (infinite left of 0, finite somewhere right of 0)")


def flat(f: PLConvex) -> PLConvex:
    """``fenchel_dual(sw_fd(f))``; ``-inf`` when ``sw_fd(f)`` is ``+inf``."""
    sfd = sw_fd(f)
    if sfd.kind == PLUS_INF:
        return PLConvex.minus_inf()
    return fenchel_dual(sfd)


def natural(f: PLConvex) -> PLConvex:
    """Maximal convex minorant of a k-convex ``f`` with ``theta -> value/theta`` nonincreasing.

    Computed as :func:`flat` with the value at the left end of the domain
    reset to ``f``'s own value there, which is the only place the two can
    differ. Returns ``-inf`` everywhere when the conjugate of ``f`` is
    strictly positive.
    """
    _require_k_convex(f)
    fl = flat(f)
    if fl.kind != PROPER:
        return fl
    psi = float(f.knots[0])
    if fl.left_cut and fl.knots[0] == psi and f.lo_value > fl.values[0]:
        return PLConvex.build(fl.knots, fl.values, None, fl.right_slope, f.lo_value, fl.hi_value, check=False)
    return fl


def vartheta(f: PLConvex, tol: float = 1e-10) -> float:
    """Supremum of the set where ``f`` agrees with ``natural(f)``."""
    nat = natural(f)
    if nat.kind == MINUS_INF:
        return -INF
    if f.right_cut is False and nat.right_cut is False and math.isclose(
        f.right_slope, nat.right_slope, rel_tol=_COLLINEAR_RTOL, abs_tol=_COLLINEAR_RTOL
    ):
        # past both last knots the two are affine, so one probe settles the tail
        last = max(f.knots[-1], nat.knots[-1]) + 1.0
        if abs(f(last) - nat(last)) <= tol * (1.0 + abs(f(last))):
            return INF
    x = np.union1d(f.knots, nat.knots)
    x = x[(x >= f.lo) & (x <= f.hi)]
    fv, nv = f(x), nat(x)
    with np.errstate(invalid="ignore"):
        agree_pt = np.isfinite(fv) & (np.abs(fv - nv) <= tol * (1.0 + np.abs(fv)))
    best = float(f.knots[0])
    if np.any(agree_pt):
        best = max(best, float(x[np.nonzero(agree_pt)[0][-1]]))
    if x.size > 1:
        mid = 0.5 * (x[:-1] + x[1:])
        fm, nm = f(mid), nat(mid)
        agree_seg = np.isfinite(fm) & (np.abs(fm - nm) <= tol * (1.0 + np.abs(fm)))
        if np.any(agree_seg):
            best = max(best, float(x[1:][np.nonzero(agree_seg)[0][-1]]))
    return best


def lambda_(f: PLConvex) -> float:
    """``inf {a : f(a) > 0}``."""
    if f.kind == PLUS_INF:
        return -INF
    if f.kind == MINUS_INF:
        return INF
    if f.left_cut:
        return -INF
    pq = _nonpositive_set(f)
    if pq is None or pq[0] > -INF:
        return -INF
    return pq[1]


def ratio_inf(f: PLConvex) -> float:
    """``inf_{theta > 0} f(theta) / theta`` for k-convex ``f``."""
    _require_k_convex(f)
    x, y = f.knots, f.values
    pos = x > 0
    cands = list(y[pos] / x[pos])
    if not f.right_cut:
        cands.append(f.right_slope)
    if x[0] == 0:
        if y[0] < 0:
            return -INF
        if y[0] == 0:
            cands.append(f.slopes[0] if x.size > 1 else f.right_slope)
    return float(min(cands))


def restrict(f: PLConvex, c: Interval) -> PLConvex:
    """``f`` on ``c`` and ``+inf`` elsewhere; open ends become ``+inf`` overrides."""
    if c.is_empty or f.kind == PLUS_INF:
        return PLConvex.plus_inf()
    if f.kind == MINUS_INF:
        raise ImproperFunctionError("cannot restrict -inf everywhere to an interval")
    lo = max(f.lo, c.lo)
    hi = min(f.hi, c.hi)
    if lo > hi:
        return PLConvex.plus_inf()

    def end_value(at, c_end, c_closed):
        if not math.isfinite(at):
            return None
        if at == c_end and not c_closed:
            return INF
        return f(at)

    lo_value = end_value(lo, c.lo, c.lo_closed)
    hi_value = end_value(hi, c.hi, c.hi_closed)
    if lo == hi:
        v = max(lo_value, hi_value)
        if v == INF:
            return PLConvex.plus_inf()
    return _truncate(f, lo, hi, lo_value, hi_value)


def from_samples(theta, values, mode: SampleMode | str = SampleMode.INTERPOLATE, tol: float = TOL_CONVEXIFY) -> PLConvex:
    """Bridge from sampled values to a :class:`PLConvex` with cut tails.

    ``values`` may contain ``inf`` outside a contiguous block of finite
    samples. ``interpolate`` requires the finite samples to be convex up to
    ``tol`` (relative) and raises with the offending triple otherwise;
    ``lower_hull`` takes their lower convex hull.
    """
    mode = SampleMode(mode)
    t = np.asarray(theta, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise ValueError("theta and values must be matching 1-d arrays")
    if np.any(np.diff(t) <= 0):
        raise ValueError("theta grid must be strictly increasing")
    if np.any(np.isnan(v)) or np.any(v == -INF):
        raise ValueError("samples must be finite or +inf")
    fin = np.isfinite(v)
    if not fin.any():
        return PLConvex.plus_inf()
    idx = np.nonzero(fin)[0]
    if idx[-1] - idx[0] + 1 != idx.size:
        raise ValueError("finite samples must form a contiguous block")
    t, v = t[fin], v[fin]
    if mode is SampleMode.INTERPOLATE and t.size > 2:
        chord = v[:-2] + (v[2:] - v[:-2]) * (t[1:-1] - t[:-2]) / (t[2:] - t[:-2])
        excess = v[1:-1] - chord
        bad = excess > tol * np.maximum(1.0, np.abs(v[1:-1]))
        if np.any(bad):
            i = int(np.nonzero(bad)[0][0])
            raise NonConvexSamplesError(
                f"samples not convex at theta = ({float(t[i])!r}, {float(t[i + 1])!r}, {float(t[i + 2])!r}), "
                f"values ({float(v[i])!r}, {float(v[i + 1])!r}, {float(v[i + 2])!r})"
            )
    hull = _kernels.lower_hull(t, v)
    return PLConvex.build(t[hull], v[hull], check=False)


# -- serialization ------------------------------------------------------


def to_text(f: PLConvex) -> str:
    """Debug record; round-trips exactly through :func:`from_text`."""
    if f.kind != PROPER:
        return f"PLConvex {f.kind}"
    pairs = " ".join(f"{fmt_ext(a)}:{fmt_ext(b)}" for a, b in zip(f.knots, f.values))
    left = "cut" if f.left_cut else f"affine {fmt_ext(f.left_slope)}"
    right = "cut" if f.right_cut else f"affine {fmt_ext(f.right_slope)}"
    return "\n".join(
        [
            f"PLConvex {PROPER}",
            f"knots {pairs}",
            f"left {left}",
            f"right {right}",
            f"lo {fmt_ext(f.lo_value)}",
            f"hi {fmt_ext(f.hi_value)}",
        ]
    )


def from_text(text: str) -> PLConvex:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("PLConvex"):
        raise ValueError("not a PLConvex record")
    kind = lines[0].split(None, 1)[1].strip()
    if kind == PLUS_INF:
        return PLConvex.plus_inf()
    if kind == MINUS_INF:
        return PLConvex.minus_inf()
    fields = dict(ln.split(None, 1) if " " in ln else (ln, "") for ln in lines[1:])
    pairs = [p.split(":") for p in fields["knots"].split()]
    knots = [float(a) for a, _ in pairs]
    values = [float(b) for _, b in pairs]

    def tail(spec):
        parts = spec.split()
        return None if parts[0] == "cut" else float(parts[1])

    return PLConvex.build(
        knots,
        values,
        tail(fields["left"]),
        tail(fields["right"]),
        float(fields.get("lo", "nan")) if "lo" in fields else None,
        float(fields.get("hi", "nan")) if "hi" in fields else None,
        check=False,
    )


# -- comparison ---------------------------------------------------------


def probe_points(*fs: PLConvex, pad: float = 1.0) -> np.ndarray:
    """Knots of all ``fs`` plus midpoints and points beyond the outermost knots."""
    ks = [f.knots for f in fs if f.kind == PROPER]
    if not ks:
        return np.array([-1.0, 0.0, 1.0])
    k = np.unique(np.concatenate(ks))
    mids = 0.5 * (k[:-1] + k[1:])
    return np.unique(np.concatenate((k, mids, [k[0] - pad, k[0] - 10 * pad, k[-1] + pad, k[-1] + 10 * pad])))


def allclose(f: PLConvex, g: PLConvex, atol: float = 1e-12, rtol: float = 1e-12) -> bool:
    """Functional equality of two PL convex functions, tails and overrides included."""
    if f.kind != g.kind:
        return False
    if f.kind != PROPER:
        return True
    for a, b in ((f.left_slope, g.left_slope), (f.right_slope, g.right_slope)):
        if (a is None) != (b is None):
            return False
        if a is not None and not math.isclose(a, b, rel_tol=rtol, abs_tol=atol):
            return False
    for a, b in ((f.lo, g.lo), (f.hi, g.hi)):
        if a != b and not math.isclose(a, b, rel_tol=rtol, abs_tol=atol):
            return False
    lo, hi = max(f.lo, g.lo), min(f.hi, g.hi)
    t = probe_points(f, g)
    t = t[(t > lo) & (t < hi)]
    if not np.allclose(f.eval_closure(t), g.eval_closure(t), rtol=rtol, atol=atol):
        return False
    # endpoints may differ by rounding; compare each function at its own end
    for a, b in ((f.lo, g.lo), (f.hi, g.hi)):
        if math.isfinite(a) and not math.isclose(f.eval_closure(a), g.eval_closure(b), rel_tol=rtol, abs_tol=atol):
            return False
    for a, b in ((f.lo_value, g.lo_value), (f.hi_value, g.hi_value)):
        if a != b and not math.isclose(a, b, rel_tol=rtol, abs_tol=atol):
            return False
    return True
