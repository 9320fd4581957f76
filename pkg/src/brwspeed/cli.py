"""Command-line front end: ``brwspeed analyze|rate|simulate|transform``.

Every output starts with ``#`` manifest lines (command, inputs, resolved
settings, tool version) so re-running the manifest reproduces it byte for
byte. Numbers are written with 17 significant digits; ``inf``/``-inf``/``nan``
are literal.

Exit codes: 0 success, 2 bad input (usage, model file, function literal),
3 the model fails the analysis grid check (no finite transform on the
positive half-line, degenerate hull, too many routes).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from . import brwsim
from . import convex as cx
from . import speeds as sp
from .convex import PLConvex
from .interval import fmt_ext
from .model import ModelError, load_model
from .spectral import MomentConditionError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_GRID = 3


class InputError(ValueError):
    pass


# -- argument parsing helpers ---------------------------------------------


def _number(text: str) -> float:
    text = text.strip()
    if text in ("inf", "+inf"):
        return math.inf
    if text == "-inf":
        return -math.inf
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _grid(text: str) -> sp.GridConfig:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected THETA_MAX,H")
    tmax, h = (_number(p) for p in parts)
    if not (0 < h < tmax < math.inf):
        raise argparse.ArgumentTypeError("need 0 < H < THETA_MAX")
    return sp.GridConfig(tmax, h)


def _a_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected A0:A1:N")
    a0, a1 = _number(parts[0]), _number(parts[1])
    n = _positive_int(parts[2])
    return np.linspace(a0, a1, n)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(_number(p) for p in text.split(",") if p.strip())


def parse_function(text: str) -> PLConvex:
    """Parse ``LEFT; x:y, x:y, ...; RIGHT``.

    Each tail is ``cut``, ``cut=VALUE`` (cut with the endpoint value
    overridden, ``inf`` for an open end) or a number (affine slope).
    Example: ``cut; 0:1, 1:0; 1``.
    """
    parts = [p.strip() for p in text.split(";")]
    if len(parts) != 3:
        raise InputError("function literal needs three ';'-separated parts: LEFT; x:y, ...; RIGHT")
    try:
        pairs = [p.split(":") for p in parts[1].replace(",", " ").split()]
        if not pairs or any(len(p) != 2 for p in pairs):
            raise InputError("knots must be x:y pairs")
        knots = [_number(x) for x, _ in pairs]
        values = [_number(y) for _, y in pairs]

        def tail(spec: str):
            if spec == "cut":
                return None, None
            if spec.startswith("cut="):
                return None, _number(spec[4:])
            return _number(spec), None

        left, lo = tail(parts[0])
        right, hi = tail(parts[2])
        return PLConvex.build(knots, values, left, right, lo, hi)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise InputError(f"bad function literal: {exc}") from None


# -- output helpers ------------------------------------------------------


def manifest(command: str, items: list[tuple[str, object]]) -> list[str]:
    lines = [f"# brwspeed {__version__}", f"# command: {command}"]
    lines += [f"# {k}: {v}" for k, v in items]
    return lines


def _short(x: float) -> str:
    s = f"{x:.4f}"
    return "0.0000" if s == "-0.0000" else s


def _grid_text(g: sp.GridConfig) -> str:
    return f"{fmt_ext(g.theta_max)},{fmt_ext(g.h)}"


def _target_index(model, name: str | None) -> int | None:
    return None if name is None else model.index(name)


# -- commands ------------------------------------------------------------


def cmd_analyze(args) -> str:
    model = load_model(args.model)
    cs = sp.build_class_structure(model, args.grid, _target_index(model, args.target))
    rep = sp.analyze(cs)
    names = model.type_names
    dec = cs.decomposition
    out = manifest(
        "analyze",
        [("model", args.model), ("target", names[dec.classes[cs.target_class][0]]), ("grid", _grid_text(cs.grid))],
    )
    out.append("classes:")
    for c, types in enumerate(dec.classes):
        label = "{" + ", ".join(names[t] for t in types) + "}"
        status = "" if cs.active[c] else " (inert)"
        if c in cs.kappas:
            kc = cs.kappas[c]
            speed = rep.class_speeds.get(c)
            sp_text = "" if speed is None else f" speed {fmt_ext(speed)}"
            out.append(f"  C{c} {label}: domain {kc.domain} period {kc.period}{sp_text}{status}")
        else:
            out.append(f"  C{c} {label}: no internal reproduction{status}")
    out.append("links:")
    for (i, j), dom in sorted(cs.link_domains.items()):
        pairs = ", ".join(f"{names[u]}>{names[t]}" for u, t in cs.link_pairs[(i, j)])
        out.append(f"  C{i} -> C{j}: domain {dom} via {pairs}")
    if not cs.link_domains:
        out.append("  none")
    out.append("routes:")
    for rr in rep.routes:
        c = rr.conditions
        out.append(f"  {rr.route.label(cs)}")
        out.append(
            f"    lower {fmt_ext(rr.lower)} upper {fmt_ext(rr.upper)} expectation {fmt_ext(rr.expectation)}"
            f" match {'yes' if rr.match else 'no'} label {rr.label}"
        )
        for name in ("phi_order", "new_phi_order", "off_diag", "either_or", "ii", "best_speed", "same_domain"):
            cond = getattr(c, name)
            if cond.holds:
                extra = f" witness {', '.join(fmt_ext(x) if isinstance(x, float) else str(x) for x in cond.witness)}" if cond.witness else ""
                out.append(f"    {name}: holds{extra}")
            else:
                out.append(f"    {name}: fails ({cond.violation})")
        if not rr.r_function:
            out.append("    warning: lower rate is not an r-function")
        if not rr.reliable:
            out.append("    warning: chain condition fails; lower bound unreliable")
    i, j = rep.pairwise.pair
    out.append(f"pairwise speed: {fmt_ext(rep.pairwise.speed)} (classes C{i}, C{j})")
    out.append(f"lower speed: {fmt_ext(rep.lower)}")
    out.append(f"upper speed: {fmt_ext(rep.upper)}")
    out.append(f"expectation speed: {fmt_ext(rep.expectation)}")
    best = max(rep.class_speeds.values())
    verdict = "yes" if rep.super_speed else "no"
    out.append(f"SUPER-SPEED: {verdict} (pairwise speed {_short(rep.pairwise.speed)} {'>' if rep.super_speed else '<='} per-class max {_short(best)})")
    if not cs.kappas[cs.initial_class].curve.eval_closure(0.0) > 0:
        out.append("warning: initial class is not supercritical")
    if not rep.overall.holds:
        out.append(f"overall conditions: fail ({rep.overall.violation})")
    out.append(f"theorem: {rep.label}")
    return "\n".join(out) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def cmd_rate(args) -> str:
    model = load_model(args.model)
    cs = sp.build_class_structure(model, args.grid, _target_index(model, args.target))
    a = args.a
    profiles = [sp.rate_profile(cs, r, a) for r in sp.enumerate_routes(cs)]
    low = np.min([p.r_lower for p in profiles], axis=0)
    up = np.min([p.swfdg_upper for p in profiles], axis=0)
    exp = np.min([p.R_expect for p in profiles], axis=0)
    refined = all(p.refined for p in profiles)
    names = model.type_names
    head = manifest(
        "rate",
        [
            ("model", args.model),
            ("target", names[cs.decomposition.classes[cs.target_class][0]]),
            ("grid", _grid_text(cs.grid)),
            ("a", f"{fmt_ext(a[0])}:{fmt_ext(a[-1])}:{a.size}"),
            ("routes", len(profiles)),
        ],
    )
    rows = [["a", "r_lower", "swfdg_upper", "R_expect", "flags"]]
    for x, lo, hi, e in zip(a, low, up, exp):
        flags = ["matched" if (lo == hi or abs(lo - hi) <= sp.TOL_MATCH) else "bounds"]
        if refined:
            flags.append("refined")
        if len(profiles) > 1:
            flags.append("route-min")
        rows.append([fmt_ext(x), fmt_ext(lo), fmt_ext(hi), fmt_ext(e), "|".join(flags)])
    return "\n".join(head) + "\n" + _csv(rows)


def cmd_simulate(args) -> str:
    model = load_model(args.model)
    cfg = brwsim.SimConfig(args.gens, args.seed, args.replicates, args.cap, args.count_at)
    tr = brwsim.simulate(model, cfg)
    head = manifest(
        "simulate",
        [
            ("model", args.model),
            ("generations", cfg.generations),
            ("seed", cfg.seed),
            ("replicates", cfg.replicates),
            ("cap", cfg.cap_per_type),
            ("count_at", ",".join(fmt_ext(x) for x in cfg.record_counts_at)),
        ],
    )
    if tr.early_extinction:
        head.append("# warning: every replicate died out before generation 2")
    cols = ["replicate", "generation", "type", "rightmost", "count_retained"]
    cols += [f"count_at_{fmt_ext(x)}" for x in cfg.record_counts_at] + ["bias_flag"]
    rows = [cols]
    for r in range(cfg.replicates):
        for n in range(cfg.generations + 1):
            for s, name in enumerate(model.type_names):
                b = tr.rightmost[r, n, s]
                row = [r, n, name, "nan" if math.isnan(b) else fmt_ext(b), int(tr.retained[r, n, s])]
                row += [int(c) for c in tr.count_at[r, n, s]]
                row.append(int(tr.biased[r, n]))
                rows.append(row)
    return "\n".join(head) + "\n" + _csv(rows)


_OPS = {
    "dual": cx.fenchel_dual,
    "sweep": cx.sweep,
    "natural": cx.natural,
    "lambda": cx.lambda_,
    "vartheta": cx.vartheta,
}


def cmd_transform(args) -> str:
    f = parse_function(args.fn)
    try:
        res = _OPS[args.op](f)
    except (cx.NotKConvexError, cx.ImproperFunctionError) as exc:
        raise InputError(str(exc)) from None
    head = manifest("transform", [("fn", args.fn), ("op", args.op)])
    body = fmt_ext(res) if isinstance(res, float) else cx.to_text(res)
    return "\n".join(head) + "\n" + body + "\n"


# -- entry point ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="brwspeed", description="Speeds of reducible branching random walks.")
    p.add_argument("--version", action="version", version=f"brwspeed {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def model_args(q):
        q.add_argument("model", help="model JSON file")
        q.add_argument("--target", help="target type name (default: last descendant class)")
        q.add_argument("--grid", type=_grid, default=sp.GridConfig(), help="THETA_MAX,H (default 8,1/512)")

    q = sub.add_parser("analyze", help="class structure, conditions and speeds")
    model_args(q)
    q = sub.add_parser("rate", help="count-rate profile as CSV")
    model_args(q)
    q.add_argument("--a", type=_a_range, required=True, help="A0:A1:N evaluation grid (write --a=-1:1:21 for a negative start)")
    q = sub.add_parser("simulate", help="Monte-Carlo trajectories as CSV")
    q.add_argument("model", help="model JSON file")
    q.add_argument("--gens", type=_positive_int, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--replicates", type=_positive_int, default=1)
    q.add_argument("--cap", type=_positive_int, default=100_000, help="particles kept per type")
    q.add_argument("--count-at", type=_float_list, default=(), help="comma-separated a values")
    q = sub.add_parser("transform", help="apply one convex operation to a function literal")
    q.add_argument("--fn", required=True, help="LEFT; x:y, x:y, ...; RIGHT (tails: cut, cut=V or a slope)")
    q.add_argument("--op", choices=sorted(_OPS), required=True)
    return p


_COMMANDS = {"analyze": cmd_analyze, "rate": cmd_rate, "simulate": cmd_simulate, "transform": cmd_transform}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = _COMMANDS[args.command](args)
    except (ModelError, InputError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"brwspeed: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (MomentConditionError, sp.HullDegenerateError, sp.RouteLimitError) as exc:
        print(f"brwspeed: grid check failed: {exc}", file=sys.stderr)
        return EXIT_GRID
    sys.stdout.write(text)
    return EXIT_OK
