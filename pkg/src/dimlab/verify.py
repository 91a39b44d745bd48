"""Executable finite-scale checks of local-dimension bounds for convolutions.

Each check realizes the measures at a lattice level, audits the geometric
hypotheses on the computed supports, evaluates dimension profiles on a
grid and turns them into per-point records ``(z, estimate, bound,
margin)``.  The verdict depends only on the records, the tolerance and the
audit result.

Grid profiles use radii ``m**-n`` for ``n`` up to ``level - j`` where
``m**j >= 4 * span_width``: deeper than that a ball is barely wider than
one smeared span and the inner bracket collapses.
"""

from __future__ import annotations

import ast
import csv
import json
import math
import operator
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .cascade import MassVector, refine, to_circle
from .convolve import convolve, convolve_cyclic, infer_base, realize
from .locdim import (
    DimProfile, dim_at_left_endpoint, dim_profile, gap_point_dim, profile_grid,
    thread_count, unique_pair_dim, SLOPE_WINDOW, TAIL_WINDOW,
)
from .measures import (
    AtomicMeasure, Circle, ConfigError, Convolution, IfsMeasure, MeasureError,
    as_number, gaps, max_gap, parse_measure, support,
)

__all__ = [
    "HypothesisNotMet", "DecompositionNotUnique", "GapNotFound", "NoInteriorFound",
    "Scenario", "PointRecord", "CheckReport",
    "check_interior_bound", "check_unique_pair", "check_gap_point", "check_isolated_point",
    "check_lower_bound", "check_torus_power", "check_profile",
    "run_scenario", "run_suite", "load_suite", "write_reports", "summary_text",
    "parse_value", "DEFAULT_TOL",
]

DEFAULT_TOL = 0.05
EXPECTS = ("pass", "fail", "hypothesis-not-met", "informational")


class HypothesisNotMet(MeasureError):
    def __init__(self, message: str, audit: dict | None = None):
        super().__init__(message)
        self.audit = audit or {}


class DecompositionNotUnique(HypothesisNotMet):
    pass


class GapNotFound(HypothesisNotMet):
    pass


class NoInteriorFound(HypothesisNotMet):
    pass


# -- numeric expressions in configs -----------------------------------------

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"log": math.log, "sqrt": math.sqrt, "exp": math.exp}
_NAMES = {"pi": math.pi, "e": math.e}


def parse_value(value):
    """Number from a config: plain numbers, ``"1/3"`` (kept exact) or an
    arithmetic expression such as ``"log(5)/log(3)"``."""
    if value is None or isinstance(value, (int, float, Fraction)):
        return value
    try:
        return as_number(value, exact_only=True)
    except (ValueError, ZeroDivisionError):
        pass

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and len(node.args) == 1:
            return _FUNCS[node.func.id](ev(node.args[0]))
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        raise ConfigError(f"unsupported expression {value!r}")

    try:
        return float(ev(ast.parse(str(value), mode="eval")))
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse number {value!r}") from exc


# -- scenarios and reports --------------------------------------------------

@dataclass
class Scenario:
    name: str
    check: str
    mu: object
    nu: object = None
    level: int = 14
    grid: object = 256
    tol: float = DEFAULT_TOL
    lam: float | None = None
    alpha: float | None = None
    z: object = None
    interval: tuple | None = None
    k_max: int = 4
    n_cap: int = 6
    estimator: str | None = None
    window: int = TAIL_WINDOW
    slope_window: int = SLOPE_WINDOW
    expect: str = "pass"
    label: str = ""
    base: int | None = None  # lattice base when every measure is atomic

    def __post_init__(self):
        self.tol = float(parse_value(self.tol))
        self.lam = parse_value(self.lam)
        self.alpha = parse_value(self.alpha)
        if not self.tol > 0:
            raise ConfigError(f"{self.name}: tolerance must be positive")
        if self.expect not in EXPECTS:
            raise ConfigError(f"{self.name}: expect must be one of {EXPECTS}")
        if self.check not in CHECKS:
            raise ConfigError(f"{self.name}: unknown check {self.check!r}")


@dataclass(frozen=True)
class PointRecord:
    z: float
    estimate: float
    bound: float | None = None
    margin: float | None = None
    extra: dict = field(default_factory=dict, compare=False)


@dataclass
class CheckReport:
    name: str
    check: str
    audit: dict
    records: list
    tol: float
    runtime: float = 0.0
    expect: str = "pass"
    rule: str = "all"  # all: every margin >= -tol; any: some margin > 0
    notes: str = ""

    @property
    def verdict(self) -> str:
        if self.audit.get("hypothesis_met") is False:
            return "hypothesis-not-met"
        margins = [r.margin for r in self.records if r.margin is not None]
        if self.rule == "any":
            return "pass" if any(m > 0 for m in margins) else "fail"
        return "pass" if all(m >= -self.tol for m in margins) else "fail"

    @property
    def ok(self) -> bool:
        return self.expect == "informational" or self.verdict == self.expect

    @property
    def min_margin(self) -> float | None:
        margins = [r.margin for r in self.records if r.margin is not None]
        return min(margins) if margins else None

    @property
    def max_margin(self) -> float | None:
        margins = [r.margin for r in self.records if r.margin is not None]
        return max(margins) if margins else None


# -- helpers -----------------------------------------------------------------

@lru_cache(maxsize=6)
def _vector(measure, level: int, base: int | None = None) -> MassVector:
    return realize(measure, level, base=base)


def _base_of(*measures, fallback: int | None = None) -> int:
    bases = {b for b in (infer_base(m) for m in measures if m is not None) if b is not None}
    if not bases and fallback is not None:
        return fallback
    if len(bases) != 1:
        raise ConfigError(f"cannot determine a single base from {sorted(bases)}")
    return bases.pop()


def _depth(v: MassVector, factor: int = 4) -> int:
    need = factor * max(v.width, 1)
    j = 0
    while v.base ** j < need:
        j += 1
    return v.level - j


def _levels(v: MassVector, sc: Scenario) -> tuple:
    n_max = _depth(v)
    n_min = max(1, n_max - max(sc.window, sc.slope_window) - 1)
    if n_max - n_min + 1 < sc.window:
        raise ConfigError(f"{sc.name}: level {sc.level} too shallow for window {sc.window}")
    return n_min, n_max


def _hull(measure, level: int, base: int) -> tuple:
    if isinstance(measure, (IfsMeasure, AtomicMeasure)):
        return tuple(Fraction(x) for x in measure.hull)
    return _vector(measure, level, base).support().hull


def _grid(lo, hi, sc: Scenario) -> list:
    """Grid strictly inside ``(lo, hi)``, clipped to ``sc.interval``."""
    if sc.interval is not None:
        a, b = (Fraction(parse_value(t)) for t in sc.interval)
        lo, hi = max(lo, a), min(hi, b)
    if isinstance(sc.grid, (list, tuple)):
        pts = [Fraction(parse_value(z)) for z in sc.grid]
        for z in pts:
            if not lo <= z <= hi:
                raise ConfigError(f"{sc.name}: grid point {float(z)} outside [{float(lo)}, {float(hi)}]")
        return pts
    count = int(sc.grid)
    return [lo + (hi - lo) * Fraction(i, count + 1) for i in range(1, count + 1)]


def _pick(p: DimProfile, estimator: str) -> float:
    if estimator == "upper":
        return p.upper_dim_est
    if estimator == "lower":
        return p.lower_dim_est
    if estimator == "slope":
        return p.slope_est
    raise ConfigError(f"unknown estimator {estimator!r}")


def _estimates(p: DimProfile) -> dict:
    return {"upper": p.upper_dim_est, "lower": p.lower_dim_est, "slope": p.slope_est}


def _gap_slack(measure, level: int, base: int):
    """Largest amount by which a true gap can exceed the computed one."""
    if isinstance(measure, AtomicMeasure):
        return Fraction(0)
    if isinstance(measure, IfsMeasure):
        return 2 * abs(measure.normalization.scale) * Fraction(1, measure.base ** level)
    v = _vector(measure, level, base)
    return 2 * max(v.width, 1) * v.h


def _audit_interior(mu, nu, level: int, base: int) -> dict:
    s_mu = support(mu, level) if isinstance(mu, IfsMeasure) else _vector(mu, level, base).support()
    s_nu = support(nu, level) if isinstance(nu, (IfsMeasure, AtomicMeasure)) \
        else _vector(nu, level, base).support()
    L, R = s_mu.hull
    length = R - L
    g = max_gap(s_nu)
    slack = _gap_slack(nu, level, base)
    audit = {
        "mu_support_interval": s_mu.is_interval,
        "mu_hull": (float(L), float(R)),
        "nu_hull": tuple(float(t) for t in s_nu.hull),
        "max_gap": float(g),
        "max_gap_upper": float(g + slack),
        "mu_length": float(length),
    }
    if not s_mu.is_interval:
        audit["reason"] = "supp mu is not an interval at this level"
        audit["hypothesis_met"] = False
    elif g >= length:
        audit["reason"] = "a gap of supp nu is at least as long as supp mu"
        audit["hypothesis_met"] = False
    elif g + slack >= length:
        audit["reason"] = "gap comparison undecided at this level"
        audit["hypothesis_met"] = False
    else:
        audit["hypothesis_met"] = True
    return audit


# -- checks -------------------------------------------------------------------

def check_interior_bound(mu, nu, lam, sc: Scenario) -> CheckReport:
    """Upper dimension of ``mu * nu`` at interior points against ``lam + tol``
    when every gap of ``supp nu`` is shorter than ``supp mu`` (an interval).

    The same numeric test covers restricted sub-intervals (set
    ``sc.interval``) and the almost-everywhere variants; ``sc.label``
    names the hypotheses that were audited.
    """
    t0 = time.perf_counter()
    base = _base_of(mu, nu, fallback=sc.base)
    audit = _audit_interior(mu, nu, sc.level, base)
    audit["hypotheses"] = sc.label or "gap shorter than supp mu; bound lam on supp mu"
    if not audit["hypothesis_met"]:
        raise HypothesisNotMet(audit["reason"], audit)
    lam = float(lam)
    v = _vector(Convolution((mu, nu)), sc.level, base)
    lo, hi = v.support().hull
    pts = _grid(lo, hi, sc)
    n_min, n_max = _levels(v, sc)
    est = sc.estimator or "upper"
    profiles = profile_grid(v, pts, n_min, n_max, sc.window, sc.slope_window)
    recs = [PointRecord(float(z), _pick(p, est), lam, lam - _pick(p, est), _estimates(p))
            for z, p in zip(pts, profiles)]
    audit.update(estimator=est, n_range=(n_min, n_max))
    return CheckReport(sc.name, sc.check, audit, recs, sc.tol, time.perf_counter() - t0, sc.expect)


def check_lower_bound(mu, nu, alpha, sc: Scenario) -> CheckReport:
    """Lower dimension of ``mu * nu`` on an interior grid against
    ``alpha - tol``.  The uniform lower bound on ``mu`` is supplied by the
    caller and recorded, not verified."""
    t0 = time.perf_counter()
    base = _base_of(mu, nu, fallback=sc.base)
    alpha = float(alpha)
    v = _vector(Convolution((mu, nu)), sc.level, base)
    lo, hi = v.support().hull
    pts = _grid(lo, hi, sc)
    n_min, n_max = _levels(v, sc)
    est = sc.estimator or "lower"
    profiles = profile_grid(v, pts, n_min, n_max, sc.window, sc.slope_window)
    recs = [PointRecord(float(z), _pick(p, est), alpha, _pick(p, est) - alpha, _estimates(p))
            for z, p in zip(pts, profiles)]
    audit = {"hypothesis_met": True, "estimator": est, "n_range": (n_min, n_max),
             "hypotheses": sc.label or f"uniform lower dimension >= {alpha} for mu (caller supplied)"}
    return CheckReport(sc.name, sc.check, audit, recs, sc.tol, time.perf_counter() - t0, sc.expect)


def _unique_decomposition(mu, nu, z, level: int, base: int):
    Lm, Rm = _hull(mu, level, base)
    Ln, Rn = _hull(nu, level, base)
    if z == Lm + Ln:
        return Lm, Ln, "left corner"
    if z == Rm + Rn:
        return Rm, Rn, "right corner"
    s_nu = support(nu, level) if isinstance(nu, (IfsMeasure, AtomicMeasure)) \
        else _vector(nu, level, base).support()
    for g in gaps(s_nu):
        if g.diameter > Rm - Lm:
            if z == Rm + g.left:
                return Rm, g.left, "gap longer than supp mu (left side)"
            if z == Lm + g.right:
                return Lm, g.right, "gap longer than supp mu (right side)"
    raise DecompositionNotUnique(f"no unique decomposition of z={float(z)} is certified",
                                 {"hypothesis_met": False, "z": float(z),
                                  "reason": "no certified unique decomposition"})


def _compare(conv: DimProfile, pred: DimProfile, est: str):
    if est == "slope":
        return conv.slope_est, pred.slope_est, -abs(conv.slope_est - pred.slope_est)
    a = (conv.lower_dim_est, conv.upper_dim_est)
    b = (pred.lower_dim_est, pred.upper_dim_est)
    dist = max(0.0, b[0] - a[1], a[0] - b[1])
    return conv.upper_dim_est, pred.upper_dim_est, -dist


def check_unique_pair(mu, nu, z, sc: Scenario) -> CheckReport:
    """Profile of ``mu * nu`` at ``z`` against the product profile at the
    unique pair ``(x0, y0)``, certified from corner or gap geometry."""
    t0 = time.perf_counter()
    base = _base_of(mu, nu, fallback=sc.base)
    z = Fraction(parse_value(z))
    x0, y0, why = _unique_decomposition(mu, nu, z, sc.level, base)
    v = _vector(Convolution((mu, nu)), sc.level, base)
    n_min, n_max = _levels(v, sc)
    conv = dim_profile(v, z, n_min, n_max, sc.window, sc.slope_window)
    pm = dim_profile(_vector(mu, sc.level, base), x0, n_min, n_max, sc.window, sc.slope_window)
    pn = dim_profile(_vector(nu, sc.level, base), y0, n_min, n_max, sc.window, sc.slope_window)
    pair = unique_pair_dim(pm, pn)
    est = sc.estimator or "slope"
    e, b, m = _compare(conv, pair, est)
    extra = {"conv": _estimates(conv), "pair": _estimates(pair)}
    audit = {"hypothesis_met": True, "pair": (float(x0), float(y0)), "why_unique": why,
             "estimator": est, "n_range": (n_min, n_max)}
    return CheckReport(sc.name, sc.check, audit, [PointRecord(float(z), e, b, m, extra)],
                       sc.tol, time.perf_counter() - t0, sc.expect)


def check_gap_point(mu, nu, z, sc: Scenario) -> CheckReport:
    """Profile of ``mu * nu`` at ``z = R + b`` for a gap ``(b, c)`` of
    ``supp nu`` at least as long as ``supp mu = [L, R]``, against the
    gap-point profile (single pair when longer, two pairs when equal)."""
    t0 = time.perf_counter()
    base = _base_of(mu, nu, fallback=sc.base)
    z = Fraction(parse_value(z))
    Lm, Rm = _hull(mu, sc.level, base)
    length = Rm - Lm
    s_nu = support(nu, sc.level) if isinstance(nu, (IfsMeasure, AtomicMeasure)) \
        else _vector(nu, sc.level, base).support()
    slack = _gap_slack(nu, sc.level, base)
    gap = next((g for g in gaps(s_nu) if z == Rm + g.left), None)
    base_audit = {"z": float(z), "mu_length": float(length)}
    if gap is None or gap.diameter + slack < length:
        raise GapNotFound("no gap of length >= supp mu ends at z - R",
                          {**base_audit, "hypothesis_met": False,
                           "reason": "gap shorter than supp mu: interior point"})
    if gap.diameter < length or (gap.diameter == length and slack > 0):
        raise HypothesisNotMet("gap comparison undecided at this level",
                               {**base_audit, "hypothesis_met": False, "gap": float(gap.diameter),
                                "reason": "gap comparison undecided at this level"})
    v = _vector(Convolution((mu, nu)), sc.level, base)
    n_min, n_max = _levels(v, sc)
    vm, vn = _vector(mu, sc.level, base), _vector(nu, sc.level, base)
    args = (n_min, n_max, sc.window, sc.slope_window)
    pred = gap_point_dim(dim_profile(vm, Rm, *args), dim_profile(vm, Lm, *args),
                         dim_profile(vn, gap.left, *args), dim_profile(vn, gap.right, *args),
                         gap, mu_length=length, tol=sc.tol)
    conv = dim_profile(v, z, *args)
    est = sc.estimator or "slope"
    e, b, m = _compare(conv, pred, est)
    extra = {"conv": _estimates(conv), "predicted": _estimates(pred),
             **{k: val for k, val in pred.meta.items() if k != "pair"}}
    if pred.meta.get("case") == "boundary":
        extra["equality_observed"] = bool(abs(conv.slope_est - pred.meta["min_pair_slope"]) <= sc.tol)
    audit = {**base_audit, "hypothesis_met": True, "gap": (float(gap.left), float(gap.right)),
             "case": pred.meta.get("case"), "estimator": est, "n_range": (n_min, n_max)}
    return CheckReport(sc.name, sc.check, audit, [PointRecord(float(z), e, b, m, extra)],
                       sc.tol, time.perf_counter() - t0, sc.expect)


def check_isolated_point(mu, sc: Scenario) -> CheckReport:
    """Evidence that the boundary dimension of ``mu**k`` at 0 is separated
    from the interior values.

    For each ``k <= k_max`` the boundary value is ``k * dim mu(0)`` (exact)
    and the interior ceiling is the largest upper estimate over an interior
    grid; the margin is their difference.  The check passes when some
    tested ``k`` has a positive margin; ``audit['first_k']`` is the
    smallest ``k`` whose margin exceeds ``tol``.
    """
    t0 = time.perf_counter()
    if not isinstance(mu, IfsMeasure):
        raise ConfigError("the isolated-point check needs a self-similar measure")
    d0 = dim_at_left_endpoint(mu).value
    v1 = refine(mu, sc.level)
    L, R = (Fraction(t) for t in mu.hull)
    if (L, R) != (0, 1):
        raise HypothesisNotMet("supp mu must span [0, 1]",
                               {"hypothesis_met": False, "reason": "hull of supp mu is not [0, 1]"})
    audit = {"endpoint_dim": d0, "hypothesis_met": True}
    recs, vk, N = [], v1, None
    for k in range(1, sc.k_max + 1):
        if k > 1:
            vk = convolve(vk, v1)
        if N is None and vk.support().is_interval:
            N = k
        n_min, n_max = _levels(vk, sc)
        pts = _grid(Fraction(0), Fraction(k), sc)
        profiles = profile_grid(vk, pts, n_min, n_max, sc.window, sc.slope_window,
                                skip_empty=True)
        # points the level cannot resolve as support points carry no information
        kept = [(z, p) for z, p in zip(pts, profiles)
                if p is not None and math.isfinite(p.upper_dim_est)]
        b_k = k * d0
        if not kept:
            recs.append(PointRecord(k, math.nan, b_k, None, {"resolved": 0, "evidence": False}))
            continue
        ups = [p.upper_dim_est for _, p in kept]
        i = max(range(len(ups)), key=ups.__getitem__)
        s_k = ups[i]
        recs.append(PointRecord(k, s_k, b_k, b_k - s_k,
                                {"argmax_z": float(kept[i][0]), "resolved": len(kept),
                                 "evidence": b_k > s_k + sc.tol}))
    audit["interval_power"] = N
    audit["first_k"] = next((r.z for r in recs if r.extra["evidence"]), None)
    return CheckReport(sc.name, sc.check, audit, recs, sc.tol, time.perf_counter() - t0,
                       sc.expect, rule="any")


def _longest_cyclic_run(v: MassVector) -> int:
    occ = v.masses != 0
    if occ.all():
        return len(occ)
    best = run = 0
    for flag in (occ.tolist() * 2):
        run = run + 1 if flag else 0
        best = max(best, run)
    return min(best, len(occ))


def check_torus_power(mu, lam, sc: Scenario) -> CheckReport:
    """Find the least power ``N`` whose circle support holds a run of at
    least ``m**(level // 2)`` occupied cells, then test the upper
    dimension of ``mu**(N + k)``, ``k <= k_max``, against ``lam * N + tol``
    on a cyclic grid."""
    t0 = time.perf_counter()
    of = mu.of if isinstance(mu, Circle) else mu
    base = _base_of(of, fallback=sc.base)
    lam = float(lam)
    v1 = to_circle(_vector(of, sc.level, base))
    need = base ** (sc.level // 2)
    vk, N = v1, None
    runs = []
    for k in range(1, sc.n_cap + 1):
        if k > 1:
            vk = convolve_cyclic(vk, v1)
        runs.append(_longest_cyclic_run(vk))
        if runs[-1] >= need:
            N = k
            break
    audit = {"run_needed": need, "longest_runs": runs}
    if N is None:
        raise NoInteriorFound(f"no power up to {sc.n_cap} has interior at level {sc.level}",
                              {**audit, "hypothesis_met": False, "reason": "no interior found"})
    audit.update(hypothesis_met=True, N=N, bound=lam * N)
    count = int(sc.grid) if not isinstance(sc.grid, (list, tuple)) else None
    pts = [Fraction(i, count) for i in range(count)] if count else \
        [Fraction(parse_value(z)) for z in sc.grid]
    est = sc.estimator or "upper"
    recs = []
    for k in range(1, sc.k_max + 1):
        vk = convolve_cyclic(vk, v1)
        n_min, n_max = _levels(vk, sc)
        profiles = profile_grid(vk, pts, n_min, n_max, sc.window, sc.slope_window)
        vals = [_pick(p, est) for p in profiles]
        i = max(range(len(vals)), key=vals.__getitem__)
        recs.append(PointRecord(N + k, vals[i], lam * N, lam * N - vals[i],
                                {"argmax_z": float(pts[i]), "k": k}))
    audit["estimator"] = est
    return CheckReport(sc.name, sc.check, audit, recs, sc.tol, time.perf_counter() - t0, sc.expect)


def check_profile(mu, nu, sc: Scenario) -> CheckReport:
    """Profile-only scenario: estimates on a grid, no asserted bound."""
    t0 = time.perf_counter()
    base = _base_of(mu, nu, fallback=sc.base)
    target = mu if nu is None else Convolution((mu, nu))
    v = _vector(target, sc.level, base)
    lo, hi = v.support().hull
    pts = _grid(lo, hi, sc)
    n_min, n_max = _levels(v, sc)
    profiles = profile_grid(v, pts, n_min, n_max, sc.window, sc.slope_window)
    recs = [PointRecord(float(z), p.upper_dim_est, None, None, _estimates(p))
            for z, p in zip(pts, profiles)]
    audit = {"hypothesis_met": True, "n_range": (n_min, n_max), "hypotheses": sc.label or "none"}
    return CheckReport(sc.name, sc.check, audit, recs, sc.tol, time.perf_counter() - t0, sc.expect)


CHECKS = {
    "interior_bound": lambda sc: check_interior_bound(sc.mu, sc.nu, sc.lam, sc),
    "lower_bound": lambda sc: check_lower_bound(sc.mu, sc.nu, sc.alpha, sc),
    "unique_pair": lambda sc: check_unique_pair(sc.mu, sc.nu, sc.z, sc),
    "gap_point": lambda sc: check_gap_point(sc.mu, sc.nu, sc.z, sc),
    "isolated_point": lambda sc: check_isolated_point(sc.mu, sc),
    "torus_power": lambda sc: check_torus_power(sc.mu, sc.lam, sc),
    "profile": lambda sc: check_profile(sc.mu, sc.nu, sc),
}


# -- suites -------------------------------------------------------------------

def run_scenario(sc: Scenario) -> CheckReport:
    t0 = time.perf_counter()
    try:
        return CHECKS[sc.check](sc)
    except HypothesisNotMet as exc:
        audit = {"hypothesis_met": False, "reason": str(exc), **exc.audit}
        return CheckReport(sc.name, sc.check, audit, [], sc.tol,
                           time.perf_counter() - t0, sc.expect)


_FIELDS = {"level", "grid", "tol", "z", "interval", "k_max", "n_cap", "estimator",
           "window", "slope_window", "expect", "label", "base"}


def _scenario(entry: dict, refs: dict) -> Scenario:
    if not isinstance(entry, dict):
        raise ConfigError(f"scenario must be an object, got {entry!r}")
    for key in ("name", "check", "mu"):
        if key not in entry:
            raise ConfigError(f"scenario is missing {key!r}: {entry}")
    unknown = set(entry) - _FIELDS - {"name", "check", "mu", "nu", "lambda", "alpha", "description"}
    if unknown:
        raise ConfigError(f"{entry['name']}: unknown fields {sorted(unknown)}")
    kw = {k: entry[k] for k in _FIELDS if k in entry}
    if "tol" in kw:
        kw["tol"] = float(parse_value(kw["tol"]))
    nu = entry.get("nu")
    return Scenario(
        name=entry["name"], check=entry["check"], mu=parse_measure(entry["mu"], refs),
        nu=None if nu is None else parse_measure(nu, refs),
        lam=parse_value(entry.get("lambda")), alpha=parse_value(entry.get("alpha")), **kw)


def load_suite(src) -> list:
    """Scenarios from a suite file, a dict, or ``"default"`` (shipped)."""
    if isinstance(src, dict):
        data = src
    elif src in ("default", None):
        data = json.loads(resources.files("dimlab").joinpath("data/default_suite.json").read_text())
    else:
        try:
            data = json.loads(Path(src).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read suite {src}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"suite {src} is not valid JSON: {exc}") from exc
    if isinstance(data, list):
        data = {"scenarios": data}
    refs = data.get("measures", {})
    scenarios = [_scenario(e, refs) for e in data.get("scenarios", [])]
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ConfigError("scenario names must be unique")
    return scenarios


def run_suite(src, threads: int | None = None) -> list:
    """Run every scenario; reports keep the suite order."""
    scenarios = src if isinstance(src, list) else load_suite(src)
    threads = threads or thread_count()
    if threads <= 1:
        return [run_scenario(sc) for sc in scenarios]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_scenario, scenarios))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_reports(reports: list, out_dir) -> None:
    """``summary.csv``, ``summary.txt`` and one ``<name>.csv`` per scenario."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["name", "check", "expect", "verdict", "ok", "min_margin", "points", "runtime_s"])
        for r in reports:
            w.writerow([r.name, r.check, r.expect, r.verdict, r.ok, _fmt(r.min_margin),
                        len(r.records), f"{r.runtime:.3f}"])
    (out / "summary.txt").write_text(summary_text(reports))
    for r in reports:
        with open(out / f"{r.name}.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["z", "estimate", "bound", "margin"])
            for rec in r.records:
                w.writerow([_fmt(rec.z), _fmt(rec.estimate), _fmt(rec.bound), _fmt(rec.margin)])


def summary_text(reports: list) -> str:
    lines = []
    for r in reports:
        mark = "ok  " if r.ok else "FAIL"
        mm = "" if r.min_margin is None else f" min_margin={r.min_margin:+.4f}"
        lines.append(f"{mark} {r.name:<34} {r.check:<15} verdict={r.verdict:<19} "
                     f"expect={r.expect:<19}{mm} ({r.runtime:.1f}s)")
        if r.audit.get("reason"):
            lines.append(f"     audit: {r.audit['reason']}")
    passed = sum(r.ok for r in reports)
    lines.append(f"{passed}/{len(reports)} scenarios as expected")
    return "\n".join(lines) + "\n"
