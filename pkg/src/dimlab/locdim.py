"""Finite-scale local dimension estimates from ball-mass brackets.

Radii run over the lattice scales ``r_n = m**-n``.  Restricting the limit
to this subsequence loses nothing: for ``m**-(n+1) <= r <= m**-n``
monotonicity of ``r -> mu(B(x, r))`` traps ``log mu(B(x, r)) / log r``
between ``d_{n+1} * (n+1)/n`` and ``d_n * n/(n+1)``, so the subsequence
and the full limsup/liminf differ by at most ``d / n``
(see :func:`interscale_correction`).

Per level ``n`` a profile records the bracket ``[lower, upper]`` of
``mu(B(x, r_n))`` and the two ratios ``d_lower = log(upper)/log(r)`` and
``d_upper = log(lower)/log(r)``.  Tail estimates:

* ``upper_dim_est``: max of ``d_upper`` over the last ``tail_window`` levels;
* ``lower_dim_est``: min of ``d_lower`` over the same levels;
* ``slope_est``: least-squares slope of ``log(midpoint)`` against ``log r``
  over the last ``slope_window`` levels with a nonzero lower bracket.

The ratio estimates carry an ``O(1/n)`` bias from the prefactor of the
power law; the slope estimate cancels it.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cascade import MassVector, ball_mass
from .measures import AtomicMeasure, Gap, IfsMeasure, MeasureError

__all__ = [
    "LocDimError", "PointOutsideHull", "AllBracketsZero", "AmbiguousEndpointBranch",
    "GapTooSmall", "DecompositionMismatch",
    "LevelRecord", "DimProfile", "DimValue",
    "dim_profile", "profile_grid", "dim_at_left_endpoint", "dim_at_right_endpoint",
    "dim_at_atom", "corner_dim", "unique_pair_dim", "gap_point_dim",
    "decomposition_bound", "interscale_correction", "thread_count",
    "TAIL_WINDOW", "SLOPE_WINDOW",
]

TAIL_WINDOW = 5
SLOPE_WINDOW = 8


class LocDimError(MeasureError):
    pass


class PointOutsideHull(LocDimError):
    pass


class AllBracketsZero(LocDimError):
    pass


class AmbiguousEndpointBranch(LocDimError):
    pass


class GapTooSmall(LocDimError):
    pass


class DecompositionMismatch(LocDimError):
    pass


def _ratio(mass, log_r: float) -> float:
    if mass <= 0:
        return math.inf
    return math.log(mass) / log_r


@dataclass(frozen=True)
class LevelRecord:
    n: int
    r: float
    lower: float
    upper: float
    lower_half: float | None = None  # lower bracket at radius r/2

    @property
    def log_r(self) -> float:
        return math.log(self.r)

    @property
    def d_lower(self) -> float:
        return _ratio(self.upper, self.log_r)

    @property
    def d_upper(self) -> float:
        return _ratio(self.lower, self.log_r)

    @property
    def unbounded(self) -> bool:
        return self.lower <= 0


def _tail_estimates(levels, w: int, sw: int) -> tuple:
    tail = levels[-w:] if w else levels
    up = max(rec.d_upper for rec in tail)
    lo = min(rec.d_lower for rec in tail)
    fit = [rec for rec in levels if not rec.unbounded][-sw:]
    if len(fit) >= 2:
        xs = np.array([rec.log_r for rec in fit])
        ys = np.array([math.log((float(rec.lower) + float(rec.upper)) / 2) for rec in fit])
        slope = float(np.polyfit(xs, ys, 1)[0])
    else:
        slope = math.nan
    return up, lo, slope


@dataclass(frozen=True)
class DimProfile:
    """Per-level brackets at ``x`` plus tail estimates (see module docs)."""

    x: object
    levels: tuple
    tail_window: int
    slope_window: int
    upper_dim_est: float
    lower_dim_est: float
    slope_est: float
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_levels(cls, x, levels, tail_window=TAIL_WINDOW, slope_window=SLOPE_WINDOW, **meta):
        levels = tuple(levels)
        up, lo, slope = _tail_estimates(levels, tail_window, slope_window)
        return cls(x, levels, tail_window, slope_window, up, lo, slope, dict(meta))

    @property
    def unbounded_levels(self) -> list:
        return [rec.n for rec in self.levels if rec.unbounded]

    def rows(self) -> list:
        return [(rec.n, rec.r, rec.lower, rec.upper, rec.d_lower, rec.d_upper) for rec in self.levels]

    def __repr__(self):
        return (f"DimProfile(x={float(self.x):.6g}, n={self.levels[0].n}..{self.levels[-1].n}, "
                f"upper={self.upper_dim_est:.4f}, lower={self.lower_dim_est:.4f}, "
                f"slope={self.slope_est:.4f})")


@dataclass(frozen=True)
class DimValue:
    value: float
    kind: str = "exact"
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if self.kind == "exact":
            object.__setattr__(self, "lo", self.value)
            object.__setattr__(self, "hi", self.value)
        elif self.kind == "bracket":
            if self.lo > self.hi:
                raise ValueError(f"empty bracket [{self.lo}, {self.hi}]")
        else:
            raise ValueError(f"unknown DimValue kind {self.kind!r}")

    @classmethod
    def exact(cls, value: float) -> "DimValue":
        return cls(float(value))

    @classmethod
    def bracket(cls, lo: float, hi: float, value: float | None = None) -> "DimValue":
        return cls(float(hi if value is None else value), "bracket", float(lo), float(hi))

    @property
    def is_exact(self) -> bool:
        return self.kind == "exact"

    def __add__(self, other: "DimValue") -> "DimValue":
        if self.is_exact and other.is_exact:
            return DimValue.exact(self.value + other.value)
        return DimValue.bracket(self.lo + other.lo, self.hi + other.hi, self.value + other.value)

    def __float__(self):
        return float(self.value)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("DIMLAB_THREADS", "1")))
    except ValueError:
        return 1


def _deepest(vectors) -> MassVector:
    if isinstance(vectors, MassVector):
        return vectors
    vectors = list(vectors)
    if not vectors:
        raise ValueError("no vectors given")
    bases = {v.base for v in vectors}
    if len(bases) > 1:
        raise ValueError("vectors disagree on the base")
    return max(vectors, key=lambda v: v.level)


def dim_profile(vectors, x, n_min: int, n_max: int, w: int = TAIL_WINDOW,
                slope_window: int = SLOPE_WINDOW) -> DimProfile:
    """Ball-mass brackets of a measure at ``x`` for ``r = m**-n``,
    ``n_min <= n <= n_max``.

    ``vectors`` is one mass vector or several views of the same measure at
    different levels; brackets always come from the deepest one, which
    gives the tightest enclosure.
    """
    v = _deepest(vectors)
    if n_min < 1:
        raise ValueError("n_min must be >= 1 (r = 1 has log r = 0)")
    if n_max < n_min:
        raise ValueError("n_max < n_min")
    if n_max > v.level:
        raise ValueError(f"n_max={n_max} exceeds the vector level {v.level}")
    if w > n_max - n_min + 1:
        raise ValueError("tail window longer than the level range")
    xf = Fraction(x) if not isinstance(x, float) else Fraction(x)
    if not v.cyclic:
        lo, hi = v.extent
        if not lo <= xf <= hi:
            raise PointOutsideHull(f"x={float(xf)} outside [{float(lo)}, {float(hi)}]")
    levels = []
    for n in range(n_min, n_max + 1):
        r = Fraction(1, v.base ** n)
        b = ball_mass(v, xf, r)
        half = ball_mass(v, xf, r / 2).lower
        levels.append(LevelRecord(n, float(r), float(b.lower), float(b.upper), float(half)))
    if all(rec.unbounded for rec in levels):
        raise AllBracketsZero(f"no level has positive inner mass at x={float(xf)}")
    return DimProfile.from_levels(x, levels, w, slope_window)


def profile_grid(vectors, points, n_min: int, n_max: int, w: int = TAIL_WINDOW,
                 slope_window: int = SLOPE_WINDOW, threads: int | None = None,
                 skip_empty: bool = False) -> list:
    """``dim_profile`` at each point; DIMLAB_THREADS caps the worker count.

    With ``skip_empty`` a point carrying no inner mass at any level gives
    None instead of raising :class:`AllBracketsZero`.
    """
    v = _deepest(vectors)
    threads = threads or thread_count()

    def one(z):
        try:
            return dim_profile(v, z, n_min, n_max, w, slope_window)
        except AllBracketsZero:
            if skip_empty:
                return None
            raise

    if threads <= 1:
        return [one(z) for z in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, points))


# -- closed-form special points ---------------------------------------------

def _endpoint_dim(mu: IfsMeasure, digit: int) -> DimValue:
    hits = [p for d, p in mu.branches if d == digit]
    if len(hits) != 1:
        raise AmbiguousEndpointBranch(f"need exactly one branch with digit {digit}, found {len(hits)}")
    p = float(hits[0])
    return DimValue.exact(math.log(p) / math.log(1 / mu.base))


def dim_at_left_endpoint(mu: IfsMeasure) -> DimValue:
    """Local dimension at the left end of the attractor,
    ``log(p_0) / log(1/m)``: the ball ``[0, m**-n)`` carries exactly
    ``p_0**n``."""
    return _endpoint_dim(mu, 0)


def dim_at_right_endpoint(mu: IfsMeasure) -> DimValue:
    """Mirror of :func:`dim_at_left_endpoint` using the digit ``m - 1``."""
    return _endpoint_dim(mu, mu.base - 1)


def dim_at_atom(nu: AtomicMeasure, position) -> DimValue:
    if Fraction(position) not in nu.positions:
        raise PointOutsideHull(f"{position} is not an atom")
    return DimValue.exact(0.0)


def corner_dim(d_mu: DimValue, d_nu: DimValue) -> DimValue:
    """Local dimension of ``mu * nu`` at the common left endpoint: the sum
    of the factors' endpoint dimensions (an interval sum for brackets)."""
    for d in (d_mu, d_nu):
        if not (math.isfinite(d.lo) and math.isfinite(d.hi)):
            raise ValueError("corner_dim needs finite inputs")
    return d_mu + d_nu


def _pair_levels(p, q):
    if [r.n for r in p.levels] != [r.n for r in q.levels]:
        raise ValueError("profiles must cover the same levels")
    return zip(p.levels, q.levels)


def _half(rec: LevelRecord) -> float:
    return rec.lower_half if rec.lower_half is not None else 0.0


def unique_pair_dim(p_mu: DimProfile, p_nu: DimProfile) -> DimProfile:
    """Profile of ``mu * nu`` at ``z = x0 + y0`` when ``(x0, y0)`` is the only
    decomposition of ``z`` from the two supports.

    Per level the bracket is the sandwich
    ``mu(B(x0, r/2)) nu(B(y0, r/2)) <= (mu*nu)(B(z, r)) <= mu(B(x0, r)) nu(B(y0, r))``;
    the tail estimates are the sums of the factors' estimates.
    """
    levels = [LevelRecord(a.n, a.r, _half(a) * _half(b), a.upper * b.upper)
              for a, b in _pair_levels(p_mu, p_nu)]
    z = Fraction(p_mu.x) + Fraction(p_nu.x)
    return DimProfile(z, tuple(levels), p_mu.tail_window, p_mu.slope_window,
                      p_mu.upper_dim_est + p_nu.upper_dim_est,
                      p_mu.lower_dim_est + p_nu.lower_dim_est,
                      p_mu.slope_est + p_nu.slope_est, {"pair": (p_mu.x, p_nu.x)})


def gap_point_dim(p_mu_right: DimProfile, p_mu_left: DimProfile, p_nu_b: DimProfile,
                  p_nu_c: DimProfile, gap: Gap, mu_length=1, tol: float = 0.0) -> DimProfile:
    """Profile of ``mu * nu`` at ``z = R + b = L + c`` for a gap ``(b, c)``
    of ``supp nu`` and ``supp mu = [L, R]`` with ``R - L = mu_length``.

    * gap longer than ``mu_length``: the decomposition ``(R, b)`` is unique
      and this is :func:`unique_pair_dim`;
    * gap equal to ``mu_length``: both ``(R, b)`` and ``(L, c)`` reach ``z``
      and the profile brackets ``S(r) = mu(B(R,r)) nu(B(b,r)) + mu(B(L,r)) nu(B(c,r))``,
      which dominates ``(mu*nu)(B(z,r))`` and each single product, so its
      upper estimate never exceeds the smaller pair estimate.  ``meta`` records the two single-pair
      upper and slope estimates, their minima, and whether the combined
      slope estimate matched the smaller pair slope within ``tol``.
    """
    ratio = Fraction(gap.diameter) / Fraction(mu_length)
    if ratio < 1 and abs(float(ratio) - 1) > tol:
        raise GapTooSmall(f"gap/length ratio {float(ratio)} < 1: z is interior")
    if ratio > 1 and abs(float(ratio) - 1) > tol:
        prof = unique_pair_dim(p_mu_right, p_nu_b)
        prof.meta["case"] = "unique"
        return prof
    levels = []
    for (a, b), (c, d) in zip(_pair_levels(p_mu_right, p_nu_b), _pair_levels(p_mu_left, p_nu_c)):
        lower = a.lower * b.lower + c.lower * d.lower
        upper = a.upper * b.upper + c.upper * d.upper
        levels.append(LevelRecord(a.n, a.r, lower, upper))
    z = Fraction(p_mu_right.x) + Fraction(p_nu_b.x)
    prof = DimProfile.from_levels(z, levels, p_mu_right.tail_window, p_mu_right.slope_window)
    pair_rb = unique_pair_dim(p_mu_right, p_nu_b)
    pair_lc = unique_pair_dim(p_mu_left, p_nu_c)
    best = min(pair_rb.upper_dim_est, pair_lc.upper_dim_est)
    best_slope = min(pair_rb.slope_est, pair_lc.slope_est)
    prof.meta.update(case="boundary", pair_upper=(pair_rb.upper_dim_est, pair_lc.upper_dim_est),
                     pair_slope=(pair_rb.slope_est, pair_lc.slope_est), min_pair_upper=best,
                     min_pair_slope=best_slope,
                     equality_observed=abs(prof.slope_est - best_slope) <= max(tol, 1e-9))
    return prof


def decomposition_bound(candidates, z=None, tol: float = 1e-12) -> DimValue:
    """Upper bound for the upper local dimension of an n-fold convolution at
    ``z``: the least, over candidate decompositions ``z = x_1 + ... + x_n``,
    of the summed factor upper dimensions.

    Each candidate is a list whose items are DimProfiles or
    ``(x_i, DimValue)`` pairs.
    """
    best = math.inf
    for cand in candidates:
        xs, dims = [], []
        for item in cand:
            if isinstance(item, DimProfile):
                xs.append(Fraction(item.x))
                dims.append(item.upper_dim_est)
            else:
                x_i, d = item
                xs.append(Fraction(x_i))
                dims.append(d.hi)
        total = sum(xs)
        if z is not None and abs(float(total - Fraction(z))) > tol:
            raise DecompositionMismatch(f"decomposition sums to {float(total)}, not {float(z)}")
        if z is None:
            z = total
        best = min(best, sum(dims))
    return DimValue.bracket(0.0, best)


def interscale_correction(n: int, base: int, dim_bound: float) -> float:
    """Largest possible gap between ``log mu(B(x,r))/log r`` at an arbitrary
    ``r`` in ``[m**-(n+1), m**-n]`` and the nearer lattice-scale ratio,
    for ratios bounded by ``dim_bound``: ``dim_bound / n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return dim_bound / n
