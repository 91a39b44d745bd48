"""Lattice mass vectors and rigorous ball-mass brackets.

A :class:`MassVector` stores the masses of the m-adic cells
``[offset + i*h, offset + (i+1)*h)`` with ``h = m**-level``.  Entry ``i``
is only known to lie somewhere in its *span*

* ``[a_i, a_i + (smear + 1) * h)`` for ordinary (cascaded or convolved) vectors,
* the single point ``a_i`` for atomic vectors.

Convolving two spans of widths ``w_a`` and ``w_b`` gives a span of width
``w_a + w_b``; that is all the bookkeeping needed to keep ball masses
bracketed after any number of convolutions.

Float-mode vectors also carry two per-entry error bounds: ``rel_err``
(``|computed - true| <= rel_err * true``, from cascade products) and
``abs_err`` (from FFT convolution).  :func:`ball_mass` widens its sums by
both and by the summation error, so the bracket stays valid in floating
point.  Rational mode (``exact=True``) uses Fraction arithmetic and has no
error terms at all.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .measures import AtomicMeasure, IfsMeasure, MeasureError, as_number

__all__ = [
    "MassVector", "BallMassBracket", "LevelTooLarge", "AtomOffLattice", "OffLattice",
    "NonpositiveRadius", "refine", "refine_atomic", "ball_mass", "coarsen",
    "to_circle", "write_csv", "read_csv", "MAX_CELLS",
]

MAX_CELLS = 2 ** 26
U = 2.0 ** -53  # unit roundoff of float64


class LevelTooLarge(MeasureError):
    pass


class AtomOffLattice(MeasureError):
    pass


class OffLattice(MeasureError):
    """Normalization does not map the m-adic lattice onto itself."""


class NonpositiveRadius(ValueError):
    pass


@dataclass(frozen=True)
class BallMassBracket:
    lower: object
    upper: object
    x: object
    r: object

    @property
    def width(self):
        return self.upper - self.lower


@dataclass(frozen=True, eq=False)
class MassVector:
    base: int
    level: int
    offset: Fraction
    masses: np.ndarray
    smear: int = 0
    atomic: bool = False
    cyclic: bool = False
    rel_err: float = 0.0
    abs_err: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "offset", Fraction(self.offset))
        if self.smear < 0:
            raise ValueError("smear must be >= 0")
        self.masses.setflags(write=False)

    @property
    def exact(self) -> bool:
        return self.masses.dtype == object

    @property
    def h(self) -> Fraction:
        return Fraction(1, self.base ** self.level)

    @property
    def width(self) -> int:
        """Span width in cells: 0 for point masses, else ``smear + 1``."""
        return 0 if self.atomic else self.smear + 1

    def __len__(self):
        return len(self.masses)

    @property
    def total(self):
        if "total" not in self._cache:
            s = sum(self.masses.tolist(), Fraction(0)) if self.exact else float(np.sum(self.masses))
            self._cache["total"] = s
        return self._cache["total"]

    @property
    def extent(self) -> tuple:
        """Closed interval holding every span (before reduction mod 1)."""
        return self.offset, self.offset + (len(self) - 1 + self.width) * self.h

    def positions(self) -> np.ndarray:
        """Left endpoints of the cells as floats."""
        return float(self.offset) + np.arange(len(self)) * float(self.h)

    def as_float(self) -> "MassVector":
        if not self.exact:
            return self
        m = np.array([float(x) for x in self.masses], dtype=float)
        return replace(self, masses=m, rel_err=U, _cache={})

    def nonzero(self) -> np.ndarray:
        return np.flatnonzero(self.masses != 0)

    def occupancy(self) -> float:
        return np.count_nonzero(self.masses) / len(self)

    def ball_mass(self, x, r) -> BallMassBracket:
        return ball_mass(self, x, r)

    def support(self):
        """Merged closed spans of positive entries (a level-``level`` outer
        approximation of the support; for cyclic vectors, positions are
        unreduced and may run past 1)."""
        from .measures import SupportSet, merge_runs
        idx = self.nonzero()
        if len(idx) == 0:
            raise MeasureError("vector has no mass")
        runs = merge_runs(idx, idx + self.width)
        h = self.h
        return SupportSet(tuple((self.offset + a * h, self.offset + b * h) for a, b in runs),
                          self.level)

    def __repr__(self):
        kind = "atomic" if self.atomic else f"smear={self.smear}"
        mode = "exact" if self.exact else "float"
        return (f"MassVector(base={self.base}, level={self.level}, offset={self.offset}, "
                f"len={len(self)}, {kind}, {mode}{', cyclic' if self.cyclic else ''})")


def _lattice_depth(mu: IfsMeasure, n: int) -> int:
    """Canonical cascade depth giving user-frame cells of width m**-n."""
    m = mu.base
    s = mu.normalization.scale
    j = 0
    while s.denominator == 1 and s.numerator % m == 0:
        s /= m
        j += 1
    while s.numerator == 1 and s.denominator % m == 0:
        s *= m
        j -= 1
    if s != 1:
        raise OffLattice(f"scale {mu.normalization.scale} is not a power of {m}")
    if (mu.normalization.shift * m ** n).denominator != 1:
        raise OffLattice(f"shift {mu.normalization.shift} is not on the level-{n} lattice")
    depth = n + j
    if depth < 0:
        raise OffLattice(f"level {n} is coarser than the scaled attractor allows")
    return depth


def _is_pow2(p) -> bool:
    f = Fraction(p)
    return f.numerator == 1 and f.denominator & (f.denominator - 1) == 0


def refine(mu: IfsMeasure, n: int, exact: bool | None = None, max_cells: int = MAX_CELLS) -> MassVector:
    """Exact level-``n`` cell masses of a lattice IFS measure.

    Each cascade step sends the mass ``w`` of cell ``j`` to children
    ``m*j + d_i`` with masses ``w * p_i``.  ``exact`` selects Fraction
    arithmetic; it defaults to float mode.
    """
    if n < 0:
        raise ValueError("level must be >= 0")
    if exact is None:
        exact = False
    if exact and not mu.exact:
        raise MeasureError("rational mode needs rational probabilities")
    depth = _lattice_depth(mu, n)
    m = mu.base
    if m ** depth > max_cells:
        raise LevelTooLarge(f"{m}**{depth} cells exceeds the cap of {max_cells}")
    if len(mu.branches) == 1:
        d = mu.digits[0]
        if d in (0, m - 1):
            # a single map x/m + d/m fixes an endpoint: that is a lattice atom
            atom = mu.normalization(Fraction(d, m - 1))
            return refine_atomic(AtomicMeasure(((atom, mu.probs[0]),)), m, n, exact=exact)
    if exact:
        weights = np.array(mu.digit_weights(), dtype=object)
        masses = np.array([Fraction(1)], dtype=object)
    else:
        weights = np.array([float(w) for w in mu.digit_weights()])
        masses = np.ones(1)
    for _ in range(depth):
        masses = np.multiply.outer(masses, weights).ravel()
    if exact or all(_is_pow2(p) for p in mu.probs):
        rel = 0.0
    else:
        rel = depth * max(2, len(mu.branches)) * U
    return MassVector(m, n, mu.normalization.shift, masses, rel_err=rel)


def refine_atomic(nu: AtomicMeasure, base: int, n: int, exact: bool | None = None) -> MassVector:
    """Place each atom's mass in the cell it starts; positions must be
    multiples of ``base**-n``."""
    if n < 0:
        raise ValueError("level must be >= 0")
    scale = base ** n
    ticks = []
    for a in nu.positions:
        t = a * scale
        if t.denominator != 1:
            raise AtomOffLattice(f"atom at {a} is not a multiple of {base}**-{n}")
        ticks.append(t.numerator)
    lo = ticks[0]
    idx = np.array(ticks) - lo
    if idx[-1] + 1 > MAX_CELLS:
        raise LevelTooLarge("atomic vector too long")
    if exact is None:
        exact = False
    if exact:
        if not nu.exact:
            raise MeasureError("rational mode needs rational masses")
        masses = np.array([Fraction(0)] * (idx[-1] + 1), dtype=object)
        for i, w in zip(idx, nu.masses):
            masses[i] = w
        rel = 0.0
    else:
        masses = np.zeros(idx[-1] + 1)
        masses[idx] = [float(w) for w in nu.masses]
        rel = 0.0 if all(float(w) == w for w in nu.masses) else U
    return MassVector(base, n, Fraction(lo, scale), masses, atomic=True, rel_err=rel)


def _sum_slice(v: MassVector, lo: int, hi: int):
    """Sum and nonzero-count of entries lo..hi (inclusive), wrapping mod len
    for cyclic vectors."""
    L = len(v)
    if hi < lo:
        segments = []
    elif v.cyclic:
        if hi - lo + 1 >= L:
            segments = [(0, L)]
        else:
            a, b = lo % L, hi % L
            segments = [(a, b + 1)] if a <= b else [(a, L), (0, b + 1)]
    else:
        a, b = max(lo, 0), min(hi, L - 1)
        segments = [(a, b + 1)] if a <= b else []
    if v.exact:
        total = Fraction(0)
        for a, b in segments:
            total += sum(v.masses[a:b].tolist(), Fraction(0))
        return total, 0, 0
    total, count, nnz = 0.0, 0, 0
    for a, b in segments:
        chunk = v.masses[a:b]
        total += float(np.sum(chunk))
        count += b - a
        if v.abs_err:
            nnz += int(np.count_nonzero(chunk))
    return total, count, nnz


def _widen(v: MassVector, s: float, count: int, nnz: int, lower: bool) -> float:
    # numpy pairwise summation: error <= (log2(count) + 24) u * sum for nonneg terms
    g = (math.log2(count) + 24) * U if count > 1 else 0.0
    if lower:
        val = (s * (1 - g) - nnz * v.abs_err) / (1 + v.rel_err)
        return max(0.0, val * (1 - 4 * U))
    val = (s * (1 + g) + nnz * v.abs_err) / (1 - v.rel_err)
    return val * (1 + 4 * U)


def ball_mass(v: MassVector, x, r) -> BallMassBracket:
    """Bracket ``lower <= v(B(x, r)) <= v(closed ball) <= upper``.

    ``lower`` sums entries whose span lies inside the open interval
    ``(x - r, x + r)``; ``upper`` sums entries whose span meets
    ``[x - r, x + r]``.  Index thresholds are computed with exact rational
    arithmetic, so lattice-aligned balls are handled without rounding.
    On a cyclic vector the ball is the arc of radius ``r`` mod 1.
    """
    xf = as_number(x, exact_only=True)
    rf = as_number(r, exact_only=True)
    if rf <= 0:
        raise NonpositiveRadius(f"radius must be positive, got {r}")
    if v.cyclic and rf > Fraction(1, 2):
        t = v.total
        lo, hi = (t, t) if v.exact else (_widen(v, t, len(v), np.count_nonzero(v.masses), True),
                                         _widen(v, t, len(v), np.count_nonzero(v.masses), False))
        return BallMassBracket(lo, hi, x, r)
    scale = v.base ** v.level
    t1 = (xf - rf - v.offset) * scale
    t2 = (xf + rf - v.offset) * scale
    w = v.width
    if w == 0:
        lo_rng = (math.floor(t1) + 1, math.ceil(t2) - 1)
        up_rng = (math.ceil(t1), math.floor(t2))
    else:
        lo_rng = (math.floor(t1) + 1, math.floor(t2) - w)
        up_rng = (math.floor(t1) - w + 1, math.floor(t2))
    s_lo, c_lo, z_lo = _sum_slice(v, *lo_rng)
    s_up, c_up, z_up = _sum_slice(v, *up_rng)
    if v.exact:
        return BallMassBracket(s_lo, s_up, x, r)
    return BallMassBracket(_widen(v, s_lo, c_lo, z_lo, True), _widen(v, s_up, c_up, z_up, False), x, r)


def coarsen(v: MassVector) -> MassVector:
    """Aggregate blocks of ``base`` cells, giving a level ``level - 1`` vector."""
    if v.level == 0:
        raise ValueError("cannot coarsen a level-0 vector")
    m = v.base
    start = v.offset * m ** v.level
    assert start.denominator == 1
    start = start.numerator
    pad_front = start % m
    masses = v.masses
    zero = Fraction(0) if v.exact else 0.0
    if v.cyclic:
        # cell count m**level divides by m; wrap keeps alignment
        blocks = masses.reshape(-1, m)
    else:
        total_len = pad_front + len(masses)
        pad_back = (-total_len) % m
        full = np.concatenate([np.full(pad_front, zero, dtype=masses.dtype), masses,
                               np.full(pad_back, zero, dtype=masses.dtype)])
        blocks = full.reshape(-1, m)
    coarse = blocks.sum(axis=1)
    if v.atomic:
        smear = 0
    else:
        smear = -(-v.smear // m)
    offset = Fraction(start - pad_front, m ** v.level)
    rel = v.rel_err + (m * U if not v.exact else 0.0)
    return MassVector(m, v.level - 1, offset, coarse, smear=smear, cyclic=v.cyclic,
                      rel_err=rel, abs_err=v.abs_err * m)


def to_circle(v: MassVector) -> MassVector:
    """Reduce a line vector mod 1 onto the ``base**level`` cells of R/Z."""
    if v.cyclic:
        return v
    L = v.base ** v.level
    start = v.offset * L
    assert start.denominator == 1
    idx = (start.numerator + np.arange(len(v))) % L
    if v.exact:
        out = np.array([Fraction(0)] * L, dtype=object)
        for i, w in zip(idx.tolist(), v.masses.tolist()):
            out[i] += w
    else:
        out = np.zeros(L)
        np.add.at(out, idx, v.masses)
    folds = -(-len(v) // L)
    rel = v.rel_err + (folds * U if not v.exact and folds > 1 else 0.0)
    return MassVector(v.base, v.level, Fraction(0), out, smear=v.smear, atomic=v.atomic,
                      cyclic=True, rel_err=rel, abs_err=v.abs_err * folds)


# -- CSV --------------------------------------------------------------------

HEADER = "base,level,offset,smear,total,length,atomic,cyclic,rel_err,abs_err"


def _fmt(x) -> str:
    return str(x) if isinstance(x, Fraction) else repr(float(x))


def write_csv(v: MassVector, dest) -> None:
    """Write ``v`` as a header block followed by ``index,mass`` rows for the
    nonzero entries."""
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    buf.write(",".join([str(v.base), str(v.level), str(v.offset), str(v.smear), _fmt(v.total),
                        str(len(v)), str(int(v.atomic)), str(int(v.cyclic)),
                        repr(v.rel_err), repr(v.abs_err)]) + "\n")
    buf.write("index,mass\n")
    for i in v.nonzero().tolist():
        buf.write(f"{i},{_fmt(v.masses[i])}\n")
    text = buf.getvalue()
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)


def read_csv(src) -> MassVector:
    text = src.read() if hasattr(src, "read") else Path(src).read_text()
    lines = text.splitlines()
    if len(lines) < 2:
        raise ValueError("not a mass-vector CSV")
    names = lines[0].strip().split(",")
    vals = dict(zip(names, lines[1].strip().split(",")))
    if names[:5] != HEADER.split(",")[:5]:
        raise ValueError("not a mass-vector CSV")
    if len(lines) < 3 or lines[2].strip() != "index,mass":
        raise ValueError("mass-vector CSV is missing the index,mass line")
    rows = [ln.split(",") for ln in lines[3:] if ln.strip()]
    exact = any("/" in m for _, m in rows) or ("/" in vals["total"]) or (
        rows and all("." not in m and "e" not in m for _, m in rows))
    length = int(vals.get("length") or (max(int(i) for i, _ in rows) + 1))
    if exact:
        masses = np.array([Fraction(0)] * length, dtype=object)
        for i, m in rows:
            masses[int(i)] = Fraction(m)
    else:
        masses = np.zeros(length)
        for i, m in rows:
            masses[int(i)] = float(m)
    return MassVector(int(vals["base"]), int(vals["level"]), Fraction(vals["offset"]), masses,
                      smear=int(vals["smear"]), atomic=bool(int(vals.get("atomic", 0))),
                      cyclic=bool(int(vals.get("cyclic", 0))),
                      rel_err=float(vals.get("rel_err", 0.0)), abs_err=float(vals.get("abs_err", 0.0)))
