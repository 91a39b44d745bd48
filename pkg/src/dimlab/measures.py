"""Measure descriptions: lattice-aligned self-similar measures, atomic
measures, and their convolutions, plus finite-level supports and gaps.

Every self-similar measure here uses the maps ``S_i(x) = x/m + d_i/m`` with
distinct digits ``d_i`` in ``[0, m-1]``, followed by an affine change of
frame.  Positions are kept as :class:`fractions.Fraction` so lattice
questions (is this point a multiple of ``m**-n``?) are answered exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "MeasureError", "BadBase", "DuplicateDigit", "ProbSumError", "BadProbability",
    "EmptyAtomList", "DuplicatePosition",
    "Affine", "IfsMeasure", "AtomicMeasure", "Convolution", "Power", "Circle",
    "SupportSet", "Gap",
    "make_ifs", "make_atomic", "support", "gaps", "max_gap",
    "cantor", "lebesgue", "example33", "bernoulli", "triangle", "as_number",
    "ConfigError", "preset", "parse_measure", "load_measure",
]

PROB_SUM_TOL = 1e-12


class MeasureError(ValueError):
    """Invalid measure description."""


class BadBase(MeasureError):
    pass


class DuplicateDigit(MeasureError):
    pass


class ProbSumError(MeasureError):
    pass


class BadProbability(MeasureError):
    pass


class EmptyAtomList(MeasureError):
    pass


class DuplicatePosition(MeasureError):
    pass


Number = Union[int, float, Fraction]


def as_number(value, exact_only: bool = False):
    """Coerce config input to ``Fraction`` (ints, strings like ``"2/5"``,
    Fractions) or leave floats alone unless ``exact_only``."""
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise MeasureError(f"non-finite number {value!r}")
        return Fraction(float(value)) if exact_only else float(value)
    raise TypeError(f"cannot interpret {value!r} as a number")


@dataclass(frozen=True)
class Affine:
    """``x -> scale * x + shift`` with ``scale > 0``."""

    scale: Fraction = Fraction(1)
    shift: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "scale", as_number(self.scale, exact_only=True))
        object.__setattr__(self, "shift", as_number(self.shift, exact_only=True))
        if self.scale <= 0:
            raise MeasureError("normalization scale must be positive")

    def __call__(self, x):
        return self.scale * x + self.shift

    @property
    def is_identity(self) -> bool:
        return self.scale == 1 and self.shift == 0


@dataclass(frozen=True)
class IfsMeasure:
    """Self-similar measure of the equal-ratio IFS ``x/m + d/m``.

    ``branches`` holds ``(digit, prob)`` pairs sorted by digit; probabilities
    are Fractions when given exactly, floats otherwise.
    """

    base: int
    branches: tuple
    normalization: Affine = field(default_factory=Affine)

    @property
    def digits(self) -> tuple:
        return tuple(d for d, _ in self.branches)

    @property
    def probs(self) -> tuple:
        return tuple(p for _, p in self.branches)

    @property
    def exact(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.probs)

    @property
    def total_mass(self):
        return sum(self.probs)

    def digit_weights(self) -> list:
        """Length-``base`` list of weights indexed by digit (0 where absent)."""
        zero = Fraction(0) if self.exact else 0.0
        w = [zero] * self.base
        for d, p in self.branches:
            w[d] = p
        return w

    @property
    def hull(self) -> tuple:
        """Convex hull of the attractor in the user frame."""
        m = self.base
        lo, hi = Fraction(min(self.digits), m - 1), Fraction(max(self.digits), m - 1)
        return self.normalization(lo), self.normalization(hi)

    def __str__(self):
        br = ", ".join(f"{d}:{p}" for d, p in self.branches)
        s = f"ifs(base={self.base}; {br})"
        if not self.normalization.is_identity:
            s += f" * {self.normalization.scale} + {self.normalization.shift}"
        return s


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite sum of point masses; ``atoms`` sorted by position."""

    atoms: tuple

    @property
    def positions(self) -> tuple:
        return tuple(a for a, _ in self.atoms)

    @property
    def masses(self) -> tuple:
        return tuple(w for _, w in self.atoms)

    @property
    def total_mass(self):
        return sum(self.masses)

    @property
    def exact(self) -> bool:
        return all(isinstance(w, Fraction) for w in self.masses)

    @property
    def hull(self) -> tuple:
        return self.atoms[0][0], self.atoms[-1][0]

    def __str__(self):
        return " + ".join(
            (f"{w}*" if w != 1 else "") + f"delta({a})" for a, w in self.atoms)


@dataclass(frozen=True)
class Convolution:
    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 1:
            raise MeasureError("convolution needs at least one factor")

    @property
    def hull(self):
        hs = [f.hull for f in self.factors]
        return sum(h[0] for h in hs), sum(h[1] for h in hs)

    @property
    def total_mass(self):
        return math.prod(f.total_mass for f in self.factors)

    @property
    def exact(self) -> bool:
        return all(f.exact for f in self.factors)

    def __str__(self):
        return " * ".join(f"({f})" for f in self.factors)


@dataclass(frozen=True)
class Power:
    """k-fold self-convolution."""

    of: object
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise MeasureError("convolution power needs integer k >= 1")

    @property
    def hull(self):
        lo, hi = self.of.hull
        return self.k * lo, self.k * hi

    @property
    def total_mass(self):
        return self.of.total_mass ** self.k

    @property
    def exact(self) -> bool:
        return self.of.exact

    def __str__(self):
        return f"({self.of})^{self.k}"


@dataclass(frozen=True)
class Circle:
    """Push a measure on the line to the circle R/Z (reduction mod 1)."""

    of: object

    @property
    def hull(self):
        return Fraction(0), Fraction(1)

    @property
    def total_mass(self):
        return self.of.total_mass

    @property
    def exact(self) -> bool:
        return self.of.exact

    def __str__(self):
        return f"circle({self.of})"


def make_ifs(base: int, branches, normalization=None) -> IfsMeasure:
    """Validate and build an equal-ratio lattice IFS measure.

    >>> make_ifs(3, [(0, "1/2"), (2, "1/2")]).digits
    (0, 2)
    """
    if isinstance(base, bool) or int(base) != base or base < 2:
        raise BadBase(f"base must be an integer >= 2, got {base!r}")
    base = int(base)
    branches = list(branches)
    if not branches:
        raise MeasureError("an IFS needs at least one branch")
    parsed = []
    for d, p in branches:
        if isinstance(d, bool) or int(d) != d:
            raise MeasureError(f"digit {d!r} is not an integer (non-lattice translation)")
        d = int(d)
        if not 0 <= d < base:
            raise MeasureError(f"digit {d} outside [0, {base - 1}]")
        p = as_number(p)
        if not 0 < p <= 1:
            raise BadProbability(f"probability {p} not in (0, 1]")
        parsed.append((d, p))
    seen = [d for d, _ in parsed]
    if len(set(seen)) != len(seen):
        raise DuplicateDigit(f"digits must be distinct, got {seen}")
    # mixed input: drop to floats so arithmetic stays in one mode
    if not all(isinstance(p, Fraction) for _, p in parsed):
        parsed = [(d, float(p)) for d, p in parsed]
    total = sum(p for _, p in parsed)
    if abs(total - 1) > PROB_SUM_TOL:
        raise ProbSumError(f"probabilities sum to {total}, not 1")
    if normalization is None:
        normalization = Affine()
    elif isinstance(normalization, dict):
        normalization = Affine(normalization.get("scale", 1), normalization.get("shift", 0))
    elif not isinstance(normalization, Affine):
        normalization = Affine(*normalization)
    return IfsMeasure(base, tuple(sorted(parsed)), normalization)


def make_atomic(atoms) -> AtomicMeasure:
    """Build a finite atomic measure from ``(position, mass)`` pairs."""
    atoms = list(atoms)
    if not atoms:
        raise EmptyAtomList("atomic measure needs at least one atom")
    parsed = []
    for a, w in atoms:
        a = as_number(a, exact_only=True)
        w = as_number(w)
        if not w > 0:
            raise MeasureError(f"atom mass must be positive, got {w}")
        parsed.append((a, w))
    pos = [a for a, _ in parsed]
    if len(set(pos)) != len(pos):
        raise DuplicatePosition(f"atom positions must be distinct, got {pos}")
    if not all(isinstance(w, Fraction) for _, w in parsed):
        parsed = [(a, float(w)) for a, w in parsed]
    return AtomicMeasure(tuple(sorted(parsed)))


# -- presets ---------------------------------------------------------------

def cantor() -> IfsMeasure:
    """Middle-thirds Cantor measure."""
    return make_ifs(3, [(0, "1/2"), (2, "1/2")])


def lebesgue(base: int = 2) -> IfsMeasure:
    """Lebesgue measure on [0, 1], written in the given base."""
    return make_ifs(base, [(d, Fraction(1, base)) for d in range(base)])


def example33() -> IfsMeasure:
    """Weights 2/5, 1/5, 2/5 on the three maps x/3 + i/3."""
    return make_ifs(3, [(0, "2/5"), (1, "1/5"), (2, "2/5")])


def bernoulli(p) -> IfsMeasure:
    """Binary Bernoulli measure: digit 0 with probability p, digit 1 with 1 - p."""
    p = as_number(p)
    if not 0 < p < 1:
        raise BadProbability(f"bernoulli parameter must lie in (0, 1), got {p}")
    return make_ifs(2, [(0, p), (1, 1 - p)])


def triangle(base: int = 2) -> Power:
    """Lebesgue on [0, 1] convolved with itself (tent density on [0, 2])."""
    return Power(lebesgue(base), 2)


# -- supports and gaps ------------------------------------------------------

@dataclass(frozen=True)
class SupportSet:
    """Ordered disjoint closed intervals; ``level`` is None for exact sets."""

    intervals: tuple
    level: object = None

    def __post_init__(self):
        if not self.intervals:
            raise MeasureError("empty support")
        for (a, b), (c, d) in zip(self.intervals, self.intervals[1:]):
            if not (a <= b < c <= d):
                raise MeasureError("support intervals must be sorted and disjoint")
        if self.intervals[-1][0] > self.intervals[-1][1]:
            raise MeasureError("support interval with left > right")

    @property
    def hull(self) -> tuple:
        return self.intervals[0][0], self.intervals[-1][1]

    @property
    def is_interval(self) -> bool:
        return len(self.intervals) == 1

    def measure(self):
        """Total length (Lebesgue measure) of the set."""
        return sum(b - a for a, b in self.intervals)

    def contains(self, x) -> bool:
        return any(a <= x <= b for a, b in self.intervals)


@dataclass(frozen=True)
class Gap:
    left: Fraction
    right: Fraction

    @property
    def diameter(self):
        return self.right - self.left


def merge_runs(starts: np.ndarray, ends: np.ndarray) -> list:
    """Merge integer intervals ``[starts[i], ends[i]]`` (sorted by start)
    that overlap or touch; returns a list of ``(start, end)`` int pairs."""
    if len(starts) == 0:
        return []
    ends_max = np.maximum.accumulate(ends)
    breaks = np.nonzero(starts[1:] > ends_max[:-1])[0]
    first = np.concatenate(([0], breaks + 1))
    last = np.concatenate((breaks, [len(starts) - 1]))
    return list(zip(starts[first].tolist(), ends_max[last].tolist()))


def _ifs_cells(mu: IfsMeasure, level: int) -> np.ndarray:
    occ = np.ones(1, dtype=bool)
    mask = np.zeros(mu.base, dtype=bool)
    mask[list(mu.digits)] = True
    for _ in range(level):
        occ = np.logical_and.outer(occ, mask).ravel()
    return np.flatnonzero(occ)


def support(measure, level: int = 0) -> SupportSet:
    """Outer approximation of ``supp measure`` at refinement ``level``.

    For an IFS measure this is the union of the closed level-``level``
    cylinder images, so it shrinks as ``level`` grows and level 0 is the
    normalization image of [0, 1].  Atomic measures return their exact
    point set.  Anything else is realized as a mass vector and the closed
    cell-plus-smear spans of its positive entries are merged.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    if isinstance(measure, AtomicMeasure):
        return SupportSet(tuple((a, a) for a in measure.positions), None)
    if isinstance(measure, IfsMeasure):
        idx = _ifs_cells(measure, level)
        runs = merge_runs(idx, idx + 1)
        h = Fraction(1, measure.base ** level)
        T = measure.normalization
        return SupportSet(tuple((T(a * h), T(b * h)) for a, b in runs), level)
    from .cascade import MassVector
    if isinstance(measure, MassVector):
        return measure.support()
    from .convolve import realize
    return realize(measure, level).support()


def gaps(s: SupportSet) -> list:
    """Maximal open intervals of ``hull(s)`` missing ``s``, left to right."""
    iv = s.intervals
    return [Gap(iv[i][1], iv[i + 1][0]) for i in range(len(iv) - 1)]


def max_gap(s: SupportSet):
    """Largest gap diameter of ``s`` (0 for an interval or a point)."""
    return max((g.diameter for g in gaps(s)), default=Fraction(0))


# -- structured config ------------------------------------------------------

class ConfigError(MeasureError):
    pass


_PRESETS = {
    "cantor": lambda: cantor(),
    "lebesgue": lambda base=2: lebesgue(int(base)),
    "example33": lambda: example33(),
    "bernoulli": lambda p: bernoulli(p),
    "triangle": lambda base=2: triangle(int(base)),
}


def preset(name: str):
    """Named measure: ``cantor``, ``lebesgue``, ``lebesgue(3)``,
    ``example33``, ``bernoulli(1/3)``, ``triangle``, ``triangle(3)``."""
    text = name.strip().lower()
    arg = None
    if text.endswith(")") and "(" in text:
        text, arg = text[:-1].split("(", 1)
        text, arg = text.strip(), arg.strip()
    if text not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(_PRESETS)}")
    try:
        return _PRESETS[text]() if arg is None else _PRESETS[text](arg)
    except TypeError as exc:
        raise ConfigError(f"bad argument for preset {name!r}") from exc


def parse_measure(spec, refs: dict | None = None):
    """Build a measure from a JSON-style description.

    Accepted forms: a preset string, a name from ``refs``, or a dict with
    ``kind`` in ``ifs``, ``atomic``, ``convolve``, ``power``, ``circle``
    (alias ``torus``), ``preset``.
    """
    refs = refs or {}
    if isinstance(spec, (IfsMeasure, AtomicMeasure, Convolution, Power, Circle)):
        return spec
    if isinstance(spec, str):
        if spec in refs:
            return parse_measure(refs[spec], {k: v for k, v in refs.items() if k != spec})
        return preset(spec)
    if not isinstance(spec, dict):
        raise ConfigError(f"cannot read a measure from {spec!r}")
    kind = spec.get("kind")
    try:
        if kind == "ifs":
            return make_ifs(spec["base"], [tuple(b) for b in spec["branches"]],
                            spec.get("normalize", spec.get("normalization")))
        if kind == "atomic":
            return make_atomic([tuple(a) for a in spec["atoms"]])
        if kind == "convolve":
            return Convolution(tuple(parse_measure(f, refs) for f in spec["of"]))
        if kind == "power":
            return Power(parse_measure(spec["of"], refs), int(spec["k"]))
        if kind in ("circle", "torus"):
            return Circle(parse_measure(spec["of"], refs))
        if kind == "preset":
            return preset(spec["name"])
    except KeyError as exc:
        raise ConfigError(f"measure of kind {kind!r} is missing field {exc}") from exc
    raise ConfigError(f"unknown measure kind {kind!r}")


def load_measure(ref):
    """``parse_measure`` on a preset, a JSON string, or a path to a JSON file."""
    if isinstance(ref, str):
        text = ref.strip()
        if text.startswith("{"):
            return parse_measure(json.loads(text))
        path = Path(ref)
        if path.suffix == ".json" or path.is_file():
            try:
                return parse_measure(json.loads(path.read_text()))
            except OSError as exc:
                raise ConfigError(f"cannot read {ref}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{ref} is not valid JSON: {exc}") from exc
    return parse_measure(ref)
