"""Convolution of mass vectors on the line and on the circle R/Z.

Cell ``i`` of ``a`` (span width ``w_a``) plus cell ``j`` of ``b`` (width
``w_b``) lands in entry ``i + j`` of the result with width ``w_a + w_b``.
So a plain discrete convolution of the mass arrays, together with that
width update, is a sound pushforward of the product measure.

The arithmetic path is picked per call:

* rational vectors: exact integer convolution (Kronecker substitution);
* one side atomic with few atoms: shift-and-add;
* one side constant (Lebesgue-type): sliding-window sums;
* both short: direct summation;
* otherwise: real FFT with an a-priori error bound and an exact
  occupancy mask, so true zeros stay zero.
"""

from __future__ import annotations

import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import scipy.fft

from .cascade import U, MassVector, refine, refine_atomic, to_circle
from .measures import AtomicMeasure, Circle, Convolution, IfsMeasure, MeasureError, Power

__all__ = [
    "ConvolutionError", "BaseMismatch", "LevelMismatch", "SpanMismatch",
    "convolve", "convolve_power", "convolve_cyclic", "realize", "infer_base",
    "DIRECT_MAX", "fft_convolve", "direct_convolve",
]

DIRECT_MAX = 4096
SHIFT_ADD_MAX_ATOMS = 64
FFT_ERR_CONST = 10.0
TINY = np.finfo(float).tiny


class ConvolutionError(MeasureError):
    pass


class BaseMismatch(ConvolutionError):
    pass


class LevelMismatch(ConvolutionError):
    pass


class SpanMismatch(ConvolutionError):
    pass


def _check(a: MassVector, b: MassVector):
    if a.base != b.base:
        raise BaseMismatch(f"bases differ: {a.base} vs {b.base}")
    if a.level != b.level:
        raise LevelMismatch(f"levels differ: {a.level} vs {b.level}")
    if a.exact != b.exact:
        raise ConvolutionError("cannot mix rational and float vectors")


# -- arithmetic kernels ------------------------------------------------------

def _exact_linear(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact convolution of nonnegative Fraction arrays by packing them into
    big integers and multiplying once."""
    dx = math.lcm(*[f.denominator for f in x.tolist()])
    dy = math.lcm(*[f.denominator for f in y.tolist()])
    nx = [int(f * dx) for f in x.tolist()]
    ny = [int(f * dy) for f in y.tolist()]
    bits = max(nx).bit_length() + max(ny).bit_length() + min(len(nx), len(ny)).bit_length() + 1
    nbytes = -(-bits // 8)
    X = int.from_bytes(b"".join(v.to_bytes(nbytes, "little") for v in nx), "little")
    Y = int.from_bytes(b"".join(v.to_bytes(nbytes, "little") for v in ny), "little")
    L = len(nx) + len(ny) - 1
    raw = (X * Y).to_bytes(L * nbytes, "little")
    den = dx * dy
    out = np.empty(L, dtype=object)
    for k in range(L):
        out[k] = Fraction(int.from_bytes(raw[k * nbytes:(k + 1) * nbytes], "little"), den)
    return out


def direct_convolve(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.convolve(x, y)


def fft_convolve(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Linear convolution through a zero-padded real FFT."""
    L = len(x) + len(y) - 1
    n = scipy.fft.next_fast_len(L, real=True)
    X = scipy.fft.rfft(x, n)
    X *= scipy.fft.rfft(y, n)
    return scipy.fft.irfft(X, n)[:L]


def _fft_error(x: np.ndarray, y: np.ndarray, c: np.ndarray) -> float:
    # a-priori bound on ||fft_conv - conv||_inf for a forward/backward FFT pair
    n = scipy.fft.next_fast_len(len(x) + len(y) - 1, real=True)
    nx, ny = float(np.linalg.norm(x)), float(np.linalg.norm(y))
    sx, sy = float(np.sum(x)), float(np.sum(y))
    return FFT_ERR_CONST * U * math.log2(n) * (nx * sy + sx * ny + float(np.linalg.norm(c)))


def _fft_path(x, y):
    c = fft_convolve(x, y)
    err = _fft_error(x, y, c)
    if np.all(x > 0) and np.all(y > 0):
        occ = np.ones(len(c), dtype=bool)
    else:
        counts = fft_convolve((x > 0).astype(float), (y > 0).astype(float))
        occ = counts > 0.5
    c[~occ] = 0.0
    np.maximum(c, TINY, out=c, where=occ)
    return c, err


def _box_path(flat_value: float, La: int, y: np.ndarray, chunk: int = 1 << 22):
    """Convolution with a constant run of length ``La``: windowed sums of a
    long-double prefix sum, evaluated in chunks to bound scratch memory."""
    Lb = len(y)
    L = La + Lb - 1
    P = np.empty(Lb + 1, dtype=np.longdouble)
    P[0] = 0
    np.cumsum(y, dtype=np.longdouble, out=P[1:])
    ind = np.empty(Lb + 1, dtype=np.int64)
    ind[0] = 0
    np.cumsum(y > 0, out=ind[1:])
    c = np.empty(L)
    for start in range(0, L, chunk):
        k = np.arange(start, min(start + chunk, L))
        hi = np.minimum(k, Lb - 1) + 1
        lo = np.maximum(k - La + 1, 0)
        block = ((P[hi] - P[lo]) * flat_value).astype(float)
        occ = (ind[hi] - ind[lo]) > 0
        block[~occ] = 0.0
        np.maximum(block, TINY, out=block, where=occ)
        c[start:start + len(k)] = block
    del P, ind
    ld_u = float(np.finfo(np.longdouble).eps) / 2
    abs_err = 2 * Lb * ld_u * float(np.sum(y)) * flat_value * (1 + 4 * U)
    return c, abs_err


def _shift_add(atoms: np.ndarray, y: np.ndarray):
    idx = np.flatnonzero(atoms)
    L = len(atoms) + len(y) - 1
    c = np.zeros(L)
    for j in idx.tolist():
        c[j:j + len(y)] += atoms[j] * y
    return c, len(idx)


def _float_linear(a: MassVector, b: MassVector):
    """Float convolution of the mass arrays; returns (masses, rel, abs)."""
    x, y = a.masses, b.masses
    rel = a.rel_err + b.rel_err + a.rel_err * b.rel_err
    abs_in = (a.abs_err * max(b.total, 0.0) * (1 + b.rel_err)
              + b.abs_err * max(a.total, 0.0) * (1 + a.rel_err)
              + a.abs_err * b.abs_err * min(len(x), len(y)))
    na, nb = np.count_nonzero(x), np.count_nonzero(y)
    if min(na, nb) <= SHIFT_ADD_MAX_ATOMS and (a.atomic or b.atomic or min(na, nb) <= 4):
        atoms, other = (x, y) if na <= nb else (y, x)
        c, k = _shift_add(atoms, other)
        return c, rel + (k + 1) * U, abs_in
    for flat, other in ((x, y), (y, x)):
        if len(flat) > 1 and flat[0] > 0 and np.all(flat == flat[0]):
            c, box_abs = _box_path(float(flat[0]), len(flat), other)
            return c, rel + 4 * U, abs_in + box_abs
    if len(x) < DIRECT_MAX and len(y) < DIRECT_MAX:
        c = direct_convolve(x, y)
        return c, rel + (min(len(x), len(y)) + 1) * U, abs_in
    c, err = _fft_path(x, y)
    return c, rel, abs_in + err * (1 + rel)


# -- public operations -------------------------------------------------------

def _result_flags(a: MassVector, b: MassVector) -> dict:
    w = a.width + b.width
    return dict(smear=max(w - 1, 0), atomic=(w == 0))


def convolve(a: MassVector, b: MassVector) -> MassVector:
    """Line convolution ``a * b``.

    The result has offset ``offset(a) + offset(b)``, length
    ``len(a) + len(b) - 1`` and span width ``width(a) + width(b)``, i.e.
    ``smear(a) + smear(b) + 1`` unless a factor is atomic, in which case the
    other factor's cells are shifted without any extra smear.
    """
    _check(a, b)
    if a.cyclic or b.cyclic:
        if a.cyclic and b.cyclic:
            return convolve_cyclic(a, b)
        raise SpanMismatch("cannot convolve a circle vector with a line vector")
    flags = _result_flags(a, b)
    if a.exact:
        masses = _exact_linear(a.masses, b.masses)
        return MassVector(a.base, a.level, a.offset + b.offset, masses, **flags)
    masses, rel, abs_err = _float_linear(a, b)
    return MassVector(a.base, a.level, a.offset + b.offset, masses, rel_err=rel,
                      abs_err=abs_err, **flags)


def convolve_cyclic(a: MassVector, b: MassVector) -> MassVector:
    """Convolution on R/Z: indices are reduced mod ``base**level`` and
    wrapped mass accumulates."""
    _check(a, b)
    L = a.base ** a.level
    for v in (a, b):
        if not v.cyclic and (v.offset != 0 or len(v) != L):
            raise SpanMismatch("circle convolution needs span-1 vectors at offset 0")
    flags = _result_flags(a, b)
    if a.exact:
        lin = _exact_linear(a.masses, b.masses)
        out = lin[:L].copy()
        out[:L - 1] += lin[L:]
        return MassVector(a.base, a.level, Fraction(0), out, cyclic=True, **flags)
    lin, rel, abs_err = _float_linear(a, b)
    out = lin[:L].copy()
    out[:L - 1] += lin[L:]
    return MassVector(a.base, a.level, Fraction(0), out, cyclic=True, rel_err=rel + U,
                      abs_err=2 * abs_err, **flags)


def convolve_power(a: MassVector, k: int) -> MassVector:
    """``a`` convolved with itself ``k`` times (``k = 1`` returns ``a``)."""
    if int(k) != k or k < 1:
        raise ValueError("power k must be an integer >= 1")
    out = a
    for _ in range(int(k) - 1):
        out = convolve(out, a)
    return out


def infer_base(measure):
    """Common base of the IFS factors in a measure expression (None if the
    expression is purely atomic)."""
    if isinstance(measure, IfsMeasure):
        return measure.base
    if isinstance(measure, AtomicMeasure):
        return None
    if isinstance(measure, (Power, Circle)):
        return infer_base(measure.of)
    if isinstance(measure, Convolution):
        bases = {b for b in (infer_base(f) for f in measure.factors) if b is not None}
        if len(bases) > 1:
            raise BaseMismatch(f"factors use different bases {sorted(bases)}")
        return bases.pop() if bases else None
    raise TypeError(f"not a measure: {measure!r}")


def realize(measure, level: int, base: int | None = None, exact: bool = False) -> MassVector:
    """Mass vector of any measure expression at lattice ``level``."""
    if isinstance(measure, MassVector):
        return measure
    b = infer_base(measure)
    if base is not None and b is not None and base != b:
        raise BaseMismatch(f"requested base {base} but measure uses base {b}")
    base = base or b
    if isinstance(measure, IfsMeasure):
        return refine(measure, level, exact=exact)
    if isinstance(measure, AtomicMeasure):
        if base is None:
            raise ConvolutionError("an atomic measure needs an explicit base")
        return refine_atomic(measure, base, level, exact=exact)
    if isinstance(measure, Power):
        return convolve_power(realize(measure.of, level, base, exact), measure.k)
    if isinstance(measure, Circle):
        return to_circle(realize(measure.of, level, base, exact))
    if isinstance(measure, Convolution):
        vecs = [realize(f, level, base, exact) for f in measure.factors]
        # atoms first keeps every step on the cheap shift-and-add path
        vecs.sort(key=lambda v: (not v.atomic, len(v)))
        out = vecs[0]
        for v in vecs[1:]:
            out = convolve(out, v)
        return out
    raise TypeError(f"not a measure: {measure!r}")


def with_masses(v: MassVector, masses) -> MassVector:
    return replace(v, masses=np.asarray(masses), _cache={})
