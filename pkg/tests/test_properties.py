"""Randomized invariants over lattice IFS measures (base 2, 3 or 5, at most
four branches)."""

from fractions import Fraction as F

import numpy as np
from hypothesis import given, settings, strategies as st

from dimlab.cascade import ball_mass, coarsen, refine
from dimlab.convolve import convolve
from dimlab.measures import make_ifs

CASES = settings(max_examples=200, deadline=None)


@st.composite
def ifs(draw, max_level=4):
    base = draw(st.sampled_from([2, 3, 5]))
    k = draw(st.integers(1, min(4, base)))
    digits = draw(st.lists(st.integers(0, base - 1), min_size=k, max_size=k, unique=True))
    weights = draw(st.lists(st.integers(1, 9), min_size=k, max_size=k))
    total = sum(weights)
    mu = make_ifs(base, [(d, F(w, total)) for d, w in zip(digits, weights)])
    level = draw(st.integers(1, 5 if base == 2 else max_level - (base == 5)))
    return mu, level


@st.composite
def ifs_pair(draw):
    mu, level = draw(ifs(max_level=3))
    base = mu.base
    k = draw(st.integers(1, min(4, base)))
    digits = draw(st.lists(st.integers(0, base - 1), min_size=k, max_size=k, unique=True))
    weights = draw(st.lists(st.integers(1, 9), min_size=k, max_size=k))
    nu = make_ifs(base, [(d, F(w, sum(weights))) for d, w in zip(digits, weights)])
    return mu, nu, level


def _point(draw, v):
    lo, hi = v.extent
    t = draw(st.fractions(min_value=-F(1, 4), max_value=F(5, 4), max_denominator=200))
    return lo + (hi - lo) * t


@CASES
@given(ifs())
def test_mass_conservation(case):
    mu, level = case
    assert refine(mu, level, exact=True).total == 1
    assert abs(float(np.sum(refine(mu, level).masses)) - 1) <= 1e-13


@CASES
@given(ifs_pair())
def test_convolution_conserves_mass(case):
    mu, nu, level = case
    c = convolve(refine(mu, level, exact=True), refine(nu, level, exact=True))
    assert c.total == 1
    cf = convolve(refine(mu, level), refine(nu, level))
    assert abs(cf.total - 1) <= 1e-12


@CASES
@given(ifs())
def test_level_consistency(case):
    mu, level = case
    assert list(coarsen(refine(mu, level + 1, exact=True)).masses) == \
        list(refine(mu, level, exact=True).masses)


@CASES
@given(ifs(), st.data())
def test_bracket_monotone_in_radius(case, data):
    mu, level = case
    v = refine(mu, level, exact=True)
    x = _point(data.draw, v)
    r1 = data.draw(st.fractions(min_value=F(1, 500), max_value=2, max_denominator=500))
    r2 = r1 + data.draw(st.fractions(min_value=0, max_value=1, max_denominator=500))
    a, b = ball_mass(v, x, r1), ball_mass(v, x, r2)
    assert a.lower <= a.upper and b.lower <= b.upper
    assert a.lower <= b.lower and a.upper <= b.upper


@CASES
@given(ifs_pair())
def test_commutativity_exact(case):
    mu, nu, level = case
    a, b = refine(mu, level, exact=True), refine(nu, level, exact=True)
    ab, ba = convolve(a, b), convolve(b, a)
    assert ab.offset == ba.offset and ab.smear == ba.smear
    assert list(ab.masses) == list(ba.masses)


@CASES
@given(ifs_pair(), st.data())
def test_smear_nesting_across_levels(case, data):
    """The level-n bracket of a convolution contains the level-(n+1) bracket."""
    mu, nu, level = case
    coarse = convolve(refine(mu, level, exact=True), refine(nu, level, exact=True))
    fine = convolve(refine(mu, level + 1, exact=True), refine(nu, level + 1, exact=True))
    x = _point(data.draw, coarse)
    r = data.draw(st.fractions(min_value=F(1, 200), max_value=2, max_denominator=300))
    c, f = ball_mass(coarse, x, r), ball_mass(fine, x, r)
    assert c.lower <= f.lower <= f.upper <= c.upper
    # the outer support approximation shrinks with the level
    for a, b in fine.support().intervals:
        assert any(p <= a and b <= q for p, q in coarse.support().intervals)
