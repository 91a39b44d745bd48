"""Independent brute-force reference computations used by the tests.

Nothing here imports the cascade or convolution code: cylinder cells are
enumerated word by word with exact rationals and convolution spans are
formed pair by pair.
"""

from fractions import Fraction
from itertools import product


def ifs_cells(base, branches, level, scale=Fraction(1), shift=Fraction(0)):
    """(left, width, mass) of every level-``level`` cylinder, exact."""
    h = Fraction(1, base ** level)
    out = []
    for word in product(branches, repeat=level):
        pos, mass = Fraction(0), Fraction(1)
        for k, (d, p) in enumerate(word, start=1):
            pos += Fraction(d, base ** k)
            mass *= Fraction(p)
        out.append((scale * pos + shift, scale * h, mass))
    return out


def atom_cells(atoms):
    return [(Fraction(x), Fraction(0), Fraction(w)) for x, w in atoms]


def conv_spans(a, b):
    """Pushforward of the product of two cell lists under addition:
    {(left, width): mass}."""
    spans = {}
    for (xa, wa, ma) in a:
        for (xb, wb, mb) in b:
            key = (xa + xb, wa + wb)
            spans[key] = spans.get(key, Fraction(0)) + ma * mb
    return spans


def as_spans(cells):
    spans = {}
    for x, w, m in cells:
        spans[(x, w)] = spans.get((x, w), Fraction(0)) + m
    return spans


def ball_bracket(spans, z, r):
    """Exact bracket of the open/closed ball mass: spans whose closed extent
    sits inside (z - r, z + r), and spans meeting [z - r, z + r].

    A zero-width span is a point; a positive-width span [x, x + w) holds its
    mass anywhere in the half-open interval, and meets the closed ball when
    x <= z + r and x + w > z - r.
    """
    z, r = Fraction(z), Fraction(r)
    lo = hi = Fraction(0)
    for (x, w), m in spans.items():
        if w == 0:
            inside = z - r < x < z + r
            meets = z - r <= x <= z + r
        else:
            inside = x > z - r and x + w <= z + r
            meets = x <= z + r and x + w > z - r
        if inside:
            lo += m
        if meets:
            hi += m
    return lo, hi


def circle_bracket(spans, z, r):
    """Bracket on R/Z by summing over the integer translates of the ball."""
    z, r = Fraction(z), Fraction(r)
    if r > Fraction(1, 2):
        total = sum(spans.values(), Fraction(0))
        return total, total
    xs = [x for x, _ in spans]
    k_lo = int((min(xs) - z - r) // 1) - 1
    k_hi = int((max(x + w for x, w in spans) - z + r) // 1) + 1
    lo = hi = Fraction(0)
    for k in range(k_lo, k_hi + 1):
        a, b = ball_bracket(spans, z + k, r)
        lo += a
        hi += b
    return lo, hi
