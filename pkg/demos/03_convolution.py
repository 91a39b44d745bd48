"""Convolve mass vectors on the line and on the circle."""

from fractions import Fraction

from dimlab import (
    ball_mass, cantor, convolve, convolve_cyclic, convolve_power, lebesgue, refine, to_circle,
)

a = refine(lebesgue(), 4, exact=True)
tri = convolve(a, a)
print("Lebesgue * Lebesgue at level 4: triangle weights x 256 =",
      [int(m * 256) for m in tri.masses])
print("span width of the result:", tri.width, "cells")

c = refine(cantor(), 13)
c2 = convolve_power(c, 2)
print("\nCantor^2 at level 13:", c2, "support", [tuple(map(str, iv)) for iv in c2.support().intervals])
for j in (3, 6, 9):
    b = ball_mass(c2, 0, Fraction(1, 3 ** j))
    print(f"  B(0, 3^-{j}) in [{b.lower:.3e}, {b.upper:.3e}]; ratio to 4^-{j}: "
          f"[{b.lower * 4 ** j:.3f}, {b.upper * 4 ** j:.3f}]")

t = to_circle(refine(cantor(), 8))
v = t
for k in range(2, 5):
    v = convolve_cyclic(v, t)
    print(f"circle Cantor^{k}: {v.occupancy():.3f} of the cells carry mass")
