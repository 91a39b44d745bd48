"""Cell masses from the cascade and rigorous ball-mass brackets."""

from fractions import Fraction

from dimlab import ball_mass, cantor, coarsen, lebesgue, refine

v = refine(cantor(), 2, exact=True)
print("Cantor level-2 cells:", [str(m) for m in v.masses])
print("coarsening gives level 1 back:", [str(m) for m in coarsen(v).masses])

w = refine(cantor(), 12, exact=True)
print("\nmu(B(0, 3^-j)) = 2^-j, bracketed exactly:")
for j in (1, 4, 8):
    b = ball_mass(w, 0, Fraction(1, 3 ** j))
    print(f"  j={j}: [{b.lower}, {b.upper}]")

f = refine(lebesgue(), 16)
b = ball_mass(f, Fraction(1, 3), Fraction(1, 10))
print(f"\nfloat mode, Lebesgue B(1/3, 1/10): [{b.lower!r}, {b.upper!r}] (true 1/5)")
