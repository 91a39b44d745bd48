"""Local dimension profiles, endpoint formulas and the unique-pair sandwich."""

import math
from fractions import Fraction

from dimlab import (
    cantor, convolve, corner_dim, dim_at_left_endpoint, dim_profile, example33, refine,
    unique_pair_dim,
)

print("log2/log3 =", math.log(2) / math.log(3))
p = dim_profile(refine(cantor(), 12, exact=True), 0, 1, 12)
print("Cantor at 0:", p)

v = refine(cantor(), 13)
c = convolve(v, v)
q = dim_profile(c, 0, 2, 11)
print("Cantor*Cantor at 0:", q)
print("corner formula:", corner_dim(dim_at_left_endpoint(cantor()), dim_at_left_endpoint(cantor())).value)
pair = unique_pair_dim(dim_profile(v, 0, 2, 11), dim_profile(v, 0, 2, 11))
print("sandwich from the factors:", pair)

e = refine(example33(), 13)
ee = convolve(e, e)
print("\nexample33 squared at z=1:", dim_profile(ee, 1, 2, 11))
print("bound at z=1:", math.log(4 / 125) / math.log(1 / 27))
print("per-level table at z=1/2 (n, r, lower, upper, d_lower, d_upper):")
for row in dim_profile(ee, Fraction(1, 2), 7, 11).rows():
    print("  ", "  ".join(f"{x:.5g}" for x in row))
