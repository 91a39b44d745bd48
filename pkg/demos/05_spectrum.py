"""Multifractal spectrum and the range of local dimensions."""

from fractions import Fraction

from dimlab import bernoulli, beta, dim_range, entropy_dim, example33, legendre_spectrum

mu = example33()
for q in (-2, 0, 1, 2):
    print(f"beta({q:+d}) = {beta(mu, q): .6f}")
curve = legendre_spectrum(mu)
print("alpha range on q in [-10, 10]:", curve.alpha_range)
print("exact local-dimension range:   ", dim_range(mu))
print("peak of f(alpha):", curve.f_max)

for p in ("1/2", "1/3", "1/4"):
    print(f"Bernoulli({p}): entropy dimension {entropy_dim(Fraction(p)):.4f}, "
          f"local-dimension range {dim_range(bernoulli(p))}")
