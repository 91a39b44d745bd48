"""Build self-similar and atomic measures and inspect their supports."""

from fractions import Fraction

from dimlab import cantor, example33, gaps, load_measure, make_atomic, make_ifs, max_gap, support

mu = cantor()
print("Cantor generator:", mu)
for n in range(4):
    s = support(mu, n)
    print(f"  level {n}: {len(s.intervals)} intervals, largest gap {max_gap(s)}")

def show(intervals):
    return " U ".join(f"[{a}, {b}]" for a, b in intervals)


print("\nexample33 weights", [str(p) for p in example33().probs],
      "-> support", show(support(example33(), 5).intervals))

nu = make_atomic([(0, 1), (2, 1)])
print("\ndelta_0 + delta_2 has total mass", nu.total_mass, "and gaps",
      [(str(g.left), str(g.right)) for g in gaps(support(nu))])

# normalized attractors and JSON configs
wide = make_ifs(3, [(0, "1/2"), (2, "1/2")], {"scale": 3, "shift": -1})
print("\nCantor stretched to [-1, 2]: hull", show([wide.hull]))
cfg = '{"kind": "convolve", "of": ["cantor", {"kind": "power", "of": "cantor", "k": 2}]}'
three = load_measure(cfg)
print("three-fold Cantor from JSON: support at level 4 =", show(support(three, 4).intervals),
      "hull length", Fraction(three.hull[1]) - Fraction(three.hull[0]))
