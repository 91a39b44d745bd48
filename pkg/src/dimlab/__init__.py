"""Local dimensions of lattice self-similar measures, atomic measures and
their convolutions on the line and on the circle.

Typical use::

    from dimlab import cantor, refine, convolve, dim_profile
    v = refine(cantor(), 14)
    p = dim_profile(convolve(v, v), 0, 3, 12)
    p.slope_est  # about 2 log 2 / log 3
"""

from .measures import (
    Affine, AtomicMeasure, Circle, ConfigError, Convolution, Gap, IfsMeasure, MeasureError,
    Power, SupportSet, bernoulli, cantor, example33, gaps, lebesgue, load_measure, make_atomic,
    make_ifs, max_gap, parse_measure, preset, support, triangle,
)
from .cascade import (
    BallMassBracket, MassVector, ball_mass, coarsen, read_csv, refine, refine_atomic, to_circle,
    write_csv,
)
from .convolve import convolve, convolve_cyclic, convolve_power, realize
from .locdim import (
    DimProfile, DimValue, LevelRecord, corner_dim, decomposition_bound, dim_at_atom,
    dim_at_left_endpoint, dim_at_right_endpoint, dim_profile, gap_point_dim, profile_grid,
    unique_pair_dim,
)
from .spectrum import SpectrumCurve, beta, beta_closed_form, dim_range, entropy_dim, legendre_spectrum
from .verify import (
    CheckReport, Scenario, check_gap_point, check_interior_bound, check_isolated_point,
    check_lower_bound, check_torus_power, check_unique_pair, load_suite, run_suite,
)

__version__ = "0.1.0"
