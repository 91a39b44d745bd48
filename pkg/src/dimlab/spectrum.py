"""Multifractal spectrum of an equal-ratio self-similar measure.

``beta(q)`` solves ``sum_i p_i**q * m**-beta = 1``.  With equal ratios the
root is ``ln(sum p_i**q) / ln m`` in closed form; the bisection solver
is kept as the primary path and cross-checked against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import IfsMeasure, MeasureError

__all__ = [
    "DomainError", "DegenerateWeights", "SpectrumCurve",
    "beta", "beta_closed_form", "legendre_spectrum", "dim_range", "entropy_dim",
]

PHI_TOL = 1e-13


class DomainError(ValueError):
    pass


class DegenerateWeights(MeasureError):
    pass


def _weights(mu: IfsMeasure) -> np.ndarray:
    p = np.array([float(x) for x in mu.probs])
    if np.any(p <= 0):
        raise DegenerateWeights("all branch probabilities must be positive")
    return p


def beta_closed_form(mu: IfsMeasure, q: float) -> float:
    p = _weights(mu)
    return math.log(float(np.sum(p ** q))) / math.log(mu.base)


def beta(mu: IfsMeasure, q: float, max_iter: int = 400) -> float:
    """Root of ``phi(b) = sum p_i**q * m**-b - 1`` by bisection.

    ``phi`` is strictly decreasing in ``b``; the bracket starts at
    ``[-1, 1]`` and doubles until it changes sign.
    """
    p = _weights(mu)
    logs = np.log(p)
    lm = math.log(mu.base)

    def phi(b):
        # sum exp(q log p - b log m) - 1 without overflow for |q| large
        e = q * logs - b * lm
        top = float(np.max(e))
        return math.exp(top) * float(np.sum(np.exp(e - top))) - 1.0

    lo, hi = -1.0, 1.0
    while phi(lo) < 0:
        lo *= 2
    while phi(hi) > 0:
        hi *= 2
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        v = phi(mid)
        if abs(v) < PHI_TOL or mid in (lo, hi):
            break
        if v > 0:
            lo = mid
        else:
            hi = mid
    return mid


@dataclass(frozen=True)
class SpectrumCurve:
    q_grid: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray
    f_alpha: np.ndarray

    @property
    def alpha_range(self) -> tuple:
        return float(np.min(self.alpha)), float(np.max(self.alpha))

    @property
    def f_max(self) -> float:
        return float(np.max(self.f_alpha))

    def rows(self):
        return zip(self.q_grid.tolist(), self.beta.tolist(), self.alpha.tolist(),
                   self.f_alpha.tolist())


def legendre_spectrum(mu: IfsMeasure, q_min: float = -10.0, q_max: float = 10.0,
                      steps: int = 401) -> SpectrumCurve:
    """``beta`` on a uniform q-grid, ``alpha = -d beta/dq`` by central
    differences (one-sided at the ends) and ``f = alpha q + beta``."""
    if steps < 3:
        raise ValueError("steps must be >= 3")
    if not q_min < q_max:
        raise ValueError("q_min must be < q_max")
    q = np.linspace(q_min, q_max, steps)
    b = np.array([beta(mu, float(x)) for x in q])
    alpha = -np.gradient(b, q)
    return SpectrumCurve(q, b, alpha, alpha * q + b)


def dim_range(mu: IfsMeasure) -> tuple:
    """Closed interval of local dimensions: extreme values of
    ``log p_i / log(1/m)``.  Distinct digits give disjoint first-level
    cells, so the separation the formalism needs always holds here."""
    p = _weights(mu)
    d = np.log(p) / math.log(1 / mu.base)
    return float(np.min(d)), float(np.max(d))


def entropy_dim(p) -> float:
    """``-(p log p + (1-p) log(1-p)) / log 2`` for ``0 < p < 1``."""
    p = float(p)
    if not 0 < p < 1:
        raise DomainError(f"p={p} outside (0, 1)")
    if p == 0.5:
        return 1.0
    return -(p * math.log(p) + (1 - p) * math.log1p(-p)) / math.log(2)
