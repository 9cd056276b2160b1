"""Goal-progression checks and the one-dimensional obstacle value analysis.

The restricted value ``vx(x) = x^2 + c / ((x - 1)^2 + d^2)`` is the negated,
rescaled value along the line from a goal at the origin towards two
obstacles at ``(1, +d)`` and ``(1, -d)``, with ``c`` the repeller/attractor
weight ratio.  Its minima are the places a greedy agent can settle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .features import Preference, values

__all__ = [
    "RestrictedValueParams",
    "vx",
    "vx_derivative",
    "vx_second_derivative",
    "critical_points",
    "satisfies_minimum_conditions",
    "StabilityReport",
    "check_attractor_stability",
    "orthogonal_second_difference",
    "is_monotone",
]


@dataclass(frozen=True)
class RestrictedValueParams:
    c: float
    d: float

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("c must be non-negative")
        if self.d < 0:
            raise ValueError("d must be non-negative")


def _params(params, d=None) -> RestrictedValueParams:
    if isinstance(params, RestrictedValueParams):
        return params
    if d is not None:
        return RestrictedValueParams(float(params), float(d))
    c, d = params
    return RestrictedValueParams(float(c), float(d))


def vx(x, params, d=None):
    """``x^2 + c / ((x - 1)^2 + d^2)``; accepts ``(c, d)`` or ``vx(x, c, d)``."""
    p = _params(params, d)
    x = np.asarray(x, dtype=float)
    return x * x + p.c / ((x - 1.0) ** 2 + p.d**2)


def vx_derivative(x, params, d=None):
    p = _params(params, d)
    x = np.asarray(x, dtype=float)
    q = (x - 1.0) ** 2 + p.d**2
    return 2.0 * x - 2.0 * p.c * (x - 1.0) / q**2


def vx_second_derivative(x, params, d=None):
    p = _params(params, d)
    x = np.asarray(x, dtype=float)
    q = (x - 1.0) ** 2 + p.d**2
    return 2.0 - 2.0 * p.c * (q - 4.0 * (x - 1.0) ** 2) / q**3


def _numerator(x, p: RestrictedValueParams):
    # x q^2 - c (x - 1): same sign as the derivative, and free of poles
    q = (x - 1.0) ** 2 + p.d**2
    return x * q * q - p.c * (x - 1.0)


def critical_points(params, search_interval=(-10.0, 10.0), n_grid: int = 10_000,
                    xtol: float = 1e-10, flat_tol: float = 1e-8) -> list[tuple[float, str]]:
    """Critical points of ``vx`` in ``search_interval``, each labelled min/max/inflection.

    Sign changes of the degree-5 derivative numerator on an ``n_grid`` point
    grid are refined with Brent's method; a point where the second derivative
    is within ``flat_tol`` of zero is labelled ``'inflection'``.
    """
    p = _params(params)
    lo, hi = map(float, search_interval)
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError("search_interval must be a bounded interval")
    xs = np.linspace(lo, hi, n_grid)
    f = _numerator(xs, p)
    roots = []
    exact = np.flatnonzero(f == 0.0)
    roots.extend(xs[exact])
    sign = np.sign(f)
    idx = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    for i in idx:
        roots.append(brentq(_numerator, xs[i], xs[i + 1], args=(p,), xtol=xtol, rtol=4 * np.finfo(float).eps))
    out = []
    for r in sorted(roots):
        if p.d == 0 and abs(r - 1.0) < 1e-9:
            continue  # the pole of vx, not a critical point
        curv = float(vx_second_derivative(r, p))
        kind = "inflection" if abs(curv) < flat_tol else ("min" if curv > 0 else "max")
        out.append((float(r), kind))
    return out


def satisfies_minimum_conditions(x0: float, d: float) -> bool:
    """Necessary location conditions for a minimum: outside [-1, 0] and beyond ``d`` from 1."""
    return (x0 < -1 or x0 > 0) and abs(x0 - 1) > abs(d)


@dataclass
class StabilityReport:
    holds: bool
    reason: str = ""
    offending_index: int | None = None
    uncovered: list = field(default_factory=list)

    def __bool__(self):
        return self.holds


def check_attractor_stability(theta, prefs: Sequence[Preference], n_state: int) -> StabilityReport:
    """Sufficient conditions for monotone progression of an attractor-only task.

    Holds when every weight is negative and the attractors together read
    every state coordinate (relations count both sides), so ``V`` is a
    negative-definite quadratic around the goal set.
    """
    theta = np.asarray(theta, dtype=float)
    if any(not p.is_attractor for p in prefs):
        raise ValueError("stability check is defined for attractor-only preference sets")
    if theta.shape != (len(prefs),):
        raise ValueError(f"weight vector has length {theta.size}, expected {len(prefs)}")
    bad = np.flatnonzero(~(theta < 0))
    if bad.size:
        i = int(bad[0])
        return StabilityReport(False, f"weight {i} ({prefs[i].name or 'unnamed'}) is {theta[i]:g}, not negative", i)
    covered = set()
    for p in prefs:
        covered.update(int(i) for i in p.coordinates() if i < n_state)
    missing = sorted(set(range(n_state)) - covered)
    if missing:
        return StabilityReport(False, f"state coordinates {missing} are not covered by any attractor",
                               uncovered=missing)
    return StabilityReport(True, "all weights negative and attractors span the state")


def orthogonal_second_difference(theta, prefs, point, direction, refs=None, h: float = 1e-3) -> float:
    """Central second difference of ``V`` at ``point`` along ``direction``."""
    point = np.asarray(point, float)
    e = np.asarray(direction, float)
    e = e / np.linalg.norm(e)
    S = np.stack([point - h * e, point, point + h * e])
    v = values(S, theta, prefs, refs)
    return float((v[0] - 2 * v[1] + v[2]) / h**2)


def is_monotone(v, tol: float = 1e-9) -> bool:
    """True when ``v`` never decreases by more than ``tol``."""
    v = np.asarray(v, float)
    return bool(np.all(np.diff(v) >= -tol))
