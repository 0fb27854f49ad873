"""Admissible-angle intervals and the four-term nonnegative splitting.

The divergence-form operator div(D grad u) is rewritten as

    dx(g0 ux) + d_b1(g1p u_b1) + d_b2(g1m u_b2) + dy(g2 uy)

where d_b is the second directional derivative operator along the angle b.
With tan(beta1) strictly between sup(b/a) and inf(c/b) over the b>0 part of a
region, and tan(beta2) strictly between sup(c/b) and inf(b/a) over the b<0
part, all four coefficients are nonnegative throughout the region.  Points
with b = 0 fall to the beta1 branch, which is continuous across the seam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PlanError
from .field import DiffusionField

__all__ = [
    "AngleIntervals",
    "NonnegReport",
    "angle_intervals",
    "intervals_from_samples",
    "split_values",
    "split_values_arrays",
    "split_coefficients",
    "verify_nonnegative",
    "GAMMA_TOLERANCE",
]

# Round-off allowance on coefficient nonnegativity checks.
GAMMA_TOLERANCE = -1e-12


@dataclass(frozen=True)
class AngleIntervals:
    """Open admissible slope intervals (a_sup, b_inf) and (c_sup, d_inf).

    ``a_sup``/``b_inf`` bound tan(beta1) via the b>0 part of the region,
    ``c_sup``/``d_inf`` bound tan(beta2) via the b<0 part.  Empty parts are
    flagged and impose no constraint.
    """

    a_sup: float
    b_inf: float
    c_sup: float
    d_inf: float
    plus_empty: bool
    minus_empty: bool

    def merged(self, other: "AngleIntervals") -> "AngleIntervals":
        """Intervals over the union of the two sample regions."""
        return AngleIntervals(
            a_sup=max(self.a_sup, other.a_sup),
            b_inf=min(self.b_inf, other.b_inf),
            c_sup=max(self.c_sup, other.c_sup),
            d_inf=min(self.d_inf, other.d_inf),
            plus_empty=self.plus_empty and other.plus_empty,
            minus_empty=self.minus_empty and other.minus_empty,
        )


@dataclass(frozen=True)
class NonnegReport:
    min_gamma0: float
    min_gamma1_plus: float
    min_gamma1_minus: float
    min_gamma2: float
    passed: bool
    worst_point: tuple[float, float]


def intervals_from_samples(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> AngleIntervals:
    """Sup/inf of the slope ratios over sampled tensor values, split by sign of b."""
    plus = b > 0.0
    minus = b < 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        g = b / a
        f = np.where(b != 0.0, c / b, np.nan)
    a_sup = float(g[plus].max()) if plus.any() else -np.inf
    b_inf = float(f[plus].min()) if plus.any() else np.inf
    c_sup = float(f[minus].max()) if minus.any() else -np.inf
    d_inf = float(g[minus].min()) if minus.any() else np.inf
    return AngleIntervals(a_sup, b_inf, c_sup, d_inf, not plus.any(), not minus.any())


def angle_intervals(field: DiffusionField, region) -> AngleIntervals:
    """Intervals over an explicit list/array of sample points (n, 2)."""
    pts = np.atleast_2d(np.asarray(region, dtype=float))
    if pts.size == 0:
        raise PlanError("angle intervals need a nonempty sample region")
    a, b, c = field.tensor_arrays(pts[:, 0], pts[:, 1])
    return intervals_from_samples(a, b, c)


def _inv_cos_sin(tan_beta: float):
    """1/(cos(beta)*sin(beta)) written to avoid overflow for extreme slopes."""
    return 1.0 / tan_beta + tan_beta


def split_values(a: float, b: float, c: float, tan1: float | None, tan2: float | None):
    """Coefficients (g0, g1p, g1m, g2) at a point; no sign checking.

    ``tan1`` may be None only when the point has b <= 0, ``tan2`` only when
    b >= 0; violating that is a plan inconsistency and raises PlanError.
    """
    if b > 0.0:
        if tan1 is None:
            raise PlanError("point with b > 0 but no plus-direction available")
        g0 = a - b / tan1
        g1p = b * _inv_cos_sin(tan1)
        g1m = 0.0
        g2 = c - b * tan1
    elif b < 0.0:
        if tan2 is None:
            raise PlanError("point with b < 0 but no minus-direction available")
        g0 = a - b / tan2
        g1p = 0.0
        g1m = b * _inv_cos_sin(tan2)
        g2 = c - b * tan2
    else:
        g0, g1p, g1m, g2 = a, 0.0, 0.0, c
    return g0, g1p, g1m, g2


def split_values_arrays(a, b, c, tan1: float | None, tan2: float | None):
    """Vectorized split_values over equally shaped coefficient arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    plus = b > 0.0
    minus = b < 0.0
    if plus.any() and tan1 is None:
        raise PlanError("points with b > 0 but no plus-direction available")
    if minus.any() and tan2 is None:
        raise PlanError("points with b < 0 but no minus-direction available")
    t1 = tan1 if tan1 is not None else 1.0  # placeholder, masked out below
    t2 = tan2 if tan2 is not None else -1.0
    g0 = np.where(plus, a - b / t1, np.where(minus, a - b / t2, a))
    g2 = np.where(plus, c - b * t1, np.where(minus, c - b * t2, c))
    g1p = np.where(plus, b * _inv_cos_sin(t1), 0.0)
    g1m = np.where(minus, b * _inv_cos_sin(t2), 0.0)
    return g0, g1p, g1m, g2


def split_coefficients(field: DiffusionField, beta1: float | None, beta2: float | None, x: float, y: float):
    """Splitting coefficients at a point, refusing to emit negative values.

    Angles are given in radians with beta1 in (0, pi/2) and beta2 in
    (-pi/2, 0); pass None for a direction the plan does not use.
    """
    a, b, c = field.tensor(x, y)
    tan1 = math.tan(beta1) if beta1 is not None else None
    tan2 = math.tan(beta2) if beta2 is not None else None
    values = split_values(a, b, c, tan1, tan2)
    if min(values) < GAMMA_TOLERANCE:
        raise PlanError(
            f"angle pair (beta1={beta1}, beta2={beta2}) inadmissible at ({x}, {y}): "
            f"coefficients {values}"
        )
    return values


def verify_nonnegative(field: DiffusionField, beta1: float | None, beta2: float | None, region) -> NonnegReport:
    """Evaluate the splitting on every region sample and report the minima."""
    pts = np.atleast_2d(np.asarray(region, dtype=float))
    a, b, c = field.tensor_arrays(pts[:, 0], pts[:, 1])
    tan1 = math.tan(beta1) if beta1 is not None else None
    tan2 = math.tan(beta2) if beta2 is not None else None
    g0, g1p, g1m, g2 = split_values_arrays(a, b, c, tan1, tan2)
    stacked = np.stack([g0, g1p, g1m, g2])
    worst_flat = int(np.argmin(stacked.min(axis=0)))
    mins = stacked.min(axis=1)
    return NonnegReport(
        min_gamma0=float(mins[0]),
        min_gamma1_plus=float(mins[1]),
        min_gamma1_minus=float(mins[2]),
        min_gamma2=float(mins[3]),
        passed=bool(stacked.min() >= GAMMA_TOLERANCE),
        worst_point=(float(pts[worst_flat, 0]), float(pts[worst_flat, 1])),
    )
