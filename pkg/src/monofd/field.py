"""Diffusion tensor fields and the global constants that drive planning.

A field is the symmetric tensor [[a, b], [b, c]] with entries given as
closed-form expressions of (x, y) on the closed unit square.  From dense
lattice sampling we estimate:

* ``alpha_bar``: infimum of the determinant a*c - b^2,
* ``alpha``:     max of sup a*(|b|+1) and sup c*(|b|+1),
* ``cap_m``:     sup|b/a| + alpha_bar/alpha, the cut-off level for the
                 slope-ratio functions,
* Lipschitz estimates of the cut-off ratios and of b/a,
* ``radius``:    alpha_bar / (3*alpha*maxL), the uniform neighborhood size on
                 which admissible direction intervals are guaranteed nonempty.

Suprema and infima are lattice estimates, not certificates; the planner adds
its own safety margins on top (see stencil.select_stencil).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FieldValidationError
from .expressions import Expression, const, cos, parse_expression, sin, var

__all__ = [
    "DiffusionField",
    "EigenPair",
    "SplittingConstants",
    "SpdReport",
    "RatioValues",
    "ProbeTable",
    "eigen_pair",
    "validate_spd",
    "ratio_functions",
    "compute_constants",
    "built_in_field",
    "BUILT_IN_FIELDS",
    "field_from_expressions",
]

DOMAIN_DIAMETER = math.sqrt(2.0)


@dataclass(frozen=True)
class DiffusionField:
    """Symmetric 2x2 tensor field with expression-backed entries."""

    name: str
    a: Expression
    b: Expression
    c: Expression

    def tensor(self, x: float, y: float) -> tuple[float, float, float]:
        """Entries (a, b, c) at a single point of the closed unit square."""
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise ConfigError(f"point ({x}, {y}) lies outside the closed unit square")
        return float(self.a(x, y)), float(self.b(x, y)), float(self.c(x, y))

    def tensor_arrays(self, x, y):
        """Vectorized entries; domain checking is the caller's concern."""
        shape = np.broadcast(x, y).shape
        a = np.broadcast_to(np.asarray(self.a(x, y), dtype=float), shape).copy()
        b = np.broadcast_to(np.asarray(self.b(x, y), dtype=float), shape).copy()
        c = np.broadcast_to(np.asarray(self.c(x, y), dtype=float), shape).copy()
        return a, b, c


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalues (descending) and principal-axis angle of the tensor."""

    lambda1: float
    lambda2: float
    psi: float


@dataclass(frozen=True)
class SplittingConstants:
    """Field-wide constants; ``radius`` bounds the planning neighborhoods.

    ``lip_b`` is the Lipschitz estimate of the off-diagonal entry itself; the
    assembler uses it to pick the mesh-scale softening width of the
    positive/negative-part split of b.
    """

    alpha_bar: float
    alpha: float
    cap_m: float
    lip_fplus: float
    lip_fminus: float
    lip_g: float
    radius: float
    probe_step: float
    lip_b: float = 0.0

    @property
    def interval_width_floor(self) -> float:
        """Guaranteed width of admissible slope intervals inside the radius."""
        return self.alpha_bar / (3.0 * self.alpha)


@dataclass(frozen=True)
class SpdReport:
    passed: bool
    min_a: float
    min_c: float
    min_det: float
    worst_point: tuple[float, float]
    probe_step: float


@dataclass(frozen=True)
class RatioValues:
    """Slope ratios at a point: F = c/b (None where b = 0), G = b/a, cut-offs."""

    ratio_f: float | None
    ratio_g: float
    f_plus: float
    f_minus: float


def eigen_pair(field: DiffusionField, x: float, y: float) -> EigenPair:
    """Closed-form eigen decomposition of the symmetric 2x2 tensor."""
    a, b, c = field.tensor(x, y)
    mean = 0.5 * (a + c)
    half_gap = math.hypot(0.5 * (a - c), b)
    psi = 0.5 * math.atan2(2.0 * b, a - c)
    return EigenPair(mean + half_gap, mean - half_gap, psi)


def _lattice(probe_step: float) -> np.ndarray:
    if probe_step <= 0:
        raise ConfigError("probe_step must be positive")
    cells = max(2, round(1.0 / probe_step))
    return np.linspace(0.0, 1.0, cells + 1)


class ProbeTable:
    """Dense lattice samples of the tensor entries and planning ratios.

    Axis 0 indexes y, axis 1 indexes x.  The planner slices rectangular
    windows out of these arrays, so everything is precomputed once per field.
    """

    def __init__(self, field: DiffusionField, probe_step: float = 1e-3):
        self.field = field
        xs = _lattice(probe_step)
        self.xs = xs
        self.step = xs[1] - xs[0]
        X, Y = np.meshgrid(xs, xs)
        self.a, self.b, self.c = field.tensor_arrays(X, Y)
        self.det = self.a * self.c - self.b**2
        self.ratio_g = self.b / self.a
        with np.errstate(divide="ignore", invalid="ignore"):
            self.ratio_f = np.where(self.b != 0.0, self.c / self.b, np.nan)

    def window_intervals(self, x0: float, y0: float, radius: float):
        """Raw (A, B, C, D) over lattice points strictly inside the ball.

        Returns (sup b/a on b>0, inf c/b on b>0, sup c/b on b<0, inf b/a on
        b<0) with -inf/+inf standing in for empty parts.
        """
        xs = self.xs
        step = self.step
        ilo = max(0, int(math.ceil((x0 - radius) / step)))
        ihi = min(xs.size - 1, int(math.floor((x0 + radius) / step)))
        jlo = max(0, int(math.ceil((y0 - radius) / step)))
        jhi = min(xs.size - 1, int(math.floor((y0 + radius) / step)))
        if ilo > ihi or jlo > jhi:
            return -np.inf, np.inf, -np.inf, np.inf
        bw = self.b[jlo : jhi + 1, ilo : ihi + 1]
        gw = self.ratio_g[jlo : jhi + 1, ilo : ihi + 1]
        fw = self.ratio_f[jlo : jhi + 1, ilo : ihi + 1]
        dx = xs[ilo : ihi + 1] - x0
        dy = xs[jlo : jhi + 1] - y0
        inside = dx[None, :] ** 2 + dy[:, None] ** 2 < radius**2
        plus = inside & (bw > 0.0)
        minus = inside & (bw < 0.0)
        a_sup = float(gw[plus].max()) if plus.any() else -np.inf
        b_inf = float(fw[plus].min()) if plus.any() else np.inf
        c_sup = float(fw[minus].max()) if minus.any() else -np.inf
        d_inf = float(gw[minus].min()) if minus.any() else np.inf
        return a_sup, b_inf, c_sup, d_inf


def validate_spd(field: DiffusionField, probe_step: float = 1e-2) -> SpdReport:
    """Sample a, c, and the determinant on a lattice; fail on any nonpositive probe."""
    xs = _lattice(probe_step)
    X, Y = np.meshgrid(xs, xs)
    a, b, c = field.tensor_arrays(X, Y)
    det = a * c - b**2
    worst = np.unravel_index(int(np.argmin(det)), det.shape)
    report = SpdReport(
        passed=bool(a.min() > 0.0 and c.min() > 0.0 and det.min() > 0.0),
        min_a=float(a.min()),
        min_c=float(c.min()),
        min_det=float(det.min()),
        worst_point=(float(X[worst]), float(Y[worst])),
        probe_step=float(xs[1] - xs[0]),
    )
    return report


def ratio_functions(field: DiffusionField, x: float, y: float, constants: SplittingConstants) -> RatioValues:
    """Slope ratios and their cut-offs at a point.

    The cut-off level ``constants.cap_m`` makes the plus/minus variants total:
    where b <= 0 (or c/b is beyond the cap) the plus variant saturates at
    +cap, and symmetrically for the minus variant.
    """
    a, b, c = field.tensor(x, y)
    cap = constants.cap_m
    g = b / a
    f = c / b if b != 0.0 else None
    if b > 0.0 and f < cap:
        f_plus = f
    else:
        f_plus = cap
    if b < 0.0 and f > -cap:
        f_minus = f
    else:
        f_minus = -cap
    return RatioValues(f, g, f_plus, f_minus)


def _axis_lipschitz(values: np.ndarray, step: float) -> float:
    """Lipschitz estimate from first differences on the probe lattice.

    Per axis the max difference quotient estimates sup of that partial
    derivative; their sum bounds the Euclidean gradient norm from above, so
    the estimate errs on the conservative (smaller radius) side.
    """
    d0 = np.abs(np.diff(values, axis=0)).max() if values.shape[0] > 1 else 0.0
    d1 = np.abs(np.diff(values, axis=1)).max() if values.shape[1] > 1 else 0.0
    return float((d0 + d1) / step)


def compute_constants(field: DiffusionField, probe_step: float = 1e-3, table: ProbeTable | None = None) -> SplittingConstants:
    """Estimate the field-wide planning constants by dense lattice sampling.

    Raises FieldValidationError if any probe violates positive definiteness.
    For constant fields every Lipschitz estimate vanishes and the radius is
    capped at the domain diameter.
    """
    if table is None:
        table = ProbeTable(field, probe_step)
    a, b, c, det = table.a, table.b, table.c, table.det
    if a.min() <= 0.0 or c.min() <= 0.0 or det.min() <= 0.0:
        worst = np.unravel_index(int(np.argmin(det)), det.shape)
        point = (float(table.xs[worst[1]]), float(table.xs[worst[0]]))
        raise FieldValidationError(
            f"field {field.name!r} is not uniformly positive definite near {point}",
            point=point,
        )
    alpha_bar = float(det.min())
    weight = np.abs(b) + 1.0
    alpha = float(max((a * weight).max(), (c * weight).max()))
    cap_m = float(np.abs(table.ratio_g).max() + alpha_bar / alpha)

    f = table.ratio_f
    f_plus = np.where((b > 0.0) & (f < cap_m), f, cap_m)
    f_minus = np.where((b < 0.0) & (f > -cap_m), f, -cap_m)
    lip_fplus = _axis_lipschitz(f_plus, table.step)
    lip_fminus = _axis_lipschitz(f_minus, table.step)
    lip_g = _axis_lipschitz(table.ratio_g, table.step)
    lip_b = _axis_lipschitz(b, table.step)
    max_lip = max(lip_fplus, lip_fminus, lip_g)
    if max_lip == 0.0:
        radius = DOMAIN_DIAMETER
    else:
        radius = min(alpha_bar / (3.0 * alpha * max_lip), DOMAIN_DIAMETER)
    return SplittingConstants(
        alpha_bar=alpha_bar,
        alpha=alpha,
        cap_m=cap_m,
        lip_fplus=lip_fplus,
        lip_fminus=lip_fminus,
        lip_g=lip_g,
        radius=radius,
        probe_step=table.step,
        lip_b=lip_b,
    )


def field_from_expressions(name: str, a, b, c) -> DiffusionField:
    """Build a field from Expression objects or grammar strings."""
    def as_expr(v):
        if isinstance(v, Expression):
            return v
        if isinstance(v, str):
            return parse_expression(v)
        return const(v)

    return DiffusionField(name, as_expr(a), as_expr(b), as_expr(c))


def _exam1_field() -> DiffusionField:
    x, y = var("x"), var("y")
    b = 4.0 * sin(2.0 * const(math.pi) * x * y)
    return DiffusionField("exam1", const(9.0), b, const(3.0))


def _exam3_field() -> DiffusionField:
    x, y = var("x"), var("y")
    b = sin(2.0 * const(math.pi) * x * y)
    return DiffusionField("exam3", const(1.1), b, const(1.1))


def _exam4_field(k: float) -> DiffusionField:
    # Rotation of diag(k, 1) by the angle pi*sin(x)*cos(y).
    x, y = var("x"), var("y")
    theta = const(math.pi) * sin(x) * cos(y)
    ct, st = cos(theta), sin(theta)
    a = const(k) * ct * ct + st * st
    b = const(k - 1.0) * st * ct
    c = const(k) * st * st + ct * ct
    return DiffusionField(f"exam4-k{k:g}", a, b, c)


def _identity_field() -> DiffusionField:
    return DiffusionField("identity", const(1.0), const(0.0), const(1.0))


BUILT_IN_FIELDS = ("exam1", "exam3", "exam4", "identity")


def built_in_field(name: str, k: float = 10.0) -> DiffusionField:
    """Registry of named tensor fields; exam4 takes the anisotropy ratio k."""
    if name == "exam1":
        return _exam1_field()
    if name == "exam3":
        return _exam3_field()
    if name == "exam4":
        return _exam4_field(float(k))
    if name == "identity":
        return _identity_field()
    raise ConfigError(f"unknown built-in field {name!r}; choices: {BUILT_IN_FIELDS}")
