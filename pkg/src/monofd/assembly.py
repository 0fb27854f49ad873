"""Assembly of the monotone finite-difference system.

Each splitting term -d_e(gamma d_e u) along a direction e is discretized in
conservative flux form on a three-point arm.  With arm lengths s+ and s- and
the coefficient evaluated at the two arm midpoints,

    center weight   2*(g+/s+ + g-/s-) / (s+ + s-)
    far endpoint   -2*g+ / (s+ * (s+ + s-))
    near endpoint  -2*g- / (s- * (s+ + s-))

which reduces to [-g-, g+ + g-, -g+]/s^2 for equal arms.  Off-diagonal
weights are nonpositive whenever the midpoint coefficients are nonnegative,
so the Z-pattern of the matrix follows directly from the plan.  Weights that
reference boundary nodes or clipped boundary intersections multiply the
Dirichlet data and move to the right-hand side.

Interior nodes are swept in row-major linear order; directional terms are
assembled per (half-width, direction) group so the coefficient evaluations
stay vectorized, with a scalar path for arms clipped at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import AssemblyError
from .field import DiffusionField
from .grid import Grid
from .splitting import GAMMA_TOLERANCE
from .stencil import GridPlan, clip_arm, principal_directions


@dataclass(frozen=True)
class Problem:
    """Boundary-value problem data: tensor field, source f, Dirichlet data g.

    ``f``, ``g``, and ``exact_u`` must accept scalars or numpy arrays;
    expression objects qualify.  ``exact_u`` is optional and only used by
    verification studies.
    """

    name: str
    field: DiffusionField
    f: Callable
    g: Callable
    exact_u: Callable | None = None


@dataclass
class SparseSystem:
    """Interior-node linear system in compressed-row form.

    Rows follow the grid's row-major interior numbering.  ``entries`` yields
    duplicate-free coordinate triplets in row-sorted order.
    """

    dimension: int
    matrix: sp.csr_matrix
    rhs: np.ndarray

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data


@dataclass(frozen=True)
class MatrixAudit:
    """Sign pattern, dominance, and connectivity summary of a system."""

    max_offdiag: float
    min_diag: float
    min_dominance_slack: float
    zpattern_violations: int
    dominance_violations: int
    n_components: int
    connected: bool
    passed: bool


def directional_term_row(gamma_plus: float, gamma_minus: float, s_plus: float, s_minus: float):
    """Three-point weights (near, center, far) of one conservative term.

    Aborts on a negative midpoint coefficient: a negative value here means
    the plan admitted an inadmissible direction and monotonicity is lost.
    """
    if min(gamma_plus, gamma_minus) < GAMMA_TOLERANCE:
        raise AssemblyError(
            f"negative splitting coefficient at an arm midpoint: "
            f"({gamma_plus}, {gamma_minus})"
        )
    total = s_plus + s_minus
    w_center = 2.0 * (gamma_plus / s_plus + gamma_minus / s_minus) / total
    w_plus = -2.0 * gamma_plus / (s_plus * total)
    w_minus = -2.0 * gamma_minus / (s_minus * total)
    return w_minus, w_center, w_plus


class _Accumulator:
    """Collects COO triplets and boundary foldings for the linear system."""

    def __init__(self, dim: int, rhs: np.ndarray):
        self.dim = dim
        self.rhs = rhs
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []

    def add(self, rows, cols, vals):
        self.rows.append(np.asarray(rows, dtype=np.int64).ravel())
        self.cols.append(np.asarray(cols, dtype=np.int64).ravel())
        self.vals.append(np.asarray(vals, dtype=float).ravel())

    def fold(self, rows, weights, g_values):
        # weight * g moves across the equals sign
        np.subtract.at(self.rhs, np.asarray(rows, dtype=np.int64).ravel(),
                       np.asarray(weights, dtype=float).ravel() * np.asarray(g_values, dtype=float).ravel())

    def to_system(self) -> SparseSystem:
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        vals = np.concatenate(self.vals)
        matrix = sp.coo_matrix((vals, (rows, cols)), shape=(self.dim, self.dim)).tocsr()
        matrix.sum_duplicates()
        matrix.sort_indices()
        return SparseSystem(self.dim, matrix, self.rhs)


def _axis_gammas(field: DiffusionField, xs, ys, tan1, tan2, which: str, strict: bool = True):
    """gamma0 (which='x') or gamma2 (which='y') at axis-edge midpoints.

    The plan guarantees a direction exists for each sign of b occurring at
    the flux points; a missing one there is a plan inconsistency (strict
    mode).  Points with b = 0 reduce to the plain entry, continuously.
    """
    a, b, c = field.tensor_arrays(xs, ys)
    plus = b > 0.0
    minus = b < 0.0
    if strict:
        if np.any(plus & np.isnan(tan1)):
            idx = int(np.argmax(plus & np.isnan(tan1)))
            raise AssemblyError("b > 0 at an axis midpoint but the plan has no plus direction", node=idx)
        if np.any(minus & np.isnan(tan2)):
            idx = int(np.argmax(minus & np.isnan(tan2)))
            raise AssemblyError("b < 0 at an axis midpoint but the plan has no minus direction", node=idx)
    bp = np.maximum(b, 0.0)
    bm = np.minimum(b, 0.0)
    # Placeholders are only reached where the matching part vanishes.
    t1 = np.where(np.isnan(tan1), np.where(np.isnan(tan2), 1.0, tan2), tan1)
    t2 = np.where(np.isnan(tan2), np.where(np.isnan(tan1), -1.0, tan1), tan2)
    if which == "x":
        return a - bp / t1 - bm / t2
    return c - bp * t1 - bm * t2


def _diagonal_gamma(field: DiffusionField, xs, ys, slope: float, side: str):
    """gamma1 coefficient along a chosen direction; zero off its sign part."""
    _, b, _ = field.tensor_arrays(xs, ys)
    inv_cos_sin = 1.0 / slope + slope
    if side == "plus":
        return np.maximum(b, 0.0) * inv_cos_sin
    return np.minimum(b, 0.0) * inv_cos_sin


def _check_nonnegative(values: np.ndarray, rows: np.ndarray, grid: Grid, label: str):
    """Abort on a negative coefficient, naming the owning node.

    ``rows`` holds the linear row index of each value (values from several
    flux points of one row may be concatenated, with rows repeated to match).
    """
    worst = float(values.min())
    if worst < GAMMA_TOLERANCE:
        node = grid.node_from_linear(int(rows[int(np.argmin(values))]))
        raise AssemblyError(
            f"negative {label} coefficient ({worst:.3e}) at node (j={node.j}, k={node.k})",
            node=(node.j, node.k),
        )


def assemble(problem: Problem, grid: Grid, plan: GridPlan) -> SparseSystem:
    """Assemble the interior-node system with Dirichlet data folded into the rhs."""
    n = grid.n
    h = grid.h
    ni = n - 1
    dim = ni * ni
    X, Y = grid.interior_coords()
    lin = np.arange(dim, dtype=np.int64)
    J = lin % ni + 1
    K = lin // ni + 1

    rhs = np.broadcast_to(np.asarray(problem.f(X, Y), dtype=float), (dim,)).copy()
    acc = _Accumulator(dim, rhs)
    field = problem.field
    g = problem.g
    half = 0.5 * h
    inv_h2 = 1.0 / (h * h)

    def g_at(xs, ys):
        return np.broadcast_to(np.asarray(g(xs, ys), dtype=float), np.shape(xs)).ravel()

    # Axis terms: gamma0 along x, gamma2 along y.  Arms are single mesh edges,
    # so endpoints are nodes and only the first/last ring folds into the rhs.
    for which, (ox, oy), neighbor_step in (("x", (1, 0), 1), ("y", (0, 1), ni)):
        gm_lo = _axis_gammas(field, X - ox * half, Y - oy * half, plan.tan1, plan.tan2, which)
        gm_hi = _axis_gammas(field, X + ox * half, Y + oy * half, plan.tan1, plan.tan2, which)
        _check_nonnegative(np.concatenate([gm_lo, gm_hi]), np.concatenate([lin, lin]), grid, f"gamma-{which}")
        acc.add(lin, lin, (gm_lo + gm_hi) * inv_h2)
        along = J if which == "x" else K
        lo_interior = along >= 2
        hi_interior = along <= ni - 1
        acc.add(lin[lo_interior], lin[lo_interior] - neighbor_step, -gm_lo[lo_interior] * inv_h2)
        acc.add(lin[hi_interior], lin[hi_interior] + neighbor_step, -gm_hi[hi_interior] * inv_h2)
        lo_bnd = ~lo_interior
        hi_bnd = ~hi_interior
        acc.fold(lin[lo_bnd], -gm_lo[lo_bnd] * inv_h2,
                 g_at(X[lo_bnd] - ox * h, Y[lo_bnd] - oy * h))
        acc.fold(lin[hi_bnd], -gm_hi[hi_bnd] * inv_h2,
                 g_at(X[hi_bnd] + ox * h, Y[hi_bnd] + oy * h))

    # Directional terms, grouped by (half-width, direction index).
    for side, i_arr in (("plus", plan.i1), ("minus", plan.i2)):
        active = i_arr != 0
        if not active.any():
            continue
        pairs = np.unique(np.stack([plan.m[active], i_arr[active]]), axis=1)
        for m_val, i_val in pairs.T:
            table = principal_directions(int(m_val))
            dx, dy = table.offsets[int(i_val)]
            slope = dy / dx if dx != 0 else math.inf
            group = lin[(plan.m == m_val) & (i_arr == i_val)]
            _assemble_direction(acc, problem, grid, group, J[group], K[group],
                                (dx, dy), slope, side)

    return acc.to_system()


def _assemble_direction(acc, problem, grid, group, Jg, Kg, offset, slope, side):
    n = grid.n
    ni = n - 1
    h = grid.h
    dx, dy = offset
    field = problem.field
    g = problem.g
    Xg = Jg / n
    Yg = Kg / n

    tj_hi, tk_hi = Jg + dx, Kg + dy
    tj_lo, tk_lo = Jg - dx, Kg - dy
    inside_hi = (tj_hi >= 0) & (tj_hi <= n) & (tk_hi >= 0) & (tk_hi <= n)
    inside_lo = (tj_lo >= 0) & (tj_lo <= n) & (tk_lo >= 0) & (tk_lo <= n)
    regular = inside_hi & inside_lo

    # Equal-arm fast path for stencils entirely inside the closed square.
    if regular.any():
        rg = group[regular]
        s = h * math.hypot(dx, dy)
        inv_s2 = 1.0 / (s * s)
        xm, ym = Xg[regular], Yg[regular]
        gm_hi = _diagonal_gamma(field, xm + 0.5 * dx * h, ym + 0.5 * dy * h, slope, side)
        gm_lo = _diagonal_gamma(field, xm - 0.5 * dx * h, ym - 0.5 * dy * h, slope, side)
        _check_nonnegative(np.concatenate([gm_hi, gm_lo]), np.concatenate([rg, rg]), grid, f"gamma-{side}")
        acc.add(rg, rg, (gm_hi + gm_lo) * inv_s2)
        for gm, tj, tk in ((gm_hi, tj_hi[regular], tk_hi[regular]),
                           (gm_lo, tj_lo[regular], tk_lo[regular])):
            interior = (tj >= 1) & (tj <= ni) & (tk >= 1) & (tk <= ni)
            cols = (tk[interior] - 1) * ni + (tj[interior] - 1)
            acc.add(rg[interior], cols, -gm[interior] * inv_s2)
            bnd = ~interior
            if bnd.any():
                gv = np.asarray(problem.g(tj[bnd] / n, tk[bnd] / n), dtype=float)
                acc.fold(rg[bnd], -gm[bnd] * inv_s2, np.broadcast_to(gv, (int(bnd.sum()),)))

    # Clipped arms: per node, unequal lengths.
    for row, j, k in zip(group[~regular], Jg[~regular], Kg[~regular]):
        x0, y0 = j / n, k / n
        end_hi = clip_arm(grid, (int(j), int(k)), (dx, dy))
        end_lo = clip_arm(grid, (int(j), int(k)), (-dx, -dy))
        mids = [((x0 + e.point[0]) / 2.0, (y0 + e.point[1]) / 2.0) for e in (end_hi, end_lo)]
        gm_hi = float(_diagonal_gamma(field, mids[0][0], mids[0][1], slope, side))
        gm_lo = float(_diagonal_gamma(field, mids[1][0], mids[1][1], slope, side))
        try:
            w_lo, w_center, w_hi = directional_term_row(gm_hi, gm_lo, end_hi.distance, end_lo.distance)
        except AssemblyError as exc:
            raise AssemblyError(f"{exc} at node (j={j}, k={k})", node=(int(j), int(k))) from exc
        acc.add([row], [row], [w_center])
        for endpoint, w in ((end_hi, w_hi), (end_lo, w_lo)):
            if endpoint.kind == "node" and not endpoint.on_boundary:
                tj, tk = endpoint.node
                acc.add([row], [(tk - 1) * ni + (tj - 1)], [w])
            else:
                acc.fold([row], [w], [float(g(endpoint.point[0], endpoint.point[1]))])


def audit_m_matrix(system: SparseSystem) -> MatrixAudit:
    """Z-pattern, positive diagonal, weak dominance, and irreducibility checks.

    Dominance slack is diag - sum|offdiag| per row; rows may be exactly
    balanced (interior) and must be strictly dominant where the stencil
    touches the boundary, which shows up as min slack > 0 on those rows.
    """
    matrix = system.matrix.tocoo()
    off = matrix.row != matrix.col
    diag = system.matrix.diagonal()
    off_vals = matrix.data[off]
    max_off = float(off_vals.max()) if off_vals.size else 0.0
    abs_off_sum = np.zeros(system.dimension)
    np.add.at(abs_off_sum, matrix.row[off], np.abs(off_vals))
    slack = diag - abs_off_sum
    scale = np.maximum(np.abs(diag), 1.0)
    zpattern_violations = int((off_vals > 1e-12).sum()) + int((diag <= 0.0).sum())
    dominance_violations = int((slack < -1e-9 * scale).sum())
    pattern = sp.coo_matrix(
        (np.abs(off_vals), (matrix.row[off], matrix.col[off])),
        shape=matrix.shape,
    )
    n_components = int(connected_components(pattern, directed=False)[0]) if system.dimension > 1 else 1
    connected = n_components == 1
    passed = zpattern_violations == 0 and dominance_violations == 0 and connected
    return MatrixAudit(
        max_offdiag=max_off,
        min_diag=float(diag.min()),
        min_dominance_slack=float(slack.min()),
        zpattern_violations=zpattern_violations,
        dominance_violations=dominance_violations,
        n_components=n_components,
        connected=connected,
        passed=passed,
    )


def export_matrix(system: SparseSystem, path) -> None:
    """Plain-text coordinate export: header 'rows cols nnz', 1-based triplets."""
    rows, cols, vals = system.entries()
    with open(path, "w") as fh:
        fh.write(f"{system.dimension} {system.dimension} {len(vals)}\n")
        for r, c, v in zip(rows, cols, vals):
            fh.write(f"{r + 1} {c + 1} {float(v)!r}\n")


def export_rhs(system: SparseSystem, path) -> None:
    with open(path, "w") as fh:
        for v in system.rhs:
            fh.write(f"{float(v)!r}\n")
