"""Monotone finite-difference schemes for anisotropic diffusion on the unit square."""

from .assembly import (
    MatrixAudit,
    Problem,
    SparseSystem,
    assemble,
    audit_m_matrix,
    directional_term_row,
    export_matrix,
    export_rhs,
)
from .errors import (
    AssemblyError,
    AuditError,
    ConfigError,
    FieldValidationError,
    GridError,
    MonofdError,
    PlanError,
    PlanningError,
    SolverError,
)
from .expressions import Expression, parse_expression
from .field import (
    DiffusionField,
    EigenPair,
    ProbeTable,
    SplittingConstants,
    built_in_field,
    compute_constants,
    eigen_pair,
    ratio_functions,
    validate_spd,
)
from .grid import Grid, NodeIndex, ball_nodes, build_grid
from .problems import built_in_problem
from .solver import SolveReport, residual, solve
from .splitting import (
    AngleIntervals,
    angle_intervals,
    split_coefficients,
    verify_nonnegative,
)
from .stencil import (
    GridPlan,
    PrincipalDirections,
    StencilPlan,
    check_mesh_condition,
    clip_arm,
    plan_grid,
    principal_directions,
    select_stencil,
    stencil_upper_bound,
)
from .verification import (
    ConvergenceRow,
    DmpRow,
    convergence_study,
    dmp_table,
    manufactured_problem,
    prepare,
    run_case,
    sign_pattern_summary,
    solution_on_grid,
)

__version__ = "0.1.0"
