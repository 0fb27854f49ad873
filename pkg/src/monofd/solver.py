"""Deterministic sparse solves to a prescribed relative residual.

The systems are mildly nonsymmetric M-matrices.  At desk scale a sparse LU
factorization with a few steps of iterative refinement meets the residual
contract; very large systems fall back to ILU-preconditioned BiCGStab.  The
contract is the post-condition ||A u - rhs|| <= tol * ||rhs||, not the method.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import SolverError
from .assembly import SparseSystem

__all__ = ["SolveReport", "solve", "residual"]

# Above this many unknowns LU fill gets expensive; switch to Krylov.
_DIRECT_LIMIT = 250_000
_MAX_REFINEMENTS = 4


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_relative_residual: float
    converged: bool
    method_name: str


def residual(system: SparseSystem, candidate: np.ndarray) -> float:
    """Relative Euclidean residual; absolute when the rhs vanishes."""
    candidate = np.asarray(candidate, dtype=float)
    if candidate.shape != (system.dimension,):
        raise SolverError(
            f"candidate has shape {candidate.shape}, system dimension is {system.dimension}"
        )
    r = system.rhs - system.matrix @ candidate
    rhs_norm = float(np.linalg.norm(system.rhs))
    return float(np.linalg.norm(r)) / (rhs_norm if rhs_norm > 0.0 else 1.0)


def solve(system: SparseSystem, tol: float = 1e-10, max_iter: int | None = None):
    """Solve the assembled system; returns (solution, SolveReport).

    Identical inputs give identical outputs on one platform.  Non-convergence
    is reported, not raised; callers decide whether it is fatal.
    """
    if max_iter is None:
        max_iter = 10 * system.dimension
    if system.dimension <= _DIRECT_LIMIT:
        return _solve_direct(system, tol)
    return _solve_krylov(system, tol, max_iter)


def _solve_direct(system: SparseSystem, tol: float):
    lu = spla.splu(system.matrix.tocsc())
    x = lu.solve(system.rhs)
    iterations = 1
    rel = residual(system, x)
    while rel > tol and iterations <= _MAX_REFINEMENTS:
        x = x + lu.solve(system.rhs - system.matrix @ x)
        iterations += 1
        rel = residual(system, x)
    return x, SolveReport(iterations, rel, rel <= tol, "sparse-lu")


def _solve_krylov(system: SparseSystem, tol: float, max_iter: int):
    ilu = spla.spilu(system.matrix.tocsc(), drop_tol=1e-5, fill_factor=20.0)
    precond = spla.LinearOperator(system.matrix.shape, matvec=ilu.solve)
    counter = {"n": 0}

    def count(_):
        counter["n"] += 1

    x, info = spla.bicgstab(
        system.matrix,
        system.rhs,
        rtol=0.1 * tol,
        atol=0.0,
        maxiter=max_iter,
        M=precond,
        callback=count,
    )
    rel = residual(system, x)
    return x, SolveReport(counter["n"], rel, info == 0 and rel <= tol, "ilu-bicgstab")
