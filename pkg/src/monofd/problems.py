"""Built-in benchmark problems.

exam1 probes the discrete maximum principle (zero source, oscillatory
Dirichlet data); exam2 reuses the exam1 tensor with a manufactured solution;
exam3 is a strictly diagonally dominant tensor where a 3x3 stencil always
suffices; exam4(k) is a rotated diag(k, 1) tensor whose anisotropy grows
with k.
"""

from __future__ import annotations

from .assembly import Problem
from .errors import ConfigError
from .expressions import parse_expression
from .field import built_in_field
from .verification import manufactured_problem

__all__ = ["BUILT_IN_PROBLEMS", "built_in_problem"]

BUILT_IN_PROBLEMS = ("exam1", "exam2", "exam3", "exam4")

_WAVE = "sin(2*pi*x) * sin(3*pi*y)"


def built_in_problem(name: str, k: float = 10.0) -> Problem:
    if name == "exam1":
        return Problem(
            name="exam1",
            field=built_in_field("exam1"),
            f=parse_expression("0"),
            g=parse_expression("cos(pi*x*y) + y"),
        )
    if name == "exam2":
        return manufactured_problem(built_in_field("exam1"), _WAVE, name="exam2")
    if name == "exam3":
        return manufactured_problem(built_in_field("exam3"), _WAVE, name="exam3")
    if name == "exam4":
        field = built_in_field("exam4", k=k)
        return manufactured_problem(field, _WAVE, name=f"exam4-k{k:g}")
    raise ConfigError(f"unknown problem {name!r}; choices: {BUILT_IN_PROBLEMS}")
