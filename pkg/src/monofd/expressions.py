"""Closed-form expressions in x and y: parsing, evaluation, differentiation.

Coefficients, sources, and exact solutions are entered in a small arithmetic
grammar: ``+ - * /``, the functions ``sin cos tan atan abs``, numeric
constants (plus ``pi`` and ``e``), and the variables ``x`` and ``y``.
Powers ``u ** c`` with a constant exponent are accepted as a convenience.
The grammar is closed under differentiation except for ``abs``, so
manufactured right-hand sides can be produced symbolically.

Evaluation accepts scalars or numpy arrays and broadcasts like numpy.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "Expression",
    "NonDifferentiableError",
    "parse_expression",
    "const",
    "var",
    "sin",
    "cos",
    "tan",
    "atan",
    "absval",
]


class NonDifferentiableError(ConfigError):
    """Raised when an expression leaves the differentiable grammar subset."""


_UNARY_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "atan": np.arctan,
    "abs": np.abs,
}

_NAMED_CONSTANTS = {"pi": math.pi, "e": math.e}


class Expression:
    """Immutable expression tree node.

    Subclasses implement ``evaluate`` and ``diff``.  Python operators are
    overloaded so trees can be written directly, e.g. ``9 + 4 * sin(x * y)``
    with ``x = var("x")``.
    """

    def evaluate(self, x, y):
        raise NotImplementedError

    def diff(self, name: str) -> "Expression":
        raise NotImplementedError

    def __call__(self, x, y):
        return self.evaluate(x, y)

    # Operator sugar.  Plain numbers are lifted to Const.
    def __add__(self, other):
        return _add(self, _lift(other))

    def __radd__(self, other):
        return _add(_lift(other), self)

    def __sub__(self, other):
        return _sub(self, _lift(other))

    def __rsub__(self, other):
        return _sub(_lift(other), self)

    def __mul__(self, other):
        return _mul(self, _lift(other))

    def __rmul__(self, other):
        return _mul(_lift(other), self)

    def __truediv__(self, other):
        return _div(self, _lift(other))

    def __rtruediv__(self, other):
        return _div(_lift(other), self)

    def __pow__(self, exponent):
        if isinstance(exponent, Expression):
            if not isinstance(exponent, Const):
                raise ConfigError("only constant exponents are supported")
            exponent = exponent.value
        return _pow(self, float(exponent))

    def __neg__(self):
        return _mul(Const(-1.0), self)

    def __repr__(self):
        return f"{type(self).__name__}({self})"


@dataclass(frozen=True, repr=False)
class Const(Expression):
    value: float

    def evaluate(self, x, y):
        return self.value

    def diff(self, name):
        return Const(0.0)

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True, repr=False)
class Var(Expression):
    name: str

    def evaluate(self, x, y):
        return x if self.name == "x" else y

    def diff(self, name):
        return Const(1.0 if name == self.name else 0.0)

    def __str__(self):
        return self.name


@dataclass(frozen=True, repr=False)
class BinOp(Expression):
    op: str  # one of + - * /
    left: Expression
    right: Expression

    def evaluate(self, x, y):
        a = self.left.evaluate(x, y)
        b = self.right.evaluate(x, y)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        return a / b

    def diff(self, name):
        u, v = self.left, self.right
        du, dv = u.diff(name), v.diff(name)
        if self.op == "+":
            return _add(du, dv)
        if self.op == "-":
            return _sub(du, dv)
        if self.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        # quotient rule; the grammar stays closed because / is in it
        return _sub(_div(du, v), _div(_mul(u, dv), _mul(v, v)))

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True, repr=False)
class Pow(Expression):
    base: Expression
    exponent: float

    def evaluate(self, x, y):
        return self.base.evaluate(x, y) ** self.exponent

    def diff(self, name):
        du = self.base.diff(name)
        return _mul(_mul(Const(self.exponent), _pow(self.base, self.exponent - 1.0)), du)

    def __str__(self):
        return f"({self.base} ** {self.exponent!r})"


@dataclass(frozen=True, repr=False)
class Func(Expression):
    fname: str
    arg: Expression

    def evaluate(self, x, y):
        return _UNARY_FUNCTIONS[self.fname](self.arg.evaluate(x, y))

    def diff(self, name):
        du = self.arg.diff(name)
        u = self.arg
        if self.fname == "sin":
            outer = Func("cos", u)
        elif self.fname == "cos":
            outer = _mul(Const(-1.0), Func("sin", u))
        elif self.fname == "tan":
            t = Func("tan", u)
            outer = _add(Const(1.0), _mul(t, t))
        elif self.fname == "atan":
            outer = _div(Const(1.0), _add(Const(1.0), _mul(u, u)))
        else:
            raise NonDifferentiableError("abs(...) is not differentiable everywhere")
        return _mul(outer, du)

    def __str__(self):
        return f"{self.fname}({self.arg})"


def _lift(value) -> Expression:
    if isinstance(value, Expression):
        return value
    return Const(float(value))


def _is_const(e: Expression, v=None) -> bool:
    return isinstance(e, Const) and (v is None or e.value == v)


# Smart constructors fold constants so derivative trees stay small.

def _add(u, v):
    if _is_const(u) and _is_const(v):
        return Const(u.value + v.value)
    if _is_const(u, 0.0):
        return v
    if _is_const(v, 0.0):
        return u
    return BinOp("+", u, v)


def _sub(u, v):
    if _is_const(u) and _is_const(v):
        return Const(u.value - v.value)
    if _is_const(v, 0.0):
        return u
    return BinOp("-", u, v)


def _mul(u, v):
    if _is_const(u) and _is_const(v):
        return Const(u.value * v.value)
    if _is_const(u, 0.0) or _is_const(v, 0.0):
        return Const(0.0)
    if _is_const(u, 1.0):
        return v
    if _is_const(v, 1.0):
        return u
    return BinOp("*", u, v)


def _div(u, v):
    if _is_const(u, 0.0):
        return Const(0.0)
    if _is_const(v, 1.0):
        return u
    if _is_const(u) and _is_const(v):
        return Const(u.value / v.value)
    return BinOp("/", u, v)


def _pow(u, exponent: float):
    if exponent == 1.0:
        return u
    if exponent == 0.0:
        return Const(1.0)
    if _is_const(u):
        return Const(u.value**exponent)
    return Pow(u, exponent)


# Convenience constructors for building trees in code.

def const(value) -> Expression:
    return Const(float(value))


def var(name: str) -> Expression:
    if name not in ("x", "y"):
        raise ConfigError(f"unknown variable {name!r}; only x and y exist")
    return Var(name)


def sin(u) -> Expression:
    return Func("sin", _lift(u))


def cos(u) -> Expression:
    return Func("cos", _lift(u))


def tan(u) -> Expression:
    return Func("tan", _lift(u))


def atan(u) -> Expression:
    return Func("atan", _lift(u))


def absval(u) -> Expression:
    return Func("abs", _lift(u))


def parse_expression(text: str) -> Expression:
    """Parse ``text`` into an Expression, rejecting anything off-grammar."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from exc
    return _convert(tree.body, text)


def _convert(node: ast.AST, text: str) -> Expression:
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return Const(float(node.value))
        raise ConfigError(f"non-numeric constant in {text!r}")
    if isinstance(node, ast.Name):
        if node.id in ("x", "y"):
            return Var(node.id)
        if node.id in _NAMED_CONSTANTS:
            return Const(_NAMED_CONSTANTS[node.id])
        raise ConfigError(f"unknown name {node.id!r} in {text!r}")
    if isinstance(node, ast.UnaryOp):
        operand = _convert(node.operand, text)
        if isinstance(node.op, ast.USub):
            return _mul(Const(-1.0), operand)
        if isinstance(node.op, ast.UAdd):
            return operand
        raise ConfigError(f"unsupported unary operator in {text!r}")
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            exponent = _convert(node.right, text)
            if not isinstance(exponent, Const):
                raise ConfigError(f"exponent must be a constant in {text!r}")
            return _pow(_convert(node.left, text), exponent.value)
        ops = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/"}
        for klass, symbol in ops.items():
            if isinstance(node.op, klass):
                left = _convert(node.left, text)
                right = _convert(node.right, text)
                return {"+": _add, "-": _sub, "*": _mul, "/": _div}[symbol](left, right)
        raise ConfigError(f"unsupported operator in {text!r}")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _UNARY_FUNCTIONS:
            raise ConfigError(f"unsupported function call in {text!r}")
        if len(node.args) != 1 or node.keywords:
            raise ConfigError(f"{node.func.id} takes exactly one argument in {text!r}")
        return Func(node.func.id, _convert(node.args[0], text))
    raise ConfigError(f"unsupported syntax in expression {text!r}")
