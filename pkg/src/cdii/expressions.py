"""Tiny arithmetic expression language over the coordinates ``x`` and ``y``.

Supports ``+ - * / ^`` (``**`` also accepted), unary minus, parentheses,
numeric literals, the constants ``pi`` and ``e``, and the functions ``exp``,
``sin``, ``cos``, ``log``, ``sqrt``. Expressions are parsed with :mod:`ast`
and evaluated on numpy arrays; nothing else is reachable.
"""

from __future__ import annotations

import ast

import numpy as np

from .field_core import BoundaryTrace, Grid2D, ScalarField

FUNCTIONS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "log": np.log, "sqrt": np.sqrt}
CONSTANTS = {"pi": np.pi, "e": np.e}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class ExpressionError(ValueError):
    pass


class Expression:
    def __init__(self, text: str):
        self.text = text
        try:
            tree = ast.parse(text.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse expression {text!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError(f"operator not allowed in {self.text!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ExpressionError(f"operator not allowed in {self.text!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError(f"unknown function in {self.text!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"functions take exactly one argument: {self.text!r}")
            self._check(node.args[0])
        elif isinstance(node, ast.Name):
            if node.id not in ("x", "y") and node.id not in CONSTANTS:
                raise ExpressionError(f"unknown name {node.id!r} in {self.text!r}")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ExpressionError(f"only numeric literals are allowed: {self.text!r}")
        else:
            raise ExpressionError(f"unsupported syntax in {self.text!r}")

    def _eval(self, node, x, y):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, x, y), self._eval(node.right, x, y))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, x, y)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call):
            return FUNCTIONS[node.func.id](self._eval(node.args[0], x, y))
        if isinstance(node, ast.Name):
            if node.id == "x":
                return x
            if node.id == "y":
                return y
            return CONSTANTS[node.id]
        return float(node.value)

    def __call__(self, x, y):
        with np.errstate(all="ignore"):
            out = self._eval(self._tree, np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(x, y).shape)

    def field(self, grid: Grid2D) -> ScalarField:
        X, Y = grid.mesh()
        vals = self(X, Y)
        if not np.all(np.isfinite(vals)):
            raise ExpressionError(f"expression {self.text!r} is not finite on every grid node")
        return ScalarField(grid, vals)

    def __repr__(self):
        return f"Expression({self.text!r})"


def field_from_expression(text: str, grid: Grid2D) -> ScalarField:
    return Expression(text).field(grid)


def trace_from_spec(spec: str, grid: Grid2D, theta: float = np.pi / 4) -> BoundaryTrace:
    """Boundary data from a named kind (``linear``, ``tilted-linear``, ``layered``) or an expression."""
    from .forward import layered_trace, two_to_one_trace

    if spec in ("linear", "tilted-linear", "tilted"):
        return two_to_one_trace(grid, spec, theta)
    if spec == "layered":
        return layered_trace(grid)
    return BoundaryTrace.from_field(field_from_expression(spec, grid))
