"""Tiny arithmetic expression evaluator for configuration inputs.

Grammar: numeric literals, the variables ``x``, ``y``, ``t``, the constant
``pi``, binary ``+ - * / ^`` (``^`` is power), unary ``+ -``, parentheses, and
the functions ``sin``, ``cos``, ``exp``.  Expressions are parsed with
:mod:`ast` and evaluated by walking the tree with numpy, so they vectorise
over array arguments.  Nothing else is accepted.
"""

from __future__ import annotations

import ast
import operator

import numpy as np

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTS = {"pi": np.pi}


class ExpressionError(ValueError):
    pass


class Expression:
    """Compiled expression in a fixed set of variables.

    >>> float(Expression("2*x^2 + sin(pi*y)")(x=1.0, y=0.5))
    3.0
    """

    def __init__(self, text: str, variables=("x", "y", "t")):
        self.text = str(text).strip()
        self.variables = tuple(variables)
        if not self.text:
            raise ExpressionError("empty expression")
        try:
            tree = ast.parse(self.text.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse expression {self.text!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body
        used = {n.id for n in ast.walk(self._tree) if isinstance(n, ast.Name)}
        self.used = tuple(v for v in self.variables if v in used)

    def _check(self, node) -> None:
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ExpressionError(f"unsupported literal {node.value!r} in {self.text!r}")
        elif isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in _CONSTS:
                raise ExpressionError(
                    f"unknown name {node.id!r} in {self.text!r}; allowed: {', '.join(self.variables)}, pi")
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError(f"unsupported operator in {self.text!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARY:
                raise ExpressionError(f"unsupported operator in {self.text!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise ExpressionError(f"unsupported function call in {self.text!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"{node.func.id} takes exactly one argument")
            self._check(node.args[0])
        else:
            raise ExpressionError(f"unsupported syntax in {self.text!r}")

    @property
    def constant(self) -> float | None:
        """The value if the expression uses no variables, else None."""
        if self.used:
            return None
        return float(self._eval(self._tree, {}))

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, env))
        return _FUNCS[node.func.id](self._eval(node.args[0], env))

    def __call__(self, **values):
        missing = [v for v in self.used if v not in values]
        if missing:
            raise ExpressionError(f"missing variables {missing} for {self.text!r}")
        env = {k: np.asarray(v, dtype=float) for k, v in values.items()}
        with np.errstate(all="ignore"):
            out = self._eval(self._tree, env)
        return out

    def __repr__(self):
        return f"Expression({self.text!r})"


def spatial(text: str):
    """Callable ``f(x, y)``."""
    e = Expression(text, ("x", "y"))
    return lambda x, y: e(x=x, y=y)


def spatiotemporal(text: str):
    """Callable ``f(x, y, t)``."""
    e = Expression(text, ("x", "y", "t"))
    return lambda x, y, t: e(x=x, y=y, t=t)
