"""Closed-form coefficient fields written as small arithmetic expressions in x, y, z.

Allowed: numbers, ``pi``, ``e``, the variables ``x, y, z`` and ``L``,
``+ - * / **``, unary minus, and the functions ``sin cos exp``.
"""
from __future__ import annotations

import ast
import math

import numpy as np

from .errors import ConfigError

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id in env:
            return env[node.id]
        if node.id in _CONSTS:
            return _CONSTS[node.id]
        raise ConfigError(f"unknown name {node.id!r} in expression")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        val = _eval(node.operand, env)
        return -val if isinstance(node.op, ast.USub) else val
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        if len(node.args) != 1 or node.keywords:
            raise ConfigError(f"{node.func.id} takes exactly one argument")
        return _FUNCS[node.func.id](_eval(node.args[0], env))
    raise ConfigError(f"unsupported syntax in expression: {ast.dump(node)}")


_NAMES = {"x", "y", "z", "L"} | set(_CONSTS)


def _check(node):
    if isinstance(node, ast.Expression):
        return _check(node.body)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ConfigError(f"unsupported literal {node.value!r}")
    elif isinstance(node, ast.Name):
        if node.id not in _NAMES:
            raise ConfigError(f"unknown name {node.id!r} in expression")
    elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check(node.left)
        _check(node.right)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        _check(node.operand)
    elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        if len(node.args) != 1 or node.keywords:
            raise ConfigError(f"{node.func.id} takes exactly one argument")
        _check(node.args[0])
    else:
        raise ConfigError(f"unsupported syntax in expression: {type(node).__name__}")


def parse_expression(text: str) -> ast.Expression:
    """Parse and whitelist-check an expression; the tree is safe to hand to the evaluator."""
    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None
    _check(tree)
    return tree


def evaluate_expression(text: str, x, y, z, L: float = 1.0) -> np.ndarray:
    tree = parse_expression(text)
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(all="ignore"):
        out = _eval(tree, {"x": x, "y": np.asarray(y, dtype=np.float64), "z": np.asarray(z, dtype=np.float64), "L": float(L)})
    out = np.broadcast_to(np.asarray(out, dtype=np.float64), x.shape).copy()
    if not np.all(np.isfinite(out)):
        raise ConfigError(f"expression {text!r} produced non-finite values")
    return out


def field_from_expression(M, text: str):
    x, y, z = M.coordinates()
    return M.field(evaluate_expression(text, x, y, z, M.side_length))
