import doctest

import numpy as np
import pytest

import kirchplate.expr
from kirchplate.expr import Expression, ExpressionError, spatial, spatiotemporal


def test_doctests():
    assert doctest.testmod(kirchplate.expr).failed == 0


@pytest.mark.parametrize("text, value", [
    ("1 + 2*3", 7.0),
    ("2^3^2", 512.0),
    ("-2^2", -4.0),
    ("(1 + 2) * 3", 9.0),
    ("exp(0) + cos(0) - sin(0)", 2.0),
    ("pi", np.pi),
    ("1e-3 * 4", 0.004),
])
def test_constants(text, value):
    assert Expression(text).constant == pytest.approx(value)


def test_variables_vectorise():
    f = spatial("x^2 + 3*y")
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(f(x, 2 * x), x**2 + 6 * x)


def test_time_dependence():
    f = spatiotemporal("sin(pi*t) * x")
    assert f(2.0, 0.0, 0.5) == pytest.approx(2.0)


def test_constant_is_none_when_variables_used():
    assert Expression("x + 1").constant is None


@pytest.mark.parametrize("text", [
    "", "x +", "__import__('os')", "x.real", "[1, 2]", "abs(x)", "sin(x, y)",
    "z", "t", "x if y else 1", "True", "'a'", "x % 2", "lambda: 1",
])
def test_rejects(text):
    with pytest.raises(ExpressionError):
        Expression(text, ("x", "y"))


def test_missing_variable_at_call():
    with pytest.raises(ExpressionError):
        Expression("x + y")(x=1.0)
