"""Expression language: evaluation against the math module, error positions."""

import math

import numpy as np
import pytest

from regularflow.errors import ExpressionError
from regularflow.expressions import parse_expression


@pytest.mark.parametrize("text,arg,expected", [
    ("1 + 2*3", 0.0, 7.0),
    ("(1 + 2)*3", 0.0, 9.0),
    ("2^3^2", 0.0, 512.0),          # right-associative power
    ("-x^2", 3.0, -9.0),            # unary minus binds looser than ^
    ("--x", 2.5, 2.5),
    ("7/2/2", 0.0, 1.75),           # left-associative division
    ("1e-3 + 2E2", 0.0, 200.001),
    ("x*x - 2*x + 1", 4.0, 9.0),
])
def test_arithmetic(text, arg, expected):
    fn = parse_expression(text)
    assert fn(arg) == pytest.approx(expected, rel=0, abs=1e-15)


@pytest.mark.parametrize("name,ref", [
    ("sin", math.sin),
    ("cos", math.cos),
    ("exp", math.exp),
    ("log", math.log),
    ("sqrt", math.sqrt),
    ("atan", math.atan),
])
def test_functions_match_math_module(name, ref):
    fn = parse_expression(f"{name}(x)")
    for arg in (0.25, 1.0, 2.5):
        assert fn(arg) == pytest.approx(ref(arg), rel=1e-15)


def test_variable_aliases_bind_the_same_argument():
    vals = {parse_expression(f"{v} + 1")(2.0) for v in ("x", "y", "r")}
    assert vals == {3.0}


def test_vectorized_evaluation():
    fn = parse_expression("sin(x) + x^2")
    xs = np.linspace(-2.0, 2.0, 11)
    out = fn(xs)
    assert isinstance(out, np.ndarray)
    np.testing.assert_allclose(out, np.sin(xs) + xs**2, rtol=1e-15)


def test_scalar_in_scalar_out():
    assert isinstance(parse_expression("x + 1")(1.0), float)


@pytest.mark.parametrize("bad", ["1 +", "foo(x)", "1 2", "", "   ", "(x", "x )"])
def test_parse_errors(bad):
    with pytest.raises(ExpressionError):
        parse_expression(bad)


def test_error_carries_position():
    with pytest.raises(ExpressionError) as exc:
        parse_expression("1 + bogus(x)")
    msg = str(exc.value)
    assert "bogus" in msg
    assert exc.value.column == 5
    assert exc.value.line == 1


def test_error_position_second_line():
    with pytest.raises(ExpressionError) as exc:
        parse_expression("1 +\n    ?")
    assert exc.value.line == 2


def test_non_string_rejected():
    with pytest.raises(ExpressionError):
        parse_expression(12)


def test_no_attribute_or_call_surface():
    # the grammar has no attribute access, subscripts or arbitrary names,
    # so scenario files cannot reach interpreter internals
    for text in ("__import__(x)", "x.__class__", "x[0]"):
        with pytest.raises(ExpressionError):
            parse_expression(text)
