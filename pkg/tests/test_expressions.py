import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdii.expressions import Expression, ExpressionError, field_from_expression, trace_from_spec
from cdii.field_core import Grid2D


@pytest.mark.parametrize(
    "text, x, y, expected",
    [
        ("1", 0.3, 0.7, 1.0),
        ("2^3*2", 0, 0, 16.0),
        ("2**3", 0, 0, 8.0),
        ("-x^2", 3.0, 0, -9.0),
        ("1+x", 0.5, 0, 1.5),
        ("x/y - 1", 1.0, 4.0, -0.75),
        ("exp(0) + sin(pi/2) + cos(0) + log(e) + sqrt(4)", 0, 0, 6.0),
        ("(x + y) * (x - y)", 3.0, 2.0, 5.0),
    ],
)
def test_evaluation(text, x, y, expected):
    assert float(Expression(text)(x, y)) == pytest.approx(expected)


@pytest.mark.parametrize(
    "text",
    ["__import__('os')", "x.real", "z + 1", "exp(x, y)", "tan(x)", "x if y else 1", "[x]", "'a'", "x ==", "True"],
)
def test_rejects_anything_outside_the_grammar(text):
    with pytest.raises(ExpressionError):
        Expression(text)


def test_field_must_be_finite_everywhere():
    g = Grid2D.square(5)
    with pytest.raises(ExpressionError, match="not finite"):
        field_from_expression("log(x)", g)
    assert field_from_expression("3", g).values.shape == (5, 5)


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_matches_numpy(x, y):
    e = Expression("exp(-((x-0.5)^2 + (y-0.5)^2)) * cos(x) + 0.25*y")
    assert float(e(x, y)) == pytest.approx(np.exp(-((x - 0.5) ** 2 + (y - 0.5) ** 2)) * np.cos(x) + 0.25 * y)


def test_trace_specs():
    g = Grid2D.square(9)
    lin = trace_from_spec("linear", g)
    expr = trace_from_spec("x", g)
    np.testing.assert_array_equal(lin.values, expr.values)
    tilt = trace_from_spec("tilted-linear", g, 0.0)
    np.testing.assert_allclose(tilt.values, lin.values)
    lay = trace_from_spec("layered", g)
    assert lay.values.max() == pytest.approx(1.0)
