import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdii.field_core import (
    BoundaryTrace,
    Grid2D,
    ScalarField,
    VectorField2,
    coarea_check,
    divergence,
    gradient,
    hessian,
    inner,
    integrate,
    lp_norm,
)

# --- oracles ---------------------------------------------------------------


def test_gradient_exact_on_quadratics():
    g = Grid2D.square(17)
    u = ScalarField.from_function(g, lambda x, y: 3 * x * x - 2 * x * y + y * y + x)
    X, Y = g.mesh()
    d = gradient(u)
    np.testing.assert_allclose(d.x.values, 6 * X - 2 * Y + 1, atol=1e-11)
    np.testing.assert_allclose(d.y.values, -2 * X + 2 * Y, atol=1e-11)


def test_gradient_second_order():
    errs = []
    for n in (33, 65, 129):
        g = Grid2D.square(n)
        u = ScalarField.from_function(g, lambda x, y: np.sin(2 * x) * np.cos(3 * y))
        X, Y = g.mesh()
        errs.append(np.max(np.abs(gradient(u).x.values - 2 * np.cos(2 * X) * np.cos(3 * Y))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.9)


def test_hessian_sin_oracle():
    g = Grid2D.square(129)
    u = ScalarField.from_function(g, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    X, Y = g.mesh()
    uxx, uxy, uyy = hessian(u)
    exact = -np.pi**2 * np.sin(np.pi * X) * np.sin(np.pi * Y)
    assert np.max(np.abs(uxx - exact)) < 5e-3
    assert np.max(np.abs(uyy - exact)) < 5e-3
    assert np.max(np.abs(uxy - np.pi**2 * np.cos(np.pi * X) * np.cos(np.pi * Y))) < 5e-3


def test_divergence_of_position_field():
    g = Grid2D.square(9)
    X, Y = g.mesh()
    v = VectorField2.from_arrays(g, X, Y)
    np.testing.assert_allclose(divergence(v).values, 2.0, atol=1e-12)


def test_trapezoid_exact_on_bilinear():
    g = Grid2D.rectangle(11, 7, 0.0, 2.0, -1.0, 1.0)
    u = ScalarField.from_function(g, lambda x, y: 1 + x + 2 * y + x * y)
    # integral over [0,2] x [-1,1]
    assert integrate(u) == pytest.approx(4 + 4 + 0 + 0, rel=1e-13)


def test_lp_norms_known_values():
    g = Grid2D.square(65)
    c = ScalarField.constant(g, -2.0)
    assert lp_norm(c, 1) == pytest.approx(2.0)
    assert lp_norm(c, 2) == pytest.approx(2.0)
    assert lp_norm(c, np.inf) == 2.0
    with pytest.raises(ValueError):
        lp_norm(c, 3)


def test_coarea_linear_and_degenerate():
    g = Grid2D.square(65)
    u = ScalarField.from_function(g, lambda x, y: x + 0.5 * y)
    res = coarea_check(u, 64)
    assert res.rel_diff < 1e-3
    const = coarea_check(ScalarField.constant(g, 1.0), 16)
    assert const.degenerate and const.rhs == 0.0
    with pytest.raises(ValueError):
        coarea_check(u, 4)


# --- grid and types --------------------------------------------------------


def test_boundary_indices_counterclockwise():
    g = Grid2D(4, 3, 1.0, 1.0)
    idx = g.boundary_indices()
    assert list(idx) == [0, 1, 2, 3, 7, 11, 10, 9, 8, 4]
    assert idx.size == 2 * (4 + 3) - 4


def test_perimeter_coordinate_corners():
    g = Grid2D.square(5)
    assert g.perimeter_coordinate(0.0, 0.0) == 0.0
    assert g.perimeter_coordinate(1.0, 0.5) == pytest.approx(1.5)
    assert g.perimeter_coordinate(0.25, 1.0) == pytest.approx(2.75)
    assert g.perimeter_coordinate(0.0, 0.5) == pytest.approx(3.5)


def test_scalar_field_rejects_nonfinite_and_is_read_only():
    g = Grid2D.square(3)
    with pytest.raises(ValueError):
        ScalarField(g, np.full(g.shape, np.nan))
    u = ScalarField.constant(g, 1.0)
    with pytest.raises(ValueError):
        u.values[0, 0] = 2.0


def test_bilinear_sample_exact_on_bilinear_field():
    g = Grid2D.square(9)
    u = ScalarField.from_function(g, lambda x, y: 2 * x - y + x * y)
    for px, py in [(0.13, 0.77), (0.5, 0.5), (1.0, 0.0), (0.999, 0.001)]:
        assert u.sample(px, py) == pytest.approx(2 * px - py + px * py, abs=1e-12)


def test_boundary_trace_canonical_order_and_coverage():
    g = Grid2D.square(5)
    u = ScalarField.from_function(g, lambda x, y: x + 10 * y)
    ref = BoundaryTrace.from_field(u)
    perm = np.random.default_rng(0).permutation(ref.indices.size)
    shuffled = BoundaryTrace(g, ref.indices[perm], ref.values[perm])
    np.testing.assert_array_equal(shuffled.indices, ref.indices)
    np.testing.assert_array_equal(shuffled.values, ref.values)
    with pytest.raises(ValueError):
        BoundaryTrace(g, ref.indices[1:], ref.values[1:])
    filled = ref.fill(np.nan)
    assert np.isnan(filled[2, 2]) and filled[0, 4] == pytest.approx(1.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid2D(1, 5, 0.1, 0.1)
    with pytest.raises(ValueError):
        Grid2D(5, 5, -0.1, 0.1)


# --- properties ------------------------------------------------------------

coeffs = st.lists(st.floats(-3, 3), min_size=6, max_size=6)


def _bump_field(g, c):
    X, Y = g.mesh()
    w = np.zeros(g.shape)
    w[3:-3, 3:-3] = 1.0
    vals = (c[0] + c[1] * X + c[2] * Y + c[3] * X * Y + c[4] * np.sin(3 * X) + c[5] * np.cos(2 * Y))
    return ScalarField(g, vals * w)


@given(coeffs, coeffs)
def test_gradient_divergence_duality(cu, cv):
    g = Grid2D.square(17)
    u = _bump_field(g, cu)
    X, Y = g.mesh()
    v = VectorField2.from_arrays(g, cv[0] + cv[1] * X * Y + cv[2] * np.sin(X),
                                 cv[3] + cv[4] * Y * Y + cv[5] * np.cos(X * Y))
    lhs = inner(gradient(u), v)
    rhs = -inner(u, divergence(v))
    assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(lhs)))


@given(st.lists(st.floats(-1e3, 1e3), min_size=25, max_size=25),
       st.lists(st.floats(-1e3, 1e3), min_size=25, max_size=25))
def test_holder_chain(a, b):
    g = Grid2D.square(5, length=2.0)
    u = ScalarField(g, np.array(a).reshape(5, 5))
    v = ScalarField(g, np.array(b).reshape(5, 5))
    tol = 1e-9 * (1 + lp_norm(u, np.inf) * lp_norm(v, np.inf))
    assert abs(inner(u, v)) <= lp_norm(u, 2) * lp_norm(v, 2) + tol
    area = g.area
    assert lp_norm(u, 1) <= np.sqrt(area) * lp_norm(u, 2) + tol
    assert lp_norm(u, 2) <= np.sqrt(area) * lp_norm(u, np.inf) + tol


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_gradient_is_linear(a, b, c):
    g = Grid2D.square(9)
    u = ScalarField.from_function(g, lambda x, y: np.sin(x + 2 * y))
    w = ScalarField.from_function(g, lambda x, y: x * y * y)
    lhs = gradient(u * a + w * b + c)
    np.testing.assert_allclose(lhs.x.values, a * gradient(u).x.values + b * gradient(w).x.values, atol=1e-9)
