"""Grids, node-centered fields and the discrete calculus used everywhere else.

Fields live on a uniform Cartesian grid of nodes. Values are stored as
``(ny, nx)`` arrays, row ``j`` holding the nodes with ``y = oy + j*hy``, so
flattening in C order gives the row-major, bottom-row-first layout of the
grid-text format.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    hx: float
    hy: float
    ox: float = 0.0
    oy: float = 0.0

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"grid needs at least 3 nodes per axis, got {self.nx}x{self.ny}")
        if not (self.hx > 0 and self.hy > 0):
            raise ValueError("grid spacings must be positive")

    @classmethod
    def square(cls, n: int, length: float = 1.0, origin=(0.0, 0.0)) -> "Grid2D":
        """n x n nodes covering ``[ox, ox+length] x [oy, oy+length]``."""
        return cls(n, n, length / (n - 1), length / (n - 1), float(origin[0]), float(origin[1]))

    @classmethod
    def rectangle(cls, nx, ny, x0, x1, y0, y1) -> "Grid2D":
        return cls(nx, ny, (x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1), float(x0), float(y0))

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def width(self):
        return (self.nx - 1) * self.hx

    @property
    def height(self):
        return (self.ny - 1) * self.hy

    @property
    def area(self):
        return self.width * self.height

    @property
    def h(self):
        return min(self.hx, self.hy)

    @property
    def x(self):
        return self.ox + self.hx * np.arange(self.nx)

    @property
    def y(self):
        return self.oy + self.hy * np.arange(self.ny)

    def mesh(self):
        """Return ``(X, Y)`` node coordinate arrays of shape ``(ny, nx)``."""
        return np.meshgrid(self.x, self.y)

    def boundary_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        return mask

    def quad_weights(self):
        """Trapezoidal weights, shape ``(ny, nx)``; they sum to the area."""
        wx = np.full(self.nx, self.hx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny, self.hy)
        wy[[0, -1]] *= 0.5
        return np.outer(wy, wx)

    def boundary_indices(self):
        """Flat indices of the boundary nodes, counterclockwise from the lower-left corner."""
        nx, ny = self.nx, self.ny
        bottom = [i for i in range(nx)]
        right = [j * nx + nx - 1 for j in range(1, ny)]
        top = [(ny - 1) * nx + i for i in range(nx - 2, -1, -1)]
        left = [j * nx for j in range(ny - 2, 0, -1)]
        return np.array(bottom + right + top + left, dtype=np.int64)

    def perimeter_coordinate(self, px, py):
        """Counterclockwise arclength position of a boundary point, from the lower-left corner."""
        w, hgt = self.width, self.height
        x = px - self.ox
        y = py - self.oy
        tol = 1e-9 * max(w, hgt)
        if abs(y) <= tol:
            return x
        if abs(x - w) <= tol:
            return w + y
        if abs(y - hgt) <= tol:
            return w + hgt + (w - x)
        return 2 * w + hgt + (hgt - y)

    def same_as(self, other: "Grid2D") -> bool:
        return (
            self.nx == other.nx
            and self.ny == other.ny
            and np.isclose(self.hx, other.hx, rtol=1e-12, atol=0)
            and np.isclose(self.hy, other.hy, rtol=1e-12, atol=0)
            and np.isclose(self.ox, other.ox, rtol=0, atol=1e-12)
            and np.isclose(self.oy, other.oy, rtol=0, atol=1e-12)
        )


@dataclass(frozen=True)
class ScalarField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid2D, fn) -> "ScalarField":
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(fn(X, Y), grid.shape))

    @classmethod
    def constant(cls, grid: Grid2D, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)))

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def flat(self):
        return self.values.ravel()

    def sample(self, px, py):
        """Bilinear interpolation at a point inside the grid rectangle."""
        g = self.grid
        fx = np.clip((px - g.ox) / g.hx, 0, g.nx - 1)
        fy = np.clip((py - g.oy) / g.hy, 0, g.ny - 1)
        i = min(int(np.floor(fx)), g.nx - 2)
        j = min(int(np.floor(fy)), g.ny - 2)
        ax, ay = fx - i, fy - j
        v = self.values
        return float(
            (1 - ax) * (1 - ay) * v[j, i]
            + ax * (1 - ay) * v[j, i + 1]
            + (1 - ax) * ay * v[j + 1, i]
            + ax * ay * v[j + 1, i + 1]
        )

    def __neg__(self):
        return self.with_values(-self.values)

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, other):
        return self.with_values(self.values * _vals(other))

    __rmul__ = __mul__
    __radd__ = __add__

    def __truediv__(self, other):
        return self.with_values(self.values / _vals(other))


def _vals(obj):
    return obj.values if isinstance(obj, ScalarField) else obj


@dataclass(frozen=True)
class VectorField2:
    x: ScalarField
    y: ScalarField

    def __post_init__(self):
        if not self.x.grid.same_as(self.y.grid):
            raise ValueError("vector components must share one grid")

    @property
    def grid(self):
        return self.x.grid

    @classmethod
    def from_arrays(cls, grid: Grid2D, vx, vy) -> "VectorField2":
        return cls(ScalarField(grid, vx), ScalarField(grid, vy))

    def magnitude(self) -> ScalarField:
        return self.x.with_values(np.hypot(self.x.values, self.y.values))

    def dot(self, other: "VectorField2") -> ScalarField:
        return self.x.with_values(self.x.values * other.x.values + self.y.values * other.y.values)

    def scale(self, s) -> "VectorField2":
        s = _vals(s)
        return VectorField2(self.x.with_values(self.x.values * s), self.y.with_values(self.y.values * s))

    def __sub__(self, other: "VectorField2") -> "VectorField2":
        return VectorField2(self.x - other.x, self.y - other.y)

    def __add__(self, other: "VectorField2") -> "VectorField2":
        return VectorField2(self.x + other.x, self.y + other.y)


@dataclass(frozen=True)
class BoundaryTrace:
    """Dirichlet data: one value per boundary node, counterclockwise order."""

    grid: Grid2D
    indices: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        vals = np.asarray(self.values, dtype=float)
        expected = self.grid.boundary_indices()
        if idx.shape != expected.shape or not np.array_equal(np.sort(idx), np.sort(expected)):
            raise ValueError("boundary trace must cover every boundary node exactly once")
        if vals.shape != idx.shape or not np.all(np.isfinite(vals)):
            raise ValueError("boundary trace values must be finite, one per node")
        # canonical counterclockwise order
        order = {int(k): n for n, k in enumerate(expected)}
        perm = np.argsort([order[int(k)] for k in idx])
        idx, vals = idx[perm], vals[perm]
        idx.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_field(cls, u: ScalarField) -> "BoundaryTrace":
        idx = u.grid.boundary_indices()
        return cls(u.grid, idx, u.flat()[idx])

    @classmethod
    def from_function(cls, grid: Grid2D, fn) -> "BoundaryTrace":
        return cls.from_field(ScalarField.from_function(grid, fn))

    def fill(self, interior=0.0) -> np.ndarray:
        """Array on the full grid holding the trace on the boundary and ``interior`` elsewhere."""
        out = np.full(self.grid.nx * self.grid.ny, float(interior))
        out[self.indices] = self.values
        return out.reshape(self.grid.shape)


# ---------------------------------------------------------------------------
# discrete operators


def _d1(v, h, axis):
    return np.gradient(v, h, axis=axis, edge_order=2)


def gradient(u: ScalarField) -> VectorField2:
    """Central differences inside, second-order one-sided differences on the boundary."""
    g = u.grid
    return VectorField2.from_arrays(g, _d1(u.values, g.hx, 1), _d1(u.values, g.hy, 0))


def divergence(v: VectorField2) -> ScalarField:
    """Divergence with the same stencils as :func:`gradient`.

    For ``u`` supported at least three nodes away from the boundary the pair is
    exactly skew-adjoint under the trapezoidal inner product.
    """
    g = v.grid
    return ScalarField(g, _d1(v.x.values, g.hx, 1) + _d1(v.y.values, g.hy, 0))


def _d2(v, h, axis):
    v = np.moveaxis(v, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
    if v.shape[0] >= 4:
        out[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h**2
        out[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / h**2
    else:
        out[0] = out[1]
        out[-1] = out[-2]
    return np.moveaxis(out, 0, axis)


def hessian(u: ScalarField):
    """Return ``(u_xx, u_xy, u_yy)`` as arrays."""
    g = u.grid
    uxx = _d2(u.values, g.hx, 1)
    uyy = _d2(u.values, g.hy, 0)
    uxy = _d1(_d1(u.values, g.hx, 1), g.hy, 0)
    return uxx, uxy, uyy


def integrate(u) -> float:
    """Trapezoidal quadrature over the grid rectangle."""
    if isinstance(u, ScalarField):
        return float(np.sum(u.grid.quad_weights() * u.values))
    raise TypeError("integrate expects a ScalarField")


def hessian_l1(u: ScalarField) -> float:
    uxx, uxy, uyy = hessian(u)
    return integrate(u.with_values(np.abs(uxx) + 2 * np.abs(uxy) + np.abs(uyy)))


def lp_norm(u: ScalarField, p) -> float:
    if p in (np.inf, "inf", "∞"):
        return float(np.max(np.abs(u.values)))
    if p == 1:
        return integrate(u.with_values(np.abs(u.values)))
    if p == 2:
        return float(np.sqrt(integrate(u.with_values(u.values**2))))
    raise ValueError(f"unsupported norm order {p!r}; use 1, 2 or inf")


def inner(a, b) -> float:
    """Trapezoidal L2 inner product of two scalar or two vector fields."""
    if isinstance(a, VectorField2):
        return integrate(a.dot(b))
    return integrate(a * b)


def grad_l1(u: ScalarField) -> float:
    """``∫|∇u|`` with the central-difference gradient."""
    return lp_norm(gradient(u).magnitude(), 1)


@dataclass(frozen=True)
class CoareaResult:
    lhs: float
    rhs: float
    degenerate: bool
    n_levels: int

    @property
    def rel_diff(self):
        if self.lhs == 0:
            return 0.0 if self.rhs == 0 else np.inf
        return abs(self.lhs - self.rhs) / abs(self.lhs)


def coarea_check(u: ScalarField, n_levels: int = 256) -> CoareaResult:
    """Compare ``∫|∇u|`` with the sum of level-set lengths times the level spacing.

    Levels are the midpoints of ``n_levels`` equal slices of ``range(u)``.
    """
    from .level_sets import level_length

    if n_levels < 8:
        raise ValueError("coarea_check needs n_levels >= 8")
    lhs = grad_l1(u)
    lo, hi = float(u.values.min()), float(u.values.max())
    if hi - lo <= 1e-14 * max(1.0, abs(lo), abs(hi)):
        return CoareaResult(lhs, 0.0, True, n_levels)
    dt = (hi - lo) / n_levels
    levels = lo + dt * (np.arange(n_levels) + 0.5)
    rhs = sum(level_length(u, t) for t in levels) * dt
    return CoareaResult(lhs, float(rhs), False, n_levels)
