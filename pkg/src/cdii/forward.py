"""Forward conductivity solve: div(sigma grad u) = 0 with Dirichlet data.

The five-point conservative stencil uses harmonic-mean face conductivities.
Boundary rows are eliminated and the interior SPD system is solved with
Jacobi-preconditioned conjugate gradients.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .field_core import (
    BoundaryTrace,
    Grid2D,
    ScalarField,
    VectorField2,
    gradient,
    hessian,
)

logger = logging.getLogger(__name__)

GRAD_THRESHOLD = 1e-10


class SolverError(RuntimeError):
    """Iterative solve did not reach its tolerance."""

    def __init__(self, message, best=None, residual=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class AdmissibilityError(ValueError):
    """A field violates a hard bound (e.g. non-positive conductivity)."""


@dataclass(frozen=True)
class AdmissibilityBounds:
    m: float
    M: float
    sigma0: float
    sigma1: float
    sigma2: float = np.inf

    def __post_init__(self):
        if not (0 < self.m <= self.M):
            raise ValueError(f"need 0 < m <= M, got m={self.m}, M={self.M}")
        if not (0 < self.sigma0 <= self.sigma1 <= self.sigma2):
            raise ValueError(
                f"need 0 < sigma0 <= sigma1 <= sigma2, got {self.sigma0}, {self.sigma1}, {self.sigma2}"
            )

    def as_dict(self):
        return {
            "m": self.m,
            "M": self.M,
            "sigma0": self.sigma0,
            "sigma1": self.sigma1,
            "sigma2": None if np.isinf(self.sigma2) else self.sigma2,
        }


DEFAULT_BOUNDS = AdmissibilityBounds(m=1e-3, M=1e3, sigma0=1e-3, sigma1=1e3)


@dataclass(frozen=True)
class ConductivityProblem:
    sigma: ScalarField
    f: BoundaryTrace
    bounds: AdmissibilityBounds = DEFAULT_BOUNDS

    def __post_init__(self):
        if not self.sigma.grid.same_as(self.f.grid):
            raise ValueError("sigma and boundary data live on different grids")
        smin = float(self.sigma.values.min())
        if smin <= 0:
            raise AdmissibilityError(f"conductivity must be positive (sigma0 violated: min sigma = {smin:g})")
        if smin <= self.bounds.sigma0:
            raise AdmissibilityError(
                f"sigma0 violated: min sigma = {smin:g} <= sigma0 = {self.bounds.sigma0:g}"
            )
        smax = float(self.sigma.values.max())
        if smax > self.bounds.sigma1:
            raise AdmissibilityError(
                f"sigma1 violated: max sigma = {smax:g} > sigma1 = {self.bounds.sigma1:g}"
            )


@dataclass(frozen=True)
class ForwardSolution:
    u: ScalarField
    J: VectorField2
    a: ScalarField
    residual_norm: float
    iterations: int
    sigma: ScalarField = field(repr=False)


def _harmonic(s1, s2):
    return 2.0 * s1 * s2 / (s1 + s2)


def assemble(sigma: ScalarField):
    """Full-grid stencil matrix (boundary rows included) for ``-div(sigma grad u)``.

    Returns a CSR matrix acting on flattened node vectors.
    """
    g = sigma.grid
    s = sigma.values
    ny, nx = g.shape
    idx = np.arange(nx * ny).reshape(ny, nx)
    cx = _harmonic(s[:, 1:], s[:, :-1]) / g.hx**2  # faces between (j,i) and (j,i+1)
    cy = _harmonic(s[1:, :], s[:-1, :]) / g.hy**2  # faces between (j,i) and (j+1,i)
    rows, cols, vals = [], [], []
    diag = np.zeros((ny, nx))
    for c, a, b in ((cx, idx[:, :-1], idx[:, 1:]), (cy, idx[:-1, :], idx[1:, :])):
        rows += [a.ravel(), b.ravel()]
        cols += [b.ravel(), a.ravel()]
        vals += [-c.ravel(), -c.ravel()]
    diag[:, :-1] += cx
    diag[:, 1:] += cx
    diag[:-1, :] += cy
    diag[1:, :] += cy
    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag.ravel())
    n = nx * ny
    return sps.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def pcg(A, b, x0=None, tol=1e-10, max_iter=None, M_diag=None):
    """Preconditioned conjugate gradients with a diagonal preconditioner.

    Stops when ``||b - A x|| <= tol * ||b||``. Returns ``(x, rel_residual, iterations)``;
    raises :class:`SolverError` carrying the best iterate otherwise.
    """
    n = b.size
    max_iter = max_iter or 20 * n
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    dinv = 1.0 / (A.diagonal() if M_diag is None else M_diag)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        bnorm = 1.0
    r = b - A @ x
    rel = np.linalg.norm(r) / bnorm
    if rel <= tol:
        return x, rel, 0
    z = dinv * r
    p = z.copy()
    rz = r @ z
    best_x, best_rel = x.copy(), rel
    for it in range(1, max_iter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rel = np.linalg.norm(r) / bnorm
        if rel < best_rel:
            best_rel = rel
            best_x = x.copy()
        if rel <= tol:
            # guard against drift of the recursive residual
            true_rel = np.linalg.norm(b - A @ x) / bnorm
            if true_rel <= tol:
                return x, true_rel, it
            r = b - A @ x
            z = dinv * r
            p = z.copy()
            rz = r @ z
            continue
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"conjugate gradients stalled at relative residual {best_rel:.3e} after {max_iter} iterations",
        best=best_x,
        residual=best_rel,
        iterations=max_iter,
    )


def coons_patch(f: BoundaryTrace) -> np.ndarray:
    """Transfinite interpolation of the trace into the interior (initial guess)."""
    g = f.grid
    b = f.fill()
    sx = (g.x - g.ox) / g.width
    sy = (g.y - g.oy) / g.height
    X, Y = np.meshgrid(sx, sy)
    bottom, top = b[0, :][None, :], b[-1, :][None, :]
    left, right = b[:, 0][:, None], b[:, -1][:, None]
    corners = (
        (1 - X) * (1 - Y) * b[0, 0] + X * (1 - Y) * b[0, -1] + (1 - X) * Y * b[-1, 0] + X * Y * b[-1, -1]
    )
    out = (1 - Y) * bottom + Y * top + (1 - X) * left + X * right - corners
    out[g.boundary_mask()] = b[g.boundary_mask()]
    return out


def solve_dirichlet(sigma: ScalarField, f: BoundaryTrace, tol=1e-10, max_iter=None):
    """Solve the conductivity equation; returns ``(u_values, rel_residual, iterations)``."""
    g = sigma.grid
    A = assemble(sigma)
    bmask = g.boundary_mask().ravel()
    interior = np.flatnonzero(~bmask)
    ub = f.fill().ravel()
    A_ii = A[interior][:, interior]
    A_ib = A[interior][:, np.flatnonzero(bmask)]
    rhs = -A_ib @ ub[bmask]
    x0 = coons_patch(f).ravel()[interior]
    x, rel, its = pcg(A_ii.tocsr(), rhs, x0=x0, tol=tol, max_iter=max_iter)
    u = ub.copy()
    u[interior] = x
    return u.reshape(g.shape), rel, its


def current_density(sigma: ScalarField, u: ScalarField) -> VectorField2:
    """Ohm's law ``J = -sigma grad u``."""
    return gradient(u).scale(-sigma.values)


def solve_conductivity(p: ConductivityProblem, tol: float = 1e-10, max_iter=None) -> ForwardSolution:
    if tol <= 0:
        raise ValueError("tol must be positive")
    u_vals, rel, its = solve_dirichlet(p.sigma, p.f, tol=tol, max_iter=max_iter)
    u = ScalarField(p.sigma.grid, u_vals)
    J = current_density(p.sigma, u)
    logger.debug("forward solve: %d iterations, residual %.3e", its, rel)
    return ForwardSolution(u=u, J=J, a=J.magnitude(), residual_norm=rel, iterations=its, sigma=p.sigma)


def sigma2_proxy(sigma: ScalarField) -> float:
    """Discrete C2 size of sigma: node max of |s| + |grad s| + |D2 s| (Frobenius)."""
    gs = gradient(sigma).magnitude().values
    sxx, sxy, syy = hessian(sigma)
    d2 = np.sqrt(sxx**2 + 2 * sxy**2 + syy**2)
    return float(np.max(np.abs(sigma.values) + gs + d2))


@dataclass
class AdmissibilityReport:
    a_min: float
    a_max: float
    grad_min: float
    sigma_min: float
    sigma_max: float
    sigma2_proxy: float
    current_ok: bool
    sigma_ok: bool
    gradient_ok: bool
    sigma2_ok: bool
    critical_nodes: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.current_ok and self.sigma_ok and self.gradient_ok and self.sigma2_ok

    def as_dict(self):
        d = dict(self.__dict__)
        d["passed"] = self.passed
        d["sigma2_proxy_note"] = "discrete proxy: max|s| + |grad s| + |D2 s| by finite differences"
        d["critical_nodes"] = [list(map(int, ij)) for ij in self.critical_nodes]
        return d


def admissibility_check(
    sol: ForwardSolution, b: AdmissibilityBounds, grad_threshold: float = GRAD_THRESHOLD
) -> AdmissibilityReport:
    a = sol.a.values
    gmag = gradient(sol.u).magnitude().values
    s = sol.sigma.values
    crit = np.argwhere(gmag <= grad_threshold)
    proxy = sigma2_proxy(sol.sigma)
    rep = AdmissibilityReport(
        a_min=float(a.min()),
        a_max=float(a.max()),
        grad_min=float(gmag.min()),
        sigma_min=float(s.min()),
        sigma_max=float(s.max()),
        sigma2_proxy=proxy,
        current_ok=bool(b.m <= a.min() and a.max() <= b.M),
        sigma_ok=bool(b.sigma0 < s.min() and s.max() <= b.sigma1),
        gradient_ok=crit.size == 0,
        sigma2_ok=bool(proxy <= b.sigma2),
        critical_nodes=[tuple(ij) for ij in crit[:, ::-1]],  # (i, j) = (column, row)
    )
    if not rep.current_ok:
        rep.violations.append(f"m <= |J| <= M violated: |J| in [{rep.a_min:.6g}, {rep.a_max:.6g}], m={b.m:g}, M={b.M:g}")
    if not rep.sigma_ok:
        rep.violations.append(
            f"sigma0 < sigma <= sigma1 violated: sigma in [{rep.sigma_min:.6g}, {rep.sigma_max:.6g}]"
        )
    if not rep.gradient_ok:
        rep.violations.append(f"|grad u| <= {grad_threshold:g} at {len(crit)} node(s)")
    if not rep.sigma2_ok:
        rep.violations.append(f"sigma2 proxy {proxy:.6g} exceeds {b.sigma2:g}")
    return rep


def two_to_one_trace(grid: Grid2D, kind: str = "linear", theta: float = np.pi / 4) -> BoundaryTrace:
    """Boundary trace of x, or of cos(theta) x + sin(theta) y for ``tilted-linear``."""
    if kind == "linear":
        return BoundaryTrace.from_function(grid, lambda x, y: x)
    if kind in ("tilted-linear", "tilted"):
        c, s = np.cos(theta), np.sin(theta)
        return BoundaryTrace.from_function(grid, lambda x, y: c * x + s * y)
    raise ValueError(f"unknown trace kind {kind!r}")


def layered_trace(grid: Grid2D) -> BoundaryTrace:
    """Trace of log(1+x)/log 2, the potential of the layered medium sigma = 1+x."""
    return BoundaryTrace.from_function(grid, lambda x, y: np.log1p(x) / np.log(2.0))


def count_boundary_extrema(f: BoundaryTrace, rtol: float = 1e-12) -> int:
    """Number of local extrema of the trace along the closed boundary cycle.

    Runs of equal values (plateaus) count once.
    """
    v = np.asarray(f.values, dtype=float)
    scale = max(1.0, float(np.max(np.abs(v))))
    runs = [v[0]]
    for val in v[1:]:
        if abs(val - runs[-1]) > rtol * scale:
            runs.append(val)
    if len(runs) > 1 and abs(runs[0] - runs[-1]) <= rtol * scale:
        runs.pop()
    n = len(runs)
    if n < 3:
        return n if n == 2 else 0
    r = np.array(runs)
    prev, nxt = np.roll(r, 1), np.roll(r, -1)
    is_max = (r > prev) & (r > nxt)
    is_min = (r < prev) & (r < nxt)
    return int(is_max.sum() + is_min.sum())
