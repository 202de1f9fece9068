"""Weighted least-gradient problem: minimize the integral of a|grad w| with w = f on the boundary.

The solver is a first-order primal-dual (Chambolle-Pock) iteration on the
saddle problem

    min_u max_{|phi| <= a}  <K u, phi>

where ``K`` is the forward-difference gradient evaluated on grid cells
(identified with their lower-left node; the last row and column carry no
cell). The dual iterate is projected pointwise onto the ball of radius
``a`` and the primal iterate is re-pinned to the Dirichlet data after every
step. The converged dual field is the discrete divergence-free current of
the structure theorem for least-gradient minimizers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .field_core import (
    BoundaryTrace,
    ScalarField,
    VectorField2,
    gradient,
    integrate,
)
from .forward import DEFAULT_BOUNDS, AdmissibilityBounds, AdmissibilityError, solve_dirichlet

logger = logging.getLogger(__name__)

FLOOR_WARN_FRACTION = 0.10
PD_BALANCE = 0.2  # tuned on bump, layered and round-trip weights


class LGPConvergenceError(RuntimeError):
    """Primal-dual iteration hit ``max_iter`` above ``tol_gap``; ``best`` holds the last iterate."""

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best
        self.gap = best.gap


@dataclass(frozen=True)
class LGPProblem:
    a: ScalarField
    f: BoundaryTrace
    bounds: AdmissibilityBounds = DEFAULT_BOUNDS

    def __post_init__(self):
        if not self.a.grid.same_as(self.f.grid):
            raise ValueError("weight and boundary data live on different grids")
        lo, hi = float(self.a.values.min()), float(self.a.values.max())
        if lo < self.bounds.m or hi > self.bounds.M:
            raise AdmissibilityError(
                f"weight outside [m, M] = [{self.bounds.m:g}, {self.bounds.M:g}]: a in [{lo:.6g}, {hi:.6g}]"
            )


@dataclass(frozen=True)
class PDParams:
    tau: float | None = None
    sig: float | None = None
    theta: float = 1.0
    max_iter: int = 200_000
    tol_gap: float = 1e-6
    check_every: int = 50

    def resolved(self, grid, balance: float = 1.0) -> "PDParams":
        """Fill in default steps ``tau = r/L``, ``sig = 1/(r L)`` with ``r = balance``.

        ``L`` bounds the norm of the cell gradient. The solver passes
        ``r = PD_BALANCE * range(f) / mean(a)`` so its iterates are
        equivariant under rescaling of either the weight or the boundary data.
        """
        L = np.sqrt(4.0 * (1.0 / grid.hx**2 + 1.0 / grid.hy**2))
        if not balance > 0:
            balance = 1.0
        tau = self.tau if self.tau is not None else balance / L
        sig = self.sig if self.sig is not None else 1.0 / (balance * L)
        if tau <= 0 or sig <= 0:
            raise ValueError("step sizes must be positive")
        if tau * sig * L**2 > 1.0 + 1e-12:
            raise ValueError(f"step condition violated: tau*sig*||K||^2 = {tau * sig * L**2:.4g} > 1")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        return PDParams(tau, sig, self.theta, self.max_iter, self.tol_gap, self.check_every)


@dataclass(frozen=True)
class LGPSolution:
    u: ScalarField
    phi: VectorField2
    energy: float
    gap: float
    iterations: int
    converged: bool = True
    history: tuple = field(default=(), repr=False)

    def metadata(self) -> dict:
        return {
            "energy": self.energy,
            "gap": self.gap,
            "iterations": self.iterations,
            "converged": self.converged,
        }


# forward-difference cell gradient and its adjoint


def cell_gradient(u, hx, hy):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:-1, :-1] = (u[:-1, 1:] - u[:-1, :-1]) / hx
    gy[:-1, :-1] = (u[1:, :-1] - u[:-1, :-1]) / hy
    return gx, gy


def cell_gradient_adjoint(px, py, hx, hy):
    out = np.zeros_like(px)
    qx = px[:-1, :-1] / hx
    qy = py[:-1, :-1] / hy
    out[:-1, :-1] -= qx + qy
    out[:-1, 1:] += qx
    out[1:, :-1] += qy
    return out


def discrete_divergence(phi: VectorField2) -> ScalarField:
    """Divergence of a dual field, the negative adjoint of the cell gradient."""
    g = phi.grid
    return ScalarField(g, -cell_gradient_adjoint(phi.x.values, phi.y.values, g.hx, g.hy))


def _cell_mask(shape):
    m = np.zeros(shape, dtype=bool)
    m[:-1, :-1] = True
    return m


def primal_value(a: np.ndarray, u: np.ndarray, hx, hy) -> float:
    gx, gy = cell_gradient(u, hx, hy)
    return float(np.sum(a * np.hypot(gx, gy)) * hx * hy)


def duality_gap(a, u, px, py, fb, bmask, hx, hy):
    """Return ``(primal, gap)`` for the box-constrained problem.

    Minimizers take values in ``[min f, max f]`` (truncation does not increase
    the energy), so minimizing ``<K w, phi>`` over that box gives a valid lower
    bound even when ``phi`` is not exactly divergence free.
    """
    P = primal_value(a, u, hx, hy)
    lo, hi = fb[bmask].min(), fb[bmask].max()
    c, r = 0.5 * (lo + hi), 0.5 * (hi - lo)
    u0 = np.where(bmask, fb, 0.0)
    g0x, g0y = cell_gradient(u0, hx, hy)
    q = cell_gradient_adjoint(px, py, hx, hy)[~bmask]
    D = (np.sum(g0x * px + g0y * py) + np.sum(c * q - r * np.abs(q))) * hx * hy
    return P, P - D


def solve_lgp(p: LGPProblem, params: PDParams | None = None, u_init: ScalarField | None = None) -> LGPSolution:
    """Primal-dual minimization of the weighted least-gradient functional.

    The primal iterate starts from the harmonic extension of ``f`` unless
    ``u_init`` is given. Raises :class:`LGPConvergenceError` if the relative
    duality gap stays above ``tol_gap`` after ``max_iter`` iterations.
    """
    g = p.a.grid
    fb = p.f.fill()
    balance = PD_BALANCE * float(np.ptp(p.f.values)) / float(np.mean(p.a.values))
    prm = (params or PDParams()).resolved(g, balance)
    hx, hy = g.hx, g.hy
    bmask = g.boundary_mask()
    cells = _cell_mask(g.shape)
    a = np.where(cells, p.a.values, 0.0)
    radius = np.where(cells, p.a.values, 1.0)

    if u_init is None:
        u, _, _ = solve_dirichlet(ScalarField.constant(g, 1.0), p.f, tol=1e-10)
    else:
        u = np.array(u_init.values, dtype=float)
    u[bmask] = fb[bmask]
    u_bar = u.copy()
    px = np.zeros(g.shape)
    py = np.zeros(g.shape)
    tau, sig, theta = prm.tau, prm.sig, prm.theta

    P, gap = duality_gap(a, u, px, py, fb, bmask, hx, hy)
    rel = gap / P if P > 0 else abs(gap)
    history = [(0, P, rel)]
    it = 0
    while rel > prm.tol_gap and it < prm.max_iter:
        steps = min(prm.check_every, prm.max_iter - it)
        for _ in range(steps):
            gx, gy = cell_gradient(u_bar, hx, hy)
            px += sig * gx
            py += sig * gy
            shrink = np.maximum(1.0, np.hypot(px, py) / radius)
            px /= shrink
            py /= shrink
            px[~cells] = 0.0
            py[~cells] = 0.0
            u_new = u - tau * cell_gradient_adjoint(px, py, hx, hy)
            u_new[bmask] = fb[bmask]
            u_bar = u_new + theta * (u_new - u)
            u = u_new
        it += steps
        P, gap = duality_gap(a, u, px, py, fb, bmask, hx, hy)
        rel = gap / P if P > 0 else abs(gap)
        history.append((it, P, rel))
    logger.debug("lgp: %d iterations, relative gap %.3e", it, rel)

    sol = LGPSolution(
        u=ScalarField(g, u),
        phi=VectorField2.from_arrays(g, px, py),
        energy=P,
        gap=float(rel),
        iterations=it,
        converged=bool(rel <= prm.tol_gap),
        history=tuple(history),
    )
    if not sol.converged:
        raise LGPConvergenceError(
            f"primal-dual iteration stopped at relative gap {rel:.3e} > {prm.tol_gap:g} after {it} iterations",
            sol,
        )
    return sol


@dataclass(frozen=True)
class DualCertificate:
    max_excess: float
    div_l2: float
    alignment: float
    energy: float

    @property
    def alignment_rel(self):
        return self.alignment / self.energy if self.energy > 0 else abs(self.alignment)

    def as_dict(self):
        return {
            "max_excess": self.max_excess,
            "div_l2_interior": self.div_l2,
            "alignment_residual": self.alignment,
            "alignment_relative": self.alignment_rel,
            "energy": self.energy,
        }


def dual_certificate(sol: LGPSolution, p: LGPProblem) -> DualCertificate:
    """Feasibility, divergence and alignment of the dual field, in the solver's discretization.

    * ``max_excess``: node max of ``|phi| - a``;
    * ``div_l2``: L2 norm of the discrete divergence over interior nodes;
    * ``alignment``: ``sum over cells of (a|K u| - phi . K u) * cell area``.
    """
    g = p.a.grid
    hx, hy = g.hx, g.hy
    phi = sol.phi
    excess = float(np.max(phi.magnitude().values - p.a.values))
    div = discrete_divergence(phi).values[~g.boundary_mask()]
    div_l2 = float(np.sqrt(np.sum(div**2) * hx * hy))
    cells = _cell_mask(g.shape)
    gx, gy = cell_gradient(sol.u.values, hx, hy)
    a = np.where(cells, p.a.values, 0.0)
    e = float(np.sum(a * np.hypot(gx, gy)) * hx * hy)
    pair = float(np.sum(phi.x.values * gx + phi.y.values * gy) * hx * hy)
    return DualCertificate(max_excess=excess, div_l2=div_l2, alignment=e - pair, energy=e)


@dataclass(frozen=True)
class SigmaRecovery:
    sigma: ScalarField
    floored_fraction: float
    warning: bool


def recover_sigma(a: ScalarField, u: ScalarField, floor: float = 1e-8) -> SigmaRecovery:
    """Conductivity from the measured current magnitude: ``a / max(|grad u|, floor)``."""
    if floor <= 0:
        raise ValueError("floor must be positive")
    if not a.grid.same_as(u.grid):
        raise ValueError("a and u live on different grids")
    gm = gradient(u).magnitude().values
    floored = gm < floor
    frac = float(floored.mean())
    if frac > FLOOR_WARN_FRACTION:
        logger.warning("recover_sigma: %.1f%% of nodes hit the gradient floor", 100 * frac)
    return SigmaRecovery(
        sigma=ScalarField(a.grid, a.values / np.maximum(gm, floor)),
        floored_fraction=frac,
        warning=frac > FLOOR_WARN_FRACTION,
    )


def energy(a: ScalarField, u: ScalarField) -> float:
    """Trapezoidal quadrature of ``a |grad u|`` with the central-difference gradient."""
    if not a.grid.same_as(u.grid):
        raise ValueError("a and u live on different grids")
    return integrate(a * gradient(u).magnitude())


def alignment_defect(J: VectorField2, Jt: VectorField2) -> float:
    """Integral of ``|J||Jt| - J.Jt``; nonnegative by Cauchy-Schwarz."""
    if not J.grid.same_as(Jt.grid):
        raise ValueError("current fields live on different grids")
    return integrate(defect_density(J, Jt))


def defect_density(J: VectorField2, Jt: VectorField2) -> ScalarField:
    """Pointwise ``|J||Jt| - J.Jt`` (may dip below zero by rounding only)."""
    return ScalarField(J.grid, J.magnitude().values * Jt.magnitude().values - J.dot(Jt).values)
