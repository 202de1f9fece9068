"""Perturbation experiments for the CDII stability inequalities.

A sweep perturbs a base conductivity multiplicatively, re-solves the forward
problem for every member of an epsilon ladder and records each quantity that
appears on either side of the stability estimates. Empirical rates come from
log-log fits; an inequality ``LHS <= C RHS^alpha`` passes when the fitted
slope is at least ``alpha - slack`` and ``LHS / RHS^alpha`` stays bounded
(max at most ``bound_factor`` times the median) along the ladder.

All L-infinity quantities are node maxima on the grid.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .field_core import (
    BoundaryTrace,
    ScalarField,
    VectorField2,
    gradient,
    hessian_l1,
    lp_norm,
)
from .forward import (
    AdmissibilityBounds,
    AdmissibilityError,
    ConductivityProblem,
    ForwardSolution,
    admissibility_check,
    solve_conductivity,
)
from .least_gradient import alignment_defect, defect_density, energy

logger = logging.getLogger(__name__)

LINF_NOTE = "L-infinity norms are discrete node maxima"


def fit_exponent(xs, ys):
    """Least-squares line through ``(log x, log y)``.

    Returns ``(slope, intercept, residual)`` where ``residual`` is the RMS of
    the log-space fit errors.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 4:
        raise ValueError("fit_exponent needs at least 4 (x, y) pairs")
    if np.any(x <= 0) or np.any(y <= 0) or not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("fit_exponent needs strictly positive finite data")
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [slope, intercept] - ly) ** 2)))
    return float(slope), float(intercept), resid


@dataclass(frozen=True)
class PerturbationFamily:
    sigma: ScalarField
    f: BoundaryTrace
    eta: ScalarField
    epsilons: tuple
    bounds: AdmissibilityBounds
    mode: str = "multiplicative"

    def __post_init__(self):
        if self.mode != "multiplicative":
            raise ValueError(f"unsupported perturbation mode {self.mode!r}")
        peak = float(np.max(np.abs(self.eta.values)))
        if peak == 0:
            raise ValueError("direction field eta vanishes identically")
        object.__setattr__(self, "eta", self.eta.with_values(self.eta.values / peak))
        eps = tuple(float(e) for e in self.epsilons)
        if any(e <= 0 for e in eps):
            raise ValueError("ladder entries must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("ladder must be strictly decreasing")
        object.__setattr__(self, "epsilons", eps)

    def member(self, eps: float) -> ScalarField:
        return self.sigma.with_values(self.sigma.values * (1.0 + eps * self.eta.values))

    def violation(self, eps: float):
        """Name of the conductivity bound the member violates, or ``None``."""
        s = self.member(eps).values
        b = self.bounds
        if s.min() <= b.sigma0:
            return f"sigma0 violated: min sigma~ = {s.min():.6g} <= {b.sigma0:g}"
        if s.max() > b.sigma1:
            return f"sigma1 violated: max sigma~ = {s.max():.6g} > {b.sigma1:g}"
        return None


@dataclass
class StabilityRun:
    eps: float
    da: float
    dJmag: float
    e_J: float
    e_u: float
    e_grad: float
    e_sigma: float
    energy_gap: float
    defect: float
    gn_grad: float
    gn_hess: float
    gn_l1: float
    Jmag_l1: float
    sqrt_defect_l1: float
    grad_u_l1: float
    grad_ut_l1: float
    gn_components: tuple = ()  # ((grad_l1, hess_l1, l1) for G_1, (...) for G_2)

    def as_row(self):
        d = asdict(self)
        d.pop("gn_components")
        for i, (gl, hl, l1) in enumerate(self.gn_components, start=1):
            d[f"G{i}_grad_l1"] = gl
            d[f"G{i}_hess_l1"] = hl
            d[f"G{i}_l1"] = l1
        return d


def compare(base: ForwardSolution, pert: ForwardSolution, eps: float = float("nan")) -> StabilityRun:
    """All stability quantities for two forward solutions sharing a grid and boundary data."""
    u, ut = base.u, pert.u
    J, Jt = base.J, pert.J
    a, at = base.a, pert.a
    du = gradient(u)
    dut = gradient(ut)
    dens = defect_density(J, Jt)
    G = (Jt - J).scale(1.0 / pert.sigma.values)
    comps = []
    for Gi in (G.x, G.y):
        comps.append((lp_norm(gradient(Gi).magnitude(), 1), hessian_l1(Gi), lp_norm(Gi, 1)))
    return StabilityRun(
        eps=float(eps),
        da=lp_norm(a - at, np.inf),
        dJmag=lp_norm(J.magnitude() - Jt.magnitude(), np.inf),
        e_J=lp_norm((J - Jt).magnitude(), 1),
        e_u=lp_norm(u - ut, 1),
        e_grad=lp_norm((du - dut).magnitude(), 1),
        e_sigma=lp_norm(base.sigma - pert.sigma, 1),
        energy_gap=abs(energy(a, u) - energy(at, ut)),
        defect=alignment_defect(J, Jt),
        gn_grad=comps[0][0] + comps[1][0],
        gn_hess=comps[0][1] + comps[1][1],
        gn_l1=lp_norm(G.magnitude(), 1),
        Jmag_l1=lp_norm(J.magnitude() - Jt.magnitude(), 1),
        sqrt_defect_l1=lp_norm(dens.with_values(np.sqrt(2.0 * np.maximum(dens.values, 0.0))), 1),
        grad_u_l1=lp_norm(du.magnitude(), 1),
        grad_ut_l1=lp_norm(dut.magnitude(), 1),
        gn_components=tuple(comps),
    )


def _check_admissible(sol, bounds, label):
    rep = admissibility_check(sol, bounds)
    if not rep.passed:
        raise AdmissibilityError(f"{label}: " + "; ".join(rep.violations))
    return rep


def run_pair(sigma: ScalarField, sigma_t: ScalarField, f: BoundaryTrace, bounds: AdmissibilityBounds,
             tol: float = 1e-10, eps: float = float("nan")) -> StabilityRun:
    """Solve both forward problems and compare them.

    Raises :class:`AdmissibilityError` naming the violated bound if either
    pair is not admissible.
    """
    base = solve_conductivity(ConductivityProblem(sigma, f, bounds), tol=tol)
    _check_admissible(base, bounds, "base pair")
    pert = solve_conductivity(ConductivityProblem(sigma_t, f, bounds), tol=tol)
    _check_admissible(pert, bounds, "perturbed pair")
    return compare(base, pert, eps)


@dataclass(frozen=True)
class GNRatios:
    r1: float
    r2: float

    @property
    def values(self):
        return (self.r1, self.r2)


GN_FLAT_RTOL = 1e-9


def gn_check(run: StabilityRun) -> GNRatios:
    """Interpolation ratios ``|grad G_i|_1 / (|D2 G_i|_1^(1/2) |G_i|_1^(1/2))``.

    The ratio is 0 when ``G_i`` is constant up to rounding (its gradient is
    below ``GN_FLAT_RTOL`` times ``|G_i|_1``), since then the left side vanishes.
    """
    out = []
    for grad_l1, hess, l1 in run.gn_components:
        denom = np.sqrt(hess) * np.sqrt(l1)
        flat = grad_l1 <= GN_FLAT_RTOL * l1
        out.append(0.0 if l1 == 0 or flat or denom == 0 else float(grad_l1 / denom))
    while len(out) < 2:
        out.append(0.0)
    return GNRatios(*out[:2])


def bounded(values, factor: float = 10.0) -> tuple[bool, float, float]:
    """``max <= factor * median`` over finite values; returns ``(ok, max, median)``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or not np.all(np.isfinite(v)):
        return False, float("nan"), float("nan")
    mx, med = float(v.max()), float(np.median(v))
    if mx == 0:
        return True, 0.0, 0.0
    return bool(mx <= factor * med), mx, med


# (name, lhs, rhs, alpha, theorem label)
INEQUALITIES = (
    ("energy_gap_vs_da", "energy_gap", "da", 1.0, "energy gap (linear in ||a - a~||_inf)"),
    ("defect_vs_da", "defect", "da", 1.0, "alignment defect (linear in ||a - a~||_inf)"),
    ("e_J_vs_da", "e_J", "da", 0.5, "||J - J~||_1 <= C ||a - a~||_inf^(1/2)"),
    ("e_u_vs_dJmag", "e_u", "dJmag", 0.5, "||u - u~||_1 <= C |||J| - |J~|||_inf^(1/2)"),
    ("e_grad_vs_dJmag", "e_grad", "dJmag", 0.25, "||grad u - grad u~||_1 <= C |||J| - |J~|||_inf^(1/4)"),
    ("e_grad_vs_da", "e_grad", "da", 0.25, "||grad u - grad u~||_1 <= C ||a - a~||_inf^(1/4)"),
    ("e_sigma_vs_dJmag", "e_sigma", "dJmag", 0.25, "||sigma - sigma~||_1 <= C |||J| - |J~|||_inf^(1/4)"),
    ("e_sigma_vs_da", "e_sigma", "da", 0.25, "||sigma - sigma~||_1 <= C ||a - a~||_inf^(1/4)"),
)


@dataclass
class InequalityCheck:
    name: str
    lhs: str
    rhs: str
    alpha: float
    statement: str
    slope: float | None
    intercept: float | None
    residual: float | None
    C_hat: float | None
    ratio_max: float | None
    ratio_median: float | None
    slope_ok: bool
    bounded_ok: bool
    passed: bool
    note: str = ""


@dataclass
class StabilityReport:
    runs: list
    checks: list
    consistency: dict
    gn: dict
    excluded: list
    settings: dict
    ladder: tuple = ()

    @property
    def passed(self) -> bool:
        return (
            all(c.passed for c in self.checks)
            and all(v["passed"] for v in self.consistency.values())
            and self.gn["passed"]
        )

    @property
    def excluded_fraction(self) -> float:
        return len(self.excluded) / len(self.ladder) if self.ladder else 0.0

    def check(self, name) -> InequalityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {
            "note": LINF_NOTE,
            "settings": self.settings,
            "ladder": list(self.ladder),
            "excluded": list(self.excluded),
            "runs": [r.as_row() for r in self.runs],
            "checks": [asdict(c) for c in self.checks],
            "consistency": self.consistency,
            "gagliardo_nirenberg": self.gn,
            "passed": self.passed,
        }

    def to_csv(self) -> str:
        rows = [r.as_row() for r in self.runs]
        buf = io.StringIO()
        if not rows:
            return ""
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: f"{v:.17g}" if isinstance(v, float) else v for k, v in r.items()})
        return buf.getvalue()


def _evaluate(name, lhs, rhs, alpha, statement, runs, fit_window, slack, bound_factor, floor):
    L = np.array([getattr(r, lhs) for r in runs])
    R = np.array([getattr(r, rhs) for r in runs])
    if np.all(L <= floor):
        return InequalityCheck(name, lhs, rhs, alpha, statement, None, None, None, 0.0, 0.0, 0.0,
                               True, True, True, "left side vanishes to solver precision on every run")
    if np.any(R <= 0):
        return InequalityCheck(name, lhs, rhs, alpha, statement, None, None, None, None, None, None,
                               False, False, False, "right side vanishes while left side does not")
    ratios = L / R**alpha
    ok_b, mx, med = bounded(ratios, bound_factor)
    window = slice(-fit_window, None) if len(runs) > fit_window else slice(None)
    Lw, Rw = L[window], R[window]
    keep = Lw > floor
    slope = intercept = resid = None
    note = ""
    if keep.sum() >= 4:
        slope, intercept, resid = fit_exponent(Rw[keep], Lw[keep])
        ok_s = slope >= alpha - slack
    else:
        ok_s = False
        note = "fewer than 4 usable points in the fit window"
    return InequalityCheck(name, lhs, rhs, alpha, statement, slope, intercept, resid, float(ratios.max()),
                           mx, med, bool(ok_s), ok_b, bool(ok_s and ok_b), note)


def evaluate_runs(runs, fit_window=5, slack=0.1, bound_factor=10.0, floor=1e-12):
    """Inequality checks, per-run consistency checks and interpolation ratios for a list of runs."""
    checks = [_evaluate(*spec, runs, fit_window, slack, bound_factor, floor) for spec in INEQUALITIES]

    tri_rows = []
    for r in runs:
        lower = r.Jmag_l1 <= r.e_J * (1 + 1e-12) + 1e-14
        upper = r.e_J <= r.Jmag_l1 + r.sqrt_defect_l1 + 1e-8
        tri_rows.append({"eps": r.eps, "lower_ok": bool(lower), "upper_ok": bool(upper)})
    da = [r.da for r in runs]
    dj = [r.dJmag for r in runs]
    consistency = {
        "defect_nonnegative": {
            "passed": all(r.defect >= -1e-12 for r in runs),
            "min_defect": min((r.defect for r in runs), default=0.0),
        },
        "reverse_triangle": {
            "passed": all(t["lower_ok"] and t["upper_ok"] for t in tri_rows),
            "rows": tri_rows,
        },
        "monotone_ladder": {
            "passed": all(b <= a * (1 + 1e-9) for a, b in zip(da, da[1:]))
            and all(b <= a * (1 + 1e-9) for a, b in zip(dj, dj[1:])),
        },
    }
    ratios = [gn_check(r) for r in runs]
    gn = {"r1": [q.r1 for q in ratios], "r2": [q.r2 for q in ratios]}
    finite = all(np.isfinite(v) for q in ratios for v in q.values)
    b1 = bounded(gn["r1"], bound_factor)
    b2 = bounded(gn["r2"], bound_factor)
    gn.update(
        finite=bool(finite),
        r1_bounded=b1[0],
        r2_bounded=b2[0],
        passed=bool(finite and b1[0] and b2[0]),
    )
    return checks, consistency, gn


def run_sweep(family: PerturbationFamily, tol: float = 1e-10, fit_window: int = 5, slack: float = 0.1,
              bound_factor: float = 10.0) -> StabilityReport:
    """One forward comparison per ladder entry, then fits and pass/fail decisions.

    Inadmissible members are excluded and listed rather than aborting the sweep.
    """
    if len(family.epsilons) < 4:
        raise ValueError("a sweep needs at least 4 ladder points")
    b = family.bounds
    base = solve_conductivity(ConductivityProblem(family.sigma, family.f, b), tol=tol)
    _check_admissible(base, b, "base pair")
    runs, excluded = [], []
    for eps in family.epsilons:
        why = family.violation(eps)
        if why is None:
            pert = solve_conductivity(ConductivityProblem(family.member(eps), family.f, b), tol=tol)
            rep = admissibility_check(pert, b)
            if not rep.passed:
                why = "; ".join(rep.violations)
        if why is not None:
            logger.info("eps=%g excluded: %s", eps, why)
            excluded.append({"eps": eps, "reason": why})
            continue
        runs.append(compare(base, pert, eps))
        logger.info("eps=%g done", eps)
    settings = {
        "grid": [family.sigma.grid.nx, family.sigma.grid.ny],
        "tol": tol,
        "fit_window": fit_window,
        "slack": slack,
        "bound_factor": bound_factor,
        "bounds": b.as_dict(),
    }
    if len(runs) < 4:
        checks = []
        consistency = {"enough_runs": {"passed": False, "n_runs": len(runs)}}
        gn = {"passed": False}
    else:
        checks, consistency, gn = evaluate_runs(runs, fit_window, slack, bound_factor)
    return StabilityReport(runs, checks, consistency, gn, excluded, settings, family.epsilons)
