"""Level-set extraction and geometry: marching squares, arclength, boundary contact.

Also hosts a finite-difference estimator for the constants of well-structured
level sets: how fast the position and unit tangent of a level curve change
when the curve is moved to pass through a nearby point.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .field_core import ScalarField

logger = logging.getLogger(__name__)

TIE_SHIFT = 1e-12


@dataclass(frozen=True)
class Component:
    points: np.ndarray  # (n, 2) polyline vertices; closed curves repeat the first vertex at the end
    closed: bool
    boundary_reaching: bool

    @property
    def arclength(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.points, axis=0).T)))

    @property
    def endpoints(self):
        return self.points[0], self.points[-1]

    def cumulative_length(self):
        seg = np.hypot(*np.diff(self.points, axis=0).T)
        return np.concatenate([[0.0], np.cumsum(seg)])

    def distance_to(self, p) -> float:
        """Euclidean distance from a point to the polyline."""
        a = self.points[:-1]
        b = self.points[1:]
        d = b - a
        L2 = np.sum(d * d, axis=1)
        w = np.asarray(p, dtype=float) - a
        s = np.where(L2 > 0, np.clip(np.sum(w * d, axis=1) / np.where(L2 > 0, L2, 1), 0, 1), 0)
        proj = a + s[:, None] * d
        return float(np.min(np.hypot(*(proj - p).T)))

    def resample(self, s):
        """Positions at arclength values ``s`` (linear interpolation along the polyline)."""
        cum = self.cumulative_length()
        return np.column_stack([np.interp(s, cum, self.points[:, 0]), np.interp(s, cum, self.points[:, 1])])


@dataclass(frozen=True)
class LevelSet:
    t: float
    components: list
    out_of_range: bool = False
    tie_broken: bool = False

    @property
    def total_length(self) -> float:
        return float(sum(c.arclength for c in self.components))


def _on_boundary(grid, p, tol):
    x, y = p
    return (
        abs(x - grid.ox) <= tol
        or abs(x - (grid.ox + grid.width)) <= tol
        or abs(y - grid.oy) <= tol
        or abs(y - (grid.oy + grid.height)) <= tol
    )


def extract_level_set(u: ScalarField, t: float) -> LevelSet:
    """Marching-squares contour of ``{u = t}`` split into connected polylines.

    Saddle cells are resolved by the sign of the cell-center average. Open
    polylines start at the boundary endpoint that comes first counterclockwise
    from the lower-left corner.
    """
    g = u.grid
    v = np.array(u.values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    if not lo < t < hi:
        return LevelSet(float(t), [], out_of_range=True)
    ties = v == t
    tie_broken = bool(ties.any())
    if tie_broken:
        v[ties] += TIE_SHIFT * (hi - lo)
    above = v > t
    ny, nx = v.shape
    xs, ys = g.x, g.y

    # edge ids: horizontal edges (j,i)-(j,i+1) first, then vertical (j,i)-(j+1,i)
    n_h = ny * (nx - 1)

    def hid(j, i):
        return j * (nx - 1) + i

    def vid(j, i):
        return n_h + j * nx + i

    def edge_point(e):
        if e < n_h:
            j, i = divmod(e, nx - 1)
            v0, v1 = v[j, i], v[j, i + 1]
            return (xs[i] + g.hx * (t - v0) / (v1 - v0), ys[j])
        j, i = divmod(e - n_h, nx)
        v0, v1 = v[j, i], v[j + 1, i]
        return (xs[i], ys[j] + g.hy * (t - v0) / (v1 - v0))

    code = (
        above[:-1, :-1].astype(np.uint8)
        | (above[:-1, 1:].astype(np.uint8) << 1)
        | (above[1:, 1:].astype(np.uint8) << 2)
        | (above[1:, :-1].astype(np.uint8) << 3)
    )
    adj: dict[int, list[int]] = {}

    def link(e1, e2):
        adj.setdefault(e1, []).append(e2)
        adj.setdefault(e2, []).append(e1)

    for j, i in zip(*np.nonzero((code != 0) & (code != 15))):
        j = int(j)
        i = int(i)
        c = int(code[j, i])
        bottom, right, top, left = hid(j, i), vid(j, i + 1), hid(j + 1, i), vid(j, i)
        # corners in order: ll (bit0), lr (bit1), ur (bit2), ul (bit3)
        if c in (5, 10):
            center_above = 0.25 * (v[j, i] + v[j, i + 1] + v[j + 1, i + 1] + v[j + 1, i]) > t
            ll_above = bool(c & 1)
            if ll_above == center_above:
                # ll/ur joined through the center; cut off lr and ul
                link(bottom, right)
                link(left, top)
            else:
                link(bottom, left)
                link(right, top)
            continue
        crossed = []
        if (c & 1) != ((c >> 1) & 1):
            crossed.append(bottom)
        if ((c >> 1) & 1) != ((c >> 2) & 1):
            crossed.append(right)
        if ((c >> 2) & 1) != ((c >> 3) & 1):
            crossed.append(top)
        if ((c >> 3) & 1) != (c & 1):
            crossed.append(left)
        link(crossed[0], crossed[1])

    tol = 0.5 * g.h
    visited: set[int] = set()
    components = []

    def walk(start):
        chain = [start]
        visited.add(start)
        prev, cur = None, start
        while True:
            nxt = [e for e in adj[cur] if e != prev or adj[cur].count(e) > 1]
            nxt = [e for e in nxt if e not in visited or (e == start and len(chain) > 2)]
            if not nxt:
                return chain, False
            e = nxt[0]
            if e == start:
                chain.append(start)
                return chain, True
            visited.add(e)
            chain.append(e)
            prev, cur = cur, e

    ends = sorted(e for e, nb in adj.items() if len(nb) == 1)
    for e in ends:
        if e in visited:
            continue
        chain, closed = walk(e)
        pts = np.array([edge_point(k) for k in chain])
        reach = bool(_on_boundary(g, pts[0], tol) or _on_boundary(g, pts[-1], tol))
        if g.perimeter_coordinate(*pts[-1]) < g.perimeter_coordinate(*pts[0]):
            pts = pts[::-1]
        components.append(Component(pts, closed, reach))
    for e in sorted(adj):
        if e in visited:
            continue
        chain, closed = walk(e)
        pts = np.array([edge_point(k) for k in chain])
        reach = bool(any(_on_boundary(g, p, tol) for p in pts))
        components.append(Component(pts, closed, reach))
    return LevelSet(float(t), components, tie_broken=tie_broken)


def level_length(u: ScalarField, t: float) -> float:
    """Total length of ``{u = t}``."""
    return extract_level_set(u, t).total_length


def sample_levels(u: ScalarField, n_levels: int) -> np.ndarray:
    """``n_levels`` equispaced values strictly inside ``range(u)``."""
    lo, hi = float(u.values.min()), float(u.values.max())
    return lo + (hi - lo) * np.arange(1, n_levels + 1) / (n_levels + 1)


@dataclass(frozen=True)
class LevelSetFamily:
    levels: list  # of LevelSet

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "component_id", "s", "x", "y"])
        for ls in self.levels:
            for cid, comp in enumerate(ls.components):
                for s, (x, y) in zip(comp.cumulative_length(), comp.points):
                    w.writerow([f"{ls.t:.17g}", cid, f"{s:.17g}", f"{x:.17g}", f"{y:.17g}"])
        return buf.getvalue()


def level_set_family(u: ScalarField, levels) -> LevelSetFamily:
    return LevelSetFamily([extract_level_set(u, float(t)) for t in levels])


@dataclass(frozen=True)
class LevelSetStats:
    L_M_hat: float
    boundary_reach_fraction: float
    n_levels: int
    n_components: int
    max_level_length: float

    def as_dict(self):
        return dict(self.__dict__)


def level_set_stats(u: ScalarField, n_levels: int = 32, family: LevelSetFamily | None = None) -> LevelSetStats:
    lo, hi = float(u.values.min()), float(u.values.max())
    if hi - lo <= 1e-14 * max(1.0, abs(lo), abs(hi)):
        raise ValueError("level-set statistics need a non-constant field")
    if n_levels < 8:
        raise ValueError("n_levels must be at least 8")
    fam = family or level_set_family(u, sample_levels(u, n_levels))
    comps = [c for ls in fam.levels for c in ls.components]
    if not comps:
        return LevelSetStats(0.0, 0.0, n_levels, 0, 0.0)
    return LevelSetStats(
        L_M_hat=max(c.arclength for c in comps),
        boundary_reach_fraction=sum(c.boundary_reaching for c in comps) / len(comps),
        n_levels=n_levels,
        n_components=len(comps),
        max_level_length=max(ls.total_length for ls in fam.levels),
    )


# ---------------------------------------------------------------------------
# well-structuredness diagnostics


@dataclass(frozen=True)
class WellStructuredSpec:
    points: tuple = ()  # (x, y) pairs; empty -> interior lattice
    directions: tuple = ((1.0, 0.0), (0.0, 1.0), (np.sqrt(0.5), np.sqrt(0.5)), (np.sqrt(0.5), -np.sqrt(0.5)))
    offsets: tuple = (4, 8)  # in units of the grid spacing
    n_s: int = 64
    lattice: int = 5
    grad_threshold: float = 1e-8

    def sample_points(self, grid):
        if self.points:
            return [tuple(map(float, p)) for p in self.points]
        fr = (np.arange(self.lattice) + 1) / (self.lattice + 1)
        return [(grid.ox + a * grid.width, grid.oy + b * grid.height) for b in fr for a in fr]


@dataclass
class WellStructuredEstimate:
    K_hat: float
    F_sup_hat: float
    n_samples: int
    n_skipped: int
    skipped: dict = field(default_factory=dict)
    spec: WellStructuredSpec | None = None

    @property
    def verdict(self):
        return f"no violation found over {self.n_samples} samples (estimates, not verified constants)"

    def as_dict(self):
        sp = self.spec
        return {
            "K_hat": self.K_hat,
            "F_sup_hat": self.F_sup_hat,
            "n_samples": self.n_samples,
            "n_skipped": self.n_skipped,
            "skipped": dict(self.skipped),
            "verdict": self.verdict,
            "sample_spec": None
            if sp is None
            else {
                "points": [list(p) for p in sp.points] or f"{sp.lattice}x{sp.lattice} interior lattice",
                "directions": [list(map(float, d)) for d in sp.directions],
                "offsets_in_h": list(sp.offsets),
                "n_s": sp.n_s,
            },
        }


def _component_through(u, p):
    ls = extract_level_set(u, u.sample(*p))
    if not ls.components:
        return None
    return min(ls.components, key=lambda c: c.distance_to(p))


def _unit_tangents(pts, s):
    d = np.gradient(pts, s, axis=0)
    n = np.hypot(d[:, 0], d[:, 1])
    return d / np.where(n > 0, n, 1.0)[:, None]


def well_structured_estimate(u: ScalarField, spec: WellStructuredSpec | None = None) -> WellStructuredEstimate:
    """Difference-quotient estimates of the tangent bound K and position bound F.

    For every sample point ``x``, direction ``h`` and offset ``t``, the level
    curves through ``x`` and ``x + t h`` are parameterized by arclength from
    matching boundary endpoints and compared at 64 common arclengths.
    """
    spec = spec or WellStructuredSpec()
    g = u.grid
    from .field_core import gradient

    gmag = gradient(u).magnitude()
    K_hat = 0.0
    F_hat = 0.0
    n_ok = 0
    skipped: dict[str, int] = {}

    def skip(reason):
        skipped[reason] = skipped.get(reason, 0) + 1

    eps = 1e-9 * max(g.width, g.height)
    for p in spec.sample_points(g):
        if gmag.sample(*p) <= spec.grad_threshold:
            skip("small_gradient")
            continue
        base = _component_through(u, p)
        if base is None or base.closed or not base.boundary_reaching:
            skip("not_boundary_reaching")
            continue
        for d in spec.directions:
            d = np.asarray(d, dtype=float)
            d = d / np.linalg.norm(d)
            for k in spec.offsets:
                t = k * g.h
                q = (p[0] + t * d[0], p[1] + t * d[1])
                if not (g.ox + eps < q[0] < g.ox + g.width - eps and g.oy + eps < q[1] < g.oy + g.height - eps):
                    skip("outside_domain")
                    continue
                moved = _component_through(u, q)
                if moved is None or moved.closed or not moved.boundary_reaching:
                    skip("not_boundary_reaching")
                    continue
                start = base.points[0]
                d0 = np.hypot(*(moved.points[0] - start))
                d1 = np.hypot(*(moved.points[-1] - start))
                if abs(d0 - d1) <= t:
                    skip("ambiguous_match")
                    continue
                pts_t = moved.points if d0 < d1 else moved.points[::-1]
                moved = Component(np.ascontiguousarray(pts_t), False, True)
                L = min(base.arclength, moved.arclength)
                s = np.linspace(0.0, L, spec.n_s)
                g0 = base.resample(s)
                g1 = moved.resample(s)
                T0 = _unit_tangents(g0, s)
                T1 = _unit_tangents(g1, s)
                F_hat = max(F_hat, float(np.max(np.hypot(*(g1 - g0).T)) / t))
                K_hat = max(K_hat, float(np.max(np.hypot(*(T1 - T0).T)) / t))
                n_ok += 1
    n_skip = sum(skipped.values())
    return WellStructuredEstimate(K_hat, F_hat, n_ok, n_skip, skipped, spec)
