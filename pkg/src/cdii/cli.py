"""Command-line entry point: ``cdii forward | lgp | reconstruct | sweep | levelsets | verify``.

Every option can also come from a JSON or YAML file passed with ``--config``;
flags given on the command line win over the file, and the file wins over the
built-in defaults. All artifacts of one invocation land in a single output
directory together with ``manifest.json``.

Exit codes: 0 success, 1 internal error, 2 invalid input, 3 checks failed or
partial result.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import sys
import traceback
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .expressions import ExpressionError, field_from_expression, trace_from_spec
from .field_core import BoundaryTrace, Grid2D, lp_norm
from .forward import (
    AdmissibilityBounds,
    AdmissibilityError,
    ConductivityProblem,
    admissibility_check,
    count_boundary_extrema,
    solve_conductivity,
)
from .gridio import GridFormatError, format_grid_text, format_trace_csv, read_grid_text, read_trace_csv
from .least_gradient import (
    LGPConvergenceError,
    LGPProblem,
    PDParams,
    dual_certificate,
    recover_sigma,
    solve_lgp,
)
from .level_sets import WellStructuredSpec, level_set_family, level_set_stats, sample_levels, well_structured_estimate
from .stability_lab import INEQUALITIES, PerturbationFamily, run_sweep

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_CHECKS = 0, 1, 2, 3
OUTPUT_ROOT_ENV = "CDII_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "cdii_runs"
MAX_EXCLUDED_FRACTION = 0.25

CONSISTENCY_CHECKS = ("defect_nonnegative", "reverse_triangle", "monotone_ladder")
ALL_CHECKS = tuple(spec[0] for spec in INEQUALITIES) + CONSISTENCY_CHECKS + ("gagliardo_nirenberg",)

log = logging.getLogger("cdii")


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# option plumbing: argparse default is None so config values can fill gaps


class _Options:
    def __init__(self, parser):
        self.parser = parser
        self.defaults = {}

    def add(self, flag, default=None, help="", **kw):
        dest = flag.lstrip("-").replace("-", "_")
        self.defaults[dest] = default
        shown = "none" if default is None else default
        self.parser.add_argument(flag, dest=dest, default=None, help=f"{help} (default: {shown})", **kw)


def _csv_floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(eval_number(v)) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad number list {text!r}: {exc}") from None


def eval_number(tok) -> float:
    """A float literal or a power of two written ``2^-k``."""
    tok = str(tok).strip()
    if tok.startswith("2^"):
        return 2.0 ** float(tok[2:])
    return float(tok)


def _bounds(value) -> AdmissibilityBounds:
    if isinstance(value, dict):
        try:
            return AdmissibilityBounds(**{k: float(v) for k, v in value.items() if v is not None})
        except TypeError as exc:
            raise InputError(f"bad bounds {value!r}: {exc}") from None
    vals = _csv_floats(value)
    if len(vals) not in (4, 5):
        raise InputError(f"bounds need 'm,M,sigma0,sigma1[,sigma2]', got {value!r}")
    return AdmissibilityBounds(*vals)


def load_config(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text) if p.suffix.lower() == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise InputError(f"cannot parse config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InputError(f"config {path} must be a mapping of option names to values")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def resolve(args, defaults) -> dict:
    """Merge flags over config over defaults; unknown config keys are rejected."""
    cfg = load_config(args.config) if args.config else {}
    if "grid" in cfg and "n" in defaults and "n" not in cfg:
        cfg["n"] = cfg.pop("grid")
    unknown = sorted(set(cfg) - set(defaults))
    if unknown:
        raise InputError(f"unknown config key(s): {', '.join(unknown)}")
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key, default)
    return out


# ---------------------------------------------------------------------------
# output directory, artifacts and manifest


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _timestamp():
    return _dt.datetime.now(_dt.timezone.utc)


class RunOutput:
    """Collects artifacts in memory; ``commit`` writes them and the manifest."""

    def __init__(self, subcommand, out=None):
        self.subcommand = subcommand
        self.started = _timestamp()
        if out:
            self.path = Path(out)
        else:
            root = Path(os.environ.get(OUTPUT_ROOT_ENV) or DEFAULT_OUTPUT_ROOT)
            self.path = root / f"{subcommand}-{self.started.strftime('%Y%m%dT%H%M%S_%f')}"
        self.files = {}

    def add(self, name, text):
        self.files[name] = text

    def commit(self, config, exit_code):
        try:
            self.path.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise InputError(f"output directory {self.path} is not writable: {exc.strerror}") from None
        for name, text in self.files.items():
            (self.path / name).write_text(text)
        manifest = {
            "tool": "cdii",
            "version": __version__,
            "subcommand": self.subcommand,
            "timestamp": self.started.isoformat(),
            "config": config,
            "exit_code": exit_code,
            "files": {n: hashlib.sha256(t.encode()).hexdigest() for n, t in sorted(self.files.items())},
        }
        (self.path / "manifest.json").write_text(dumps(manifest))
        say(f"wrote {len(self.files) + 1} file(s) to {self.path}")


def say(msg):
    print(msg, flush=True)


# ---------------------------------------------------------------------------
# shared builders


def _grid(cfg):
    n = int(cfg["n"])
    if n < 3:
        raise InputError("grid size n must be at least 3")
    return Grid2D.square(n)


def _trace(cfg, grid) -> BoundaryTrace:
    if cfg.get("f_trace"):
        return read_trace_csv(cfg["f_trace"], grid)
    return trace_from_spec(str(cfg["f"]), grid, float(cfg["theta"]))


def _pd_params(cfg) -> PDParams:
    return PDParams(
        tau=None if cfg["tau"] is None else float(cfg["tau"]),
        sig=None if cfg["sig"] is None else float(cfg["sig"]),
        theta=float(cfg["theta_pd"]),
        max_iter=int(cfg["max_iter"]),
        tol_gap=float(cfg["tol_gap"]),
    )


def _field_files(out: RunOutput, **fields):
    for name, u in fields.items():
        out.add(f"{name}.txt", format_grid_text(u))


def _run_lgp(problem, params, u_init=None):
    """Solve and return ``(solution, converged)``; non-convergence keeps the best iterate."""
    try:
        return solve_lgp(problem, params, u_init), True
    except LGPConvergenceError as exc:
        say(f"warning: {exc}")
        return exc.best, False


# ---------------------------------------------------------------------------
# subcommands


def cmd_forward(cfg) -> tuple[RunOutput, int]:
    g = _grid(cfg)
    sigma = field_from_expression(str(cfg["sigma"]), g)
    f = _trace(cfg, g)
    bounds = _bounds(cfg["bounds"])
    sol = solve_conductivity(ConductivityProblem(sigma, f, bounds), tol=float(cfg["tol"]))
    rep = admissibility_check(sol, bounds)
    say(f"forward: {g.nx}x{g.ny} grid, {sol.iterations} PCG iterations, residual {sol.residual_norm:.3e}")
    if not rep.passed:
        say("admissibility: " + "; ".join(rep.violations))
    out = RunOutput("forward", cfg["out"])
    _field_files(out, u=sol.u, Jx=sol.J.x, Jy=sol.J.y, a=sol.a, sigma=sigma)
    out.add("f.csv", format_trace_csv(f))
    meta = {
        "grid": {"nx": g.nx, "ny": g.ny, "hx": g.hx, "hy": g.hy},
        "residual": sol.residual_norm,
        "iterations": sol.iterations,
        "boundary_extrema": count_boundary_extrema(f),
        "bounds": bounds.as_dict(),
        "admissibility": rep.as_dict(),
    }
    out.add("forward.json", dumps(meta))
    return out, EXIT_OK


def _certificates(sol, problem):
    cert = dual_certificate(sol, problem)
    return cert.as_dict()


def cmd_lgp(cfg) -> tuple[RunOutput, int]:
    if not cfg["a"]:
        raise InputError("lgp needs --a (grid-text file of the weight)")
    a = read_grid_text(cfg["a"])
    f = _trace(cfg, a.grid)
    problem = LGPProblem(a, f, _bounds(cfg["bounds"]))
    u_init = read_grid_text(cfg["u_init"]) if cfg["u_init"] else None
    sol, ok = _run_lgp(problem, _pd_params(cfg), u_init)
    say(f"lgp: {sol.iterations} iterations, relative gap {sol.gap:.3e}, energy {sol.energy:.10g}")
    out = RunOutput("lgp", cfg["out"])
    _field_files(out, u=sol.u, phix=sol.phi.x, phiy=sol.phi.y)
    meta = sol.metadata()
    meta["certificates"] = _certificates(sol, problem)
    out.add("lgp.json", dumps(meta))
    return out, EXIT_OK if ok else EXIT_CHECKS


def _reconstruct_inputs(cfg):
    """Return ``(a, f, sigma_true, u_true, source)``."""
    if cfg["from_dir"]:
        d = Path(cfg["from_dir"])
        a = read_grid_text(d / "a.txt")
        f = read_trace_csv(d / "f.csv", a.grid)
        st = read_grid_text(d / "sigma.txt") if (d / "sigma.txt").exists() else None
        ut = read_grid_text(d / "u.txt") if (d / "u.txt").exists() else None
        return a, f, st, ut, f"forward run {d}"
    if cfg["a"]:
        a = read_grid_text(cfg["a"])
        f = _trace(cfg, a.grid)
        st = read_grid_text(cfg["sigma_true"]) if cfg["sigma_true"] else None
        ut = read_grid_text(cfg["u_true"]) if cfg["u_true"] else None
        return a, f, st, ut, f"file {cfg['a']}"
    if cfg["sigma"] is None:
        raise InputError("reconstruct needs --from-dir, --a, or --sigma to generate data")
    g = _grid(cfg)
    sigma = field_from_expression(str(cfg["sigma"]), g)
    f = _trace(cfg, g)
    fwd = solve_conductivity(ConductivityProblem(sigma, f, _bounds(cfg["bounds"])))
    return fwd.a, f, sigma, fwd.u, f"generated from sigma = {cfg['sigma']}"


def cmd_reconstruct(cfg) -> tuple[RunOutput, int]:
    a, f, sigma_true, u_true, source = _reconstruct_inputs(cfg)
    if sigma_true is not None and not sigma_true.grid.same_as(a.grid):
        raise InputError("ground-truth sigma and a live on different grids")
    problem = LGPProblem(a, f, _bounds(cfg["bounds"]))
    sol, ok = _run_lgp(problem, _pd_params(cfg))
    rec = recover_sigma(a, sol.u, float(cfg["floor"]))
    say(f"reconstruct: {sol.iterations} iterations, relative gap {sol.gap:.3e}, "
        f"floored fraction {rec.floored_fraction:.4f}")
    meta = {
        "source": source,
        "lgp": sol.metadata(),
        "certificates": _certificates(sol, problem),
        "floor": float(cfg["floor"]),
        "floored_fraction": rec.floored_fraction,
        "floor_warning": rec.warning,
    }
    if sigma_true is not None:
        err = rec.sigma - sigma_true
        meta["sigma_errors"] = {
            "l1": lp_norm(err, 1),
            "rel_l1": lp_norm(err, 1) / lp_norm(sigma_true, 1),
            "linf": lp_norm(err, np.inf),
        }
        say(f"sigma relative L1 error {meta['sigma_errors']['rel_l1']:.4e}")
    if u_true is not None:
        eu = sol.u - u_true
        meta["u_errors"] = {"l1": lp_norm(eu, 1), "linf": lp_norm(eu, np.inf)}
    out = RunOutput("reconstruct", cfg["out"])
    _field_files(out, u_hat=sol.u, sigma_hat=rec.sigma, phix=sol.phi.x, phiy=sol.phi.y)
    out.add("reconstruct.json", dumps(meta))
    return out, EXIT_OK if ok else EXIT_CHECKS


def _enabled_checks(value):
    if value in (None, "all"):
        return ALL_CHECKS
    names = [v.strip() for v in value.split(",")] if isinstance(value, str) else list(value)
    bad = [n for n in names if n not in ALL_CHECKS]
    if bad:
        raise InputError(f"unknown check(s) {bad}; choose from {', '.join(ALL_CHECKS)}")
    return tuple(names)


def sweep_verdict(report, enabled):
    """``(exit_code, failed_names)`` for a finished sweep."""
    failed = []
    if len(report.runs) < 4:
        failed.append("enough_runs")
    for c in report.checks:
        if c.name in enabled and not c.passed:
            failed.append(c.name)
    for name in CONSISTENCY_CHECKS:
        if name in enabled and name in report.consistency and not report.consistency[name]["passed"]:
            failed.append(name)
    if "gagliardo_nirenberg" in enabled and not report.gn.get("passed", False):
        failed.append("gagliardo_nirenberg")
    if report.excluded_fraction > MAX_EXCLUDED_FRACTION:
        failed.append("excluded_fraction")
    return (EXIT_CHECKS if failed else EXIT_OK), failed


def cmd_sweep(cfg) -> tuple[RunOutput, int]:
    g = _grid(cfg)
    enabled = _enabled_checks(cfg["checks"])
    ladder = _csv_floats(cfg["epsilons"])
    fam = PerturbationFamily(
        sigma=field_from_expression(str(cfg["sigma"]), g),
        f=_trace(cfg, g),
        eta=field_from_expression(str(cfg["eta"]), g),
        epsilons=tuple(ladder),
        bounds=_bounds(cfg["bounds"]),
    )
    rep = run_sweep(fam, tol=float(cfg["tol"]), fit_window=int(cfg["fit_window"]), slack=float(cfg["slack"]),
                    bound_factor=float(cfg["bound_factor"]))
    done = {r.eps: r for r in rep.runs}
    why = {e["eps"]: e["reason"] for e in rep.excluded}
    for eps in fam.epsilons:
        if eps in done:
            r = done[eps]
            say(f"eps={eps:.6g}  da={r.da:.4e}  dJmag={r.dJmag:.4e}  e_sigma={r.e_sigma:.4e}")
        else:
            say(f"eps={eps:.6g}  excluded: {why[eps]}")
    code, failed = sweep_verdict(rep, enabled)
    for c in rep.checks:
        if c.name in enabled:
            slope = "n/a" if c.slope is None else f"{c.slope:.3f}"
            say(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: slope {slope} (alpha {c.alpha:g})")
    body = rep.to_dict()
    body["enabled_checks"] = list(enabled)
    body["failed_checks"] = failed
    body["excluded_fraction"] = rep.excluded_fraction
    body["verdict"] = "pass" if code == EXIT_OK else "fail"
    out = RunOutput("sweep", cfg["out"])
    out.add("report.json", dumps(body))
    out.add("runs.csv", rep.to_csv())
    say(f"sweep verdict: {body['verdict']}" + (f" ({', '.join(failed)})" if failed else ""))
    return out, code


def _directions(value):
    if isinstance(value, (list, tuple)):
        dirs = [tuple(float(c) for c in d) for d in value]
    else:
        dirs = [tuple(_csv_floats(part)) for part in str(value).split(";") if part.strip()]
    if not dirs or any(len(d) != 2 or math.hypot(*d) == 0 for d in dirs):
        raise InputError(f"directions must be nonzero 'hx,hy' pairs separated by ';', got {value!r}")
    return tuple(dirs)


def cmd_levelsets(cfg) -> tuple[RunOutput, int]:
    if not cfg["u"]:
        raise InputError("levelsets needs --u (grid-text file)")
    u = read_grid_text(cfg["u"])
    n_levels = int(cfg["levels"])
    try:
        stats = level_set_stats(u, n_levels)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    levels = [float(t) for t in cfg["level"]] if cfg["level"] else sample_levels(u, n_levels)
    fam = level_set_family(u, levels)
    per_level = [
        {
            "t": ls.t,
            "out_of_range": ls.out_of_range,
            "components": [
                {"arclength": c.arclength, "closed": c.closed, "boundary_reaching": c.boundary_reaching}
                for c in ls.components
            ],
            "total_length": ls.total_length,
        }
        for ls in fam.levels
    ]
    say(f"levelsets: L_M_hat {stats.L_M_hat:.6g}, boundary-reach fraction {stats.boundary_reach_fraction:.4f}")
    out = RunOutput("levelsets", cfg["out"])
    out.add("contours.csv", fam.to_csv())
    out.add("stats.json", dumps({"stats": stats.as_dict(), "levels": per_level}))
    if cfg["well_structured"]:
        spec = WellStructuredSpec(
            directions=_directions(cfg["ws_directions"]),
            offsets=tuple(int(v) for v in _csv_floats(cfg["ws_offsets"])),
            n_s=int(cfg["ws_n_s"]),
            lattice=int(cfg["ws_lattice"]),
        )
        est = well_structured_estimate(u, spec)
        say(f"well-structured: K_hat {est.K_hat:.3e}, F_sup_hat {est.F_sup_hat:.6g}; {est.verdict}")
        out.add("well_structured.json", dumps(est.as_dict()))
    return out, EXIT_OK


def cmd_verify(cfg) -> tuple[RunOutput, int]:
    from .acceptance import run_all

    results = run_all(say)
    passed = all(r.passed for r in results)
    report = {
        "timestamp": _timestamp().isoformat(),
        "criteria": [r.as_dict() for r in results],
        "passed": passed,
        "n_passed": sum(r.passed for r in results),
        "n_criteria": len(results),
    }
    out = RunOutput("verify", cfg["out"])
    out.add("verify.json", dumps(report))
    say(f"verify: {report['n_passed']}/{report['n_criteria']} criteria passed")
    return out, EXIT_OK if passed else EXIT_CHECKS


# ---------------------------------------------------------------------------
# parser


def _common(opts: _Options):
    opts.add("--out", None, "output directory; otherwise a timestamped directory under $" + OUTPUT_ROOT_ENV)


def _trace_opts(opts: _Options):
    opts.add("--f", "linear", "boundary data: linear, tilted-linear, layered, or an expression in x, y")
    opts.add("--f-trace", None, "boundary data from an 'index,value' CSV file (overrides --f)")
    opts.add("--theta", math.pi / 4, "angle of the tilted-linear trace", type=float)


def _lgp_opts(opts: _Options):
    opts.add("--tol-gap", 1e-6, "relative duality-gap tolerance", type=float)
    opts.add("--max-iter", 200_000, "primal-dual iteration cap", type=int)
    opts.add("--tau", None, "primal step (default 1/||K||)", type=float)
    opts.add("--sig", None, "dual step (default 1/||K||)", type=float)
    opts.add("--theta-pd", 1.0, "primal extrapolation parameter", type=float)


BOUNDS_HELP = "admissibility bounds 'm,M,sigma0,sigma1[,sigma2]'"


def build_parser():
    parser = argparse.ArgumentParser(prog="cdii", description="2D current density impedance imaging lab")
    parser.add_argument("--version", action="version", version=f"cdii {__version__}")
    parser.add_argument("--debug", action="store_true", help="print tracebacks and debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    table = {}

    def new(name, help):
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("--config", default=None, help="JSON or YAML file of option values; flags win (default: none)")
        opts = _Options(p)
        table[name] = opts
        return opts

    o = new("forward", "solve div(sigma grad u) = 0 with Dirichlet data")
    o.add("--sigma", "1", "conductivity expression in x, y")
    o.add("--n", 65, "grid nodes per side on the unit square", type=int)
    _trace_opts(o)
    o.add("--tol", 1e-10, "relative PCG residual tolerance", type=float)
    o.add("--bounds", "0.001,1000,0.001,1000", BOUNDS_HELP)
    _common(o)

    o = new("lgp", "minimize the weighted least-gradient functional")
    o.add("--a", None, "weight a as a grid-text file")
    _trace_opts(o)
    o.add("--u-init", None, "initial primal iterate as a grid-text file")
    _lgp_opts(o)
    o.add("--bounds", "0.001,1000,0.001,1000", BOUNDS_HELP)
    _common(o)

    o = new("reconstruct", "recover sigma from |J| and boundary data")
    o.add("--from-dir", None, "forward output directory (reads a.txt, f.csv, sigma.txt, u.txt)")
    o.add("--a", None, "measured |J| as a grid-text file")
    o.add("--sigma-true", None, "ground-truth sigma grid-text file for error norms")
    o.add("--u-true", None, "ground-truth potential grid-text file for error norms")
    o.add("--sigma", None, "generate data from this conductivity expression")
    o.add("--n", 129, "grid nodes per side when generating data", type=int)
    _trace_opts(o)
    o.add("--floor", 1e-6, "gradient floor in sigma = a / max(|grad u|, floor)", type=float)
    _lgp_opts(o)
    o.add("--bounds", "0.001,1000,0.001,1000", BOUNDS_HELP)
    _common(o)

    o = new("sweep", "stability sweep over a perturbation ladder")
    o.add("--n", 129, "grid nodes per side", type=int)
    o.add("--sigma", "1 + 0.5*exp(-50*((x-0.5)^2 + (y-0.5)^2))", "base conductivity expression")
    _trace_opts(o)
    o.add("--eta", "exp(-50*((x-0.6)^2 + (y-0.4)^2))", "perturbation direction expression")
    o.add("--epsilons", ",".join(f"2^-{k}" for k in range(1, 9)), "decreasing ladder, comma separated")
    o.add("--tol", 1e-10, "forward solver tolerance", type=float)
    o.add("--bounds", "0.2,5,0.5,3", BOUNDS_HELP)
    o.add("--checks", "all", "comma-separated checks to enable: " + ", ".join(ALL_CHECKS))
    o.add("--fit-window", 5, "number of smallest-epsilon points in each fit", type=int)
    o.add("--slack", 0.1, "allowed shortfall of fitted slope below alpha", type=float)
    o.add("--bound-factor", 10.0, "max / median bound on LHS / RHS^alpha", type=float)
    _common(o)

    o = new("levelsets", "level-set extraction, statistics and well-structuredness diagnostics")
    o.add("--u", None, "scalar field as a grid-text file")
    o.add("--levels", 32, "number of equispaced interior levels for statistics", type=int)
    o.add("--level", None, "explicit level value for the contour CSV (repeatable)", type=float, action="append")
    o.add("--well-structured", False, "also estimate the tangent and position bounds", action="store_true")
    o.add("--ws-directions", "1,0;0,1;0.7071067811865476,0.7071067811865476;0.7071067811865476,-0.7071067811865476",
          "translation directions 'hx,hy;...'")
    o.add("--ws-offsets", "4,8", "translation offsets in grid spacings")
    o.add("--ws-n-s", 64, "arclength samples per curve comparison", type=int)
    o.add("--ws-lattice", 5, "interior sample lattice size per side", type=int)
    _common(o)

    o = new("verify", "run the acceptance suite and write a report")
    _common(o)
    return parser, {k: v.defaults for k, v in table.items()}


COMMANDS = {
    "forward": cmd_forward,
    "lgp": cmd_lgp,
    "reconstruct": cmd_reconstruct,
    "sweep": cmd_sweep,
    "levelsets": cmd_levelsets,
    "verify": cmd_verify,
}

INPUT_ERRORS = (InputError, GridFormatError, ExpressionError, AdmissibilityError, ValueError, FileNotFoundError)


def main(argv=None) -> int:
    parser, defaults = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.debug else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args, defaults[args.command])
        out, code = COMMANDS[args.command](cfg)
        out.commit(cfg, code)
        return code
    except INPUT_ERRORS as exc:
        if args.debug:
            traceback.print_exc()
        print(f"cdii {args.command}: error: {exc}", file=sys.stderr, flush=True)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort internal error
        traceback.print_exc()
        print(f"cdii {args.command}: internal error: {exc}", file=sys.stderr, flush=True)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
