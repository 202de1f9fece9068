"""2D current density impedance imaging lab.

Forward conductivity solves, a weighted least-gradient solver, conductivity
recovery from current magnitude, level-set geometry and stability sweeps on
uniform node-centered grids.
"""

__version__ = "0.1.0"

from .field_core import (  # noqa: E402
    BoundaryTrace,
    Grid2D,
    ScalarField,
    VectorField2,
    coarea_check,
    divergence,
    gradient,
    hessian,
    integrate,
    lp_norm,
)
from .forward import (  # noqa: E402
    AdmissibilityBounds,
    AdmissibilityError,
    ConductivityProblem,
    admissibility_check,
    solve_conductivity,
)
from .least_gradient import LGPProblem, PDParams, dual_certificate, recover_sigma, solve_lgp  # noqa: E402
from .level_sets import extract_level_set, level_set_stats, well_structured_estimate  # noqa: E402
from .stability_lab import PerturbationFamily, run_sweep  # noqa: E402

__all__ = [
    "AdmissibilityBounds",
    "AdmissibilityError",
    "BoundaryTrace",
    "ConductivityProblem",
    "Grid2D",
    "LGPProblem",
    "PDParams",
    "PerturbationFamily",
    "ScalarField",
    "VectorField2",
    "admissibility_check",
    "coarea_check",
    "divergence",
    "dual_certificate",
    "extract_level_set",
    "gradient",
    "hessian",
    "integrate",
    "level_set_stats",
    "lp_norm",
    "recover_sigma",
    "run_sweep",
    "solve_conductivity",
    "solve_lgp",
    "well_structured_estimate",
]
