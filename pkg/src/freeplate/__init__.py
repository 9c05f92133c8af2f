"""Free plate under tension: Rayleigh-Ritz eigenvalues and Kroger-type bound checks."""

__version__ = "0.1.0"

from .assembly import FormMatrices, assemble, stiffness  # noqa: E402
from .basis import BasisSet, build_basis, eval_derivatives, evaluate  # noqa: E402
from .bounds import (  # noqa: E402
    BoundInputs,
    F_eval,
    minimize_F,
    next_bound,
    next_bound_tau_positive,
    next_bound_tau_zero,
    sum_bound,
)
from .eigensolver import SpectralResult, rayleigh_quotient, solve, solve_pencil  # noqa: E402
from .errors import *  # noqa: E402,F401,F403
from .geometry import Ball, PlateParams, Rectangle, boundary_quadrature, interior_quadrature  # noqa: E402
from .verify import (  # noqa: E402
    check_bounds,
    chasman_regime,
    coercivity_ledger,
    laplacian_hessian_gap,
    residuals,
    szego_weinberg_compare,
)
