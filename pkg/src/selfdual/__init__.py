"""Selfdual variational solvers for evolution equations.

Solutions of ``u' + Lambda u + d Phi(u) = 0`` with a temporal boundary condition
are obtained by minimizing a nonnegative anti-selfdual path functional whose
minimum value is exactly zero, so the attained value certifies the solution.
"""
from .boundary import BoundaryLagrangian, boundary_residual, boundary_value, make_boundary
from .convex import (
    ConvexPotential,
    Indicator,
    PowerNorm,
    QuadraticForm,
    QuarticNorm,
    ScaledSquare,
    TabulatedConvex,
    conjugate_value,
    fenchel_gap,
    potential_value,
    subgradient,
)
from .errors import (
    ConfigError,
    DimensionError,
    DomainWarning,
    InvalidArgument,
    OracleConvergenceError,
    SelfdualError,
    UnsupportedOperation,
)
from .fields import (
    SpectralField,
    TorusGrid,
    advection,
    duality_map,
    leray_project,
    random_field,
    regularity_ratio,
    resample,
    shear,
    stokes_inverse,
    taylor_green,
)
from .functional import (
    DiscreteFunctional,
    FunctionalReport,
    Path,
    StationaryFunctional,
    energy_identity_residual,
    energy_inequality_check,
    functional_gradient,
    functional_value,
    stationary_functional,
)
from .lagrangians import (
    ASDLagrangian,
    Potential,
    QuadraticLagrangian,
    SkewPotential,
    TabulatedLagrangian,
    derived_field,
    hamiltonian,
    lagrangian_value,
    oplus,
    regularize,
    selfduality_residual,
)
from .optimize import SolveOptions, SolveTrace, continuation, fd_gradient_audit, minimize
from .oracle import StepperConfig, compare_paths, solve_ivp, step, stokes_decay_path

__version__ = "0.1.0"
