"""Finite-volume solver for the 1D non-local cell-cell adhesion PDE.

The density u(x, t) on [0, L] obeys

    u_t = D u_xx - alpha * (u K[u])_x,

where K[u] integrates the adhesion response H(u) against an odd kernel
Omega over an x-dependent sampling slice.  Sampling slices implement
periodic, naive (repulsive), no-flux, and adhesive/repulsive wall-
interaction boundary treatments.
"""

__version__ = "0.1.0"

from .analysis import (
    BifurcationPoint,
    DispersionPoint,
    GrowthFit,
    PeakCensus,
    bifurcation_alpha,
    detect_steady,
    diagnostics,
    dispersion_table,
    growth_rate,
    measure_growth_rate,
    mode_amplitude,
    peak_census,
    shape_factor,
)
from .discretization import (
    AdhesionProblem,
    FluxBC,
    Grid,
    NonlocalWeights,
    Rhs,
    advective_flux_limited,
    apply_nonlocal,
    build_grid,
    diffusive_flux,
    nonlocal_row,
    precompute_weights,
    rhs,
)
from .errors import (
    ConfigError,
    IntegrationFailureError,
    InvalidParameterError,
    UnsuitableDomainError,
)
from .integrator import IntegratorConfig, RunStats, State, StepResult, integrate, step_adaptive
from .kernels import (
    DomainKind,
    InteractionKernel,
    NonlocalFieldSample,
    SamplingDomain,
    ValidationReport,
    balanced_wall_strengths,
    eval_nonlocal_direct,
    eval_nonlocal_direct_many,
    make_kernel,
    make_sampling_domain,
    validate_suitable,
    wall_term,
)
