"""Expected exit times of Brownian and stable processes on bounded domains,
with certified deficit inequalities against the ball of equal volume."""

__version__ = "0.1.0"

from .asymmetry import (
    AsymmetryConfig,
    AsymmetryResult,
    MaskDomain,
    fraenkel,
    superlevel_domain,
    symdiff_fraction,
    transfer_lower_bound,
)
from .brownian import (
    McEstimate,
    PathConfig,
    WosConfig,
    ball_lifetime,
    dirichlet_energy,
    ellipse_axes_lifetime,
    ellipse_lifetime,
    exact_lifetime,
    exit_moment_mc,
    grid_torsion,
    survival_mc,
    torsional_rigidity,
    variational_bound,
    wos_lifetime,
)
from .certify import (
    AsymptoticsReport,
    Certificate,
    Constants,
    ScalingReport,
    certify_fractional,
    certify_norm,
    certify_point,
    check_rearrangement,
    constants,
    deficit_lp,
    deficit_point,
    ellipse_asymptotics,
    scaling_check,
)
from .errors import MaskMismatchError, SolverError, TorsionlabError, ValidationError
from .fields import ScalarField, field_from_function, grid_geometry, mask_field
from .geometry import (
    Ball,
    Box,
    Domain,
    Ellipse,
    EquivalentBall,
    Implicit,
    Polygon,
    Stadium,
    VolumeResult,
    boundary_distance,
    canonical_spec,
    contains,
    equivalent_ball,
    equivalent_ball_radius,
    parse_domain_spec,
    sample_interior,
    scale,
    translate,
    unit_ball_volume,
    volume,
)
from .levels import (
    DistributionFunction,
    RadialProfile,
    ball_depletion_level,
    ball_distribution,
    ball_lp_norm,
    ball_sup_norm,
    distribution_function,
    energy_derivative_check,
    gradient_sq,
    level_cutoff,
    lp_norm,
    rearrangement,
)
from .stable import (
    FractionalConfig,
    ball_amplitude,
    ball_fractional_rigidity,
    calibrate_ball_amplitude,
    coarea_seminorm,
    fractional_perimeter,
    fractional_rigidity,
    fractional_seminorm,
    fractional_torsion,
    kernel_normalization,
    level_perimeters,
    sample_overshoot,
    stable_ball_lifetime,
    stable_wos_lifetime,
)
