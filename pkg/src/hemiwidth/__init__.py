"""Width spectra, calibrated hemi-ellipsoid billiards, and Crofton-formula
mass estimates for polynomial sweepouts on the hemisphere."""

from .billiards import (
    BilliardTrajectory,
    ClassSummary,
    SearchConfig,
    TrajectoryClass,
    boundary_trajectory,
    double_trajectory,
    find_closed_trajectories,
    reflect_at_boundary,
    shoot_billiard,
    summarize_classes,
)
from .crofton import (
    BivariatePolynomial,
    GreatCircle,
    MassEstimate,
    MonteCarlo,
    Quadrature,
    SupSearchBudget,
    count_circle_intersections,
    crofton_mass,
    restrict_to_circle,
    sweepout_sup_mass,
    trace_level_set_length,
    verify_upper_bound_chain,
)
from .ellipsoid import (
    CalibrationResult,
    Ellipsoid,
    GeodesicState,
    HemiEllipsoid,
    calibrate,
    ellipse_circumference,
    integrate_geodesic,
    joachimsthal,
    principal_curve_lengths,
)
from .widths import (
    LengthValue,
    SpectrumTable,
    degree_index,
    enumerate_length_spectrum,
    hemisphere_width,
    rp2_width,
    sphere_width,
    triangular_dimension,
    verify_counting_identity,
)

__version__ = "0.1.0"
