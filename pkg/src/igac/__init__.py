"""Information-geometric chaos analysis: statistical manifolds, geodesic and
Jacobi flows, curvature diagnostics and entropy-growth classification."""

__version__ = "0.1.0"

from .curvature import (
    curvature_tensors,
    scalar_curvature,
    sectional_by_plane,
    sectional_curvature,
    weyl_anisotropy,
)
from .exceptions import (
    ConfigError,
    ConvergenceError,
    DegenerateRegionError,
    DomainError,
    IGACError,
    MetricError,
    SupportError,
)
from .fisher import (
    IntegrationScheme,
    compose_product,
    family_log_density,
    fisher_metric,
    fisher_metric_from_hessian,
    get_family,
)
from .geodesic import (
    GeodesicPath,
    GeodesicState,
    integrate_geodesic,
    iho_trajectories,
    killing_conservation,
    norm_drift,
    unit_speed,
)
from .ige import (
    FrequencySpectrum,
    GrowthClass,
    classify_growth,
    ensemble_ige,
    explored_region,
    ige_series,
    statistical_weight,
)
from .jacobi import default_deviation, divergence_exponent, integrate_jlc
from .manifolds import DomainBox, ManifoldSpec, build_manifold, custom_manifold, metric_at
from .report import ChaosReport, chaos_report
from ._ode import StepControl
