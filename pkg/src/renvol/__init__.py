"""Renormalized volumes and areas of conformally compact Einstein models.

The pipeline runs in three layers: boundary-metric families with pointwise
curvature and quadrature (``families``, ``curvature``), radial expansions
and defining-function gauges (``fg``, ``gauge``), and the volume and area
renormalization with their cross-checks (``volume``, ``area``).
"""

from .backend import BACKEND
from .errors import (
    DimensionUnsupportedError,
    DomainError,
    FitDegeneracyError,
    GaugeBreakdownError,
    ImmersionError,
    IndeterminacyError,
    InsufficientOrderError,
    InversionError,
    RenvolError,
    ResolutionError,
    ShapeError,
    ShootingError,
    SingularMetricError,
    SymmetryError,
)
from .families import (
    AxisSpec,
    ConformalRescaling,
    FlatTorus,
    Grid,
    HopfSphere3,
    MetricFamily,
    RoundSphere,
    StereographicSphere,
    Upsilon,
    integrate_scalar,
    sphere_area,
)
from .curvature import (
    conformal_invariants_6d,
    curvature_pack,
    gauss_bonnet_sides,
)
from .series import TruncSeries, series_einsum
from .fg import (
    PowerSeriesMetric,
    VolumeSeries,
    closed_form_v,
    det_ratio_series,
    einstein_residual,
    fg_expand,
    volume_series,
)
from .gauge import (
    AmbientModel,
    GaugeMap,
    HyperbolicNormalForm,
    NormalForm,
    OmegaField,
    SeriesNormalForm,
    change_of_gauge,
    hyperbolic_normal_form,
    odd_radial_derivatives,
    solve_special_defining,
)
from .volume import (
    AnomalyReport,
    EpsilonFit,
    L_identity_homogeneous,
    L_identity_sides,
    default_eps_grid,
    gauge_volume_difference,
    hyperbolic_reference,
    log_coefficient_direct,
    renormalized_volume,
    subtraction_volume,
    volume_anomaly,
    volume_profile,
)
from .area import (
    AreaFit,
    Embedding,
    HopfTorus,
    LatitudeCircle,
    MinimalGraph,
    SubmanifoldPatch,
    a_coefficient,
    area_anomaly,
    equivariant_minimal_graph,
    geodesic_between,
    k2_log_coefficient,
    renormalized_area,
    submanifold_geometry,
    totally_geodesic,
)

__version__ = "0.1.0"
