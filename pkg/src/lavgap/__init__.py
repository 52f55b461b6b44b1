"""Numerical laboratory for double phase energies with smooth, degenerate weights."""

from .classifiers import (
    ConditionReport,
    WeightClassification,
    classify_weight,
    exponent_gate,
    global_muckenhoupt_constant,
    local_minima,
    muckenhoupt_ball_value,
    muckenhoupt_constant,
    verdict_from_estimates,
    z_constant,
)
from .decomposition import DecompositionField, decompose_on_grid, omega_at, sigma_at
from .energy import (
    ApproximationTrace,
    EnergySpec,
    approximate,
    energy,
    energy_terms,
    equiintegrability_index,
    luxembourg_norm,
    modular,
    mode_gate,
    truncate,
)
from .errors import (
    CatalogError,
    ConfigError,
    ContainmentError,
    DivergenceError,
    GateRefused,
    HypothesisError,
    LavgapError,
    OrderError,
    ParameterError,
)
from .experiments import (
    ConeConfig,
    GapReport,
    MinimizationResult,
    absence_experiment,
    angular_oracle,
    competitor_energy,
    cone_competitor,
    cone_weight,
    gap_experiment,
    mesh_axes,
    minimize_discrete,
)
from .geometry import Ball, Domain, QuadratureRule, StarShape, graded_quadrature, sample_balls
from .mollifier import (
    MollifierConfig,
    ScalarField,
    check_holder_bound,
    check_linf_bound,
    kernel_constants,
    kernel_eval,
    maximal_function,
    mollify,
    mollify_field,
    mollify_gradient,
)
from .polycover import (
    DerivativeWindow,
    IntervalCover,
    Polynomial,
    cover_ratio_constant,
    interval_cover,
    negative_power_average_bound,
    verify_cover,
)
from .weights import (
    CatalogEntry,
    Weight,
    catalog_get,
    catalog_names,
    constant_weight,
    derivative_norm,
    holder_seminorm_estimate,
    with_smoothness,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
