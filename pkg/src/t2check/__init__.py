"""Transportation-cost, entropy, Orlicz and spectral inequality checks on
finite metric measure spaces."""

__version__ = "0.1.0"

from .errors import (
    DomainError,
    ParameterError,
    ParseError,
    SolverError,
    T2CheckError,
    ValidationError,
)
from .space import (
    Density,
    DensityFamily,
    MetricMeasureSpace,
    build_grid_space,
    gaussian_grid,
    grid_space_with_outposts,
    sample_family,
    validate_density,
)
from .transport import (
    DualPair,
    TransportPlan,
    dual_certificate,
    independent_coupling_cost,
    inf_convolution,
    solve_entropic,
    solve_exact,
)
from .entropy import (
    TAU,
    TAU_STAR,
    OrliczNorm,
    YoungFunction,
    bolley_villani_ratio,
    distance_gauge_norm,
    exp_integral,
    gauge_norm,
    holder_orlicz_margin,
    large_entropy_bound,
    log_plus_moment,
    relative_entropy,
)
from .spectral import (
    DirichletForm,
    PoincareResult,
    grid_gradient_form,
    lo_alpha_value,
    poincare_constant,
)
from .flow import (
    FlowTrace,
    GeneratorSpec,
    default_time_grid,
    entropy_trace,
    generator_from_form,
    grid_flow_generator,
    heat_flow,
    metropolis_generator,
    p_norm_trace,
    w2_flow_trace,
)
from .inequalities import (
    InequalityReport,
    concentration_check,
    cutoff_decomposition_check,
    cutoff_mass_check,
    estimate_tp_constant,
    modified_t2_check,
    modified_t2_prefactor,
    optimal_cost_exponent,
    pnorm_deficit_check,
    small_entropy_check,
    t2_ratio,
    tail_entropy_check,
    tail_second_moment_ratio,
    truncate_density,
    truncated_entropy_check,
    truncation_cost_ratio,
)
from .report import RunConfig, SuiteSummary, emit_report, load_run_config, run_suite
