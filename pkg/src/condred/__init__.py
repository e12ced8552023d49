"""condred: dynamics of strongly anisotropic condensates.

Simulates the full rotating-frame dynamics with tight transverse
confinement together with its averaged, semiclassical, and limit
envelope models, and measures the convergence rates between them.
"""

__version__ = "0.1.0"

from .config import (
    SCENARIOS,
    StudyConfig,
    load_config,
    make_amplitude,
    make_basis,
    make_grid,
    make_phase,
    parse_config,
    scenario_config,
    serialize_config,
)
from .convergence import (
    PAIR_ROLES,
    CellResult,
    ConvergenceReport,
    SlopeFit,
    StudySetup,
    discretization_guard,
    emit,
    equivalence_gap,
    error_curve,
    fit_rate,
    pair_error,
    report_from_json,
    report_to_csv,
    report_to_json,
    report_to_svg,
    run_study,
    setup_from_config,
)
from .dynamics import (
    EQUATIONS,
    RaySolution,
    SolverParams,
    Trajectory,
    alpha_from_beta,
    dt_cap,
    from_envelope,
    make_params,
    scaling_beta,
    solve_envelope,
    solve_gpe,
    solve_rays,
    to_envelope,
)
from .eikonal import (
    InitialPhase,
    PhaseField,
    PhaseProvider,
    caustic_time,
    gaussian_bump_phase,
    linear_phase,
    phase_on_grid,
    quadratic_phase,
    zero_phase,
)
from .errors import (
    CausticError,
    CondredError,
    ConfigError,
    DecayError,
    NewtonError,
    NumericalError,
    StepSizeError,
)
from .fields import (
    Field,
    GridSpec,
    InitialAmplitude,
    bm_error,
    bm_norm,
    custom_amplitude,
    interpolate_periodic,
    mass,
    polarized_gaussian,
    sample_initial,
    two_mode,
    write_field_csv,
)
from .hermite import (
    HermiteBasis,
    build_basis,
    hermite_values,
    lambda_weights,
    propagate,
    to_coefficients,
    to_node_values,
)
from .nonlinearity import (
    averaged_cubic_quadrature,
    averaged_cubic_resonance,
    filtered_cubic,
)

__all__ = [
    "CausticError",
    "CellResult",
    "CondredError",
    "ConfigError",
    "ConvergenceReport",
    "DecayError",
    "EQUATIONS",
    "Field",
    "GridSpec",
    "HermiteBasis",
    "InitialAmplitude",
    "InitialPhase",
    "NewtonError",
    "NumericalError",
    "PAIR_ROLES",
    "PhaseField",
    "PhaseProvider",
    "RaySolution",
    "SCENARIOS",
    "SlopeFit",
    "SolverParams",
    "StepSizeError",
    "StudyConfig",
    "StudySetup",
    "Trajectory",
    "alpha_from_beta",
    "averaged_cubic_quadrature",
    "averaged_cubic_resonance",
    "bm_error",
    "bm_norm",
    "build_basis",
    "caustic_time",
    "custom_amplitude",
    "discretization_guard",
    "dt_cap",
    "emit",
    "equivalence_gap",
    "error_curve",
    "filtered_cubic",
    "fit_rate",
    "from_envelope",
    "gaussian_bump_phase",
    "hermite_values",
    "interpolate_periodic",
    "lambda_weights",
    "linear_phase",
    "load_config",
    "make_amplitude",
    "make_basis",
    "make_grid",
    "make_params",
    "make_phase",
    "mass",
    "pair_error",
    "parse_config",
    "phase_on_grid",
    "polarized_gaussian",
    "propagate",
    "quadratic_phase",
    "report_from_json",
    "report_to_csv",
    "report_to_json",
    "report_to_svg",
    "run_study",
    "sample_initial",
    "scaling_beta",
    "scenario_config",
    "serialize_config",
    "setup_from_config",
    "solve_envelope",
    "solve_gpe",
    "solve_rays",
    "to_coefficients",
    "to_envelope",
    "to_node_values",
    "two_mode",
    "write_field_csv",
    "zero_phase",
    "__version__",
]
