"""Boundary flow simulation and multifractal exponent estimation for chordal SLE."""

from .algebra import (
    BetaRange,
    DomainError,
    InvariantLaw,
    SpectrumParams,
    a_from_kappa,
    beta_endpoints,
    dimension_of_beta,
    invariant_law,
    lambda_critical,
    nu_critical,
    nu_hitting,
    params_from_beta,
    params_from_lambda,
    params_from_nu,
    stationary_ergodic_beta,
    xi_dimension,
)
from .driving import (
    BrownianDriver,
    ConstantDriver,
    Driver,
    NoisePath,
    SqrtSingularDriver,
    TabulatedDriver,
    evaluate,
    refine,
    sample_path,
    tabulated_from_csv,
)
from .flow import (
    FlowConfig,
    FlowError,
    FlowFrame,
    FlowPoint,
    FlowRun,
    L_process,
    approach_time,
    conformal_radius,
    evolve,
    martingale_check,
    radial_clock,
    write_frames_csv,
)
from .weighted import (
    ConcentrationReport,
    WeightedPath,
    concentration_fraction,
    exp_moment,
    occupation_test,
    report_record,
    simulate_A_star,
    weighted_moment,
    write_path_csv,
    write_reports_json,
)

from .trace import (
    AngleEstimate,
    TraceCurve,
    TraceError,
    backward_trace,
    collision_angle,
    collision_angle_formula,
    distance_to_trace,
    write_trace_csv,
)

__all__ = [
    "AngleEstimate",
    "BetaRange",
    "BrownianDriver",
    "ConcentrationReport",
    "ConstantDriver",
    "DomainError",
    "Driver",
    "FlowConfig",
    "FlowError",
    "FlowFrame",
    "FlowPoint",
    "FlowRun",
    "InvariantLaw",
    "L_process",
    "NoisePath",
    "SpectrumParams",
    "SqrtSingularDriver",
    "TabulatedDriver",
    "TraceCurve",
    "TraceError",
    "WeightedPath",
    "a_from_kappa",
    "approach_time",
    "backward_trace",
    "beta_endpoints",
    "collision_angle",
    "collision_angle_formula",
    "concentration_fraction",
    "conformal_radius",
    "dimension_of_beta",
    "distance_to_trace",
    "evaluate",
    "evolve",
    "exp_moment",
    "invariant_law",
    "lambda_critical",
    "martingale_check",
    "nu_critical",
    "nu_hitting",
    "occupation_test",
    "params_from_beta",
    "params_from_lambda",
    "params_from_nu",
    "radial_clock",
    "refine",
    "report_record",
    "sample_path",
    "simulate_A_star",
    "stationary_ergodic_beta",
    "tabulated_from_csv",
    "weighted_moment",
    "write_frames_csv",
    "write_path_csv",
    "write_reports_json",
    "write_trace_csv",
    "xi_dimension",
]

__version__ = "0.1.0"
