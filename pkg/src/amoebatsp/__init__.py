"""Amoeba-inspired TSP dynamics: a configurable stochastic lane model,
single-trial solver, and ablation/benchmark harness."""

from .dynamics import (
    DEFAULT_INIT_LEVEL,
    AmoebaState,
    ElementA,
    ElementB,
    ElementC,
    SigmoidParams,
    StepDiagnostics,
    VariantConfig,
    compute_I_and_S,
    compute_L,
    compute_O,
    conservation_residual,
    sample_fluctuations,
    sigmoid,
    step,
)
from .harness import (
    AggregateStats,
    ScalingFit,
    aggregate,
    fit_scaling,
    preset,
    run_batch,
    run_sweep,
)
from .instance import (
    ConfigurationError,
    DecodedSolution,
    GenMeta,
    InvalidInstanceError,
    ParamSet,
    TspInstance,
    brute_force_optimum,
    compute_nu,
    cost_function,
    cost_weight,
    decode_solution,
    estimated_route_length,
    generate_map,
    load_map,
    route_length,
    save_map,
)
from .solver import DEFAULT_MAX_ITERS, TrialResult, check_termination, run_trial

__version__ = "0.1.0"

__all__ = [
    "AggregateStats", "AmoebaState", "ConfigurationError", "DecodedSolution",
    "DEFAULT_INIT_LEVEL", "DEFAULT_MAX_ITERS", "ElementA", "ElementB", "ElementC",
    "GenMeta", "InvalidInstanceError", "ParamSet", "ScalingFit", "SigmoidParams",
    "StepDiagnostics", "TrialResult", "TspInstance", "VariantConfig", "aggregate",
    "brute_force_optimum", "check_termination", "compute_I_and_S", "compute_L",
    "compute_O", "compute_nu", "conservation_residual", "cost_function",
    "cost_weight", "decode_solution", "estimated_route_length", "fit_scaling",
    "generate_map", "load_map", "preset", "route_length", "run_batch",
    "run_sweep", "run_trial", "sample_fluctuations", "save_map", "sigmoid", "step",
]
