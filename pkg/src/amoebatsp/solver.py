"""Single solution-search trials: iterate steps until a tour appears."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DEFAULT_INIT_LEVEL, AmoebaState, StepDiagnostics, VariantConfig, step
from .instance import (
    ConfigurationError,
    ParamSet,
    TspInstance,
    decode_solution,
    estimated_route_length,
    route_length,
)

DEFAULT_MAX_ITERS = 3000


@dataclass
class TrialResult:
    """Outcome of one trial; tour and ratios present only on success."""

    success: bool
    iterations: int
    tour: tuple[int, ...] | None = None
    r_calc: float | None = None
    ratio: float | None = None
    trace: list[StepDiagnostics] | None = None
    final_x: np.ndarray | None = None


def check_termination(x: np.ndarray) -> tuple[int, ...] | None:
    """Tour iff the thresholded state is a permutation matrix."""
    return decode_solution(x).tour


def run_trial(inst: TspInstance, params: ParamSet, cfg: VariantConfig, seed: int,
              max_iters: int = DEFAULT_MAX_ITERS, trace: bool = False,
              init_level: float = DEFAULT_INIT_LEVEL) -> TrialResult:
    """Run one seeded search and report the first valid tour, if any.

    Refuses to run with an uncalibrated nu (constraint penalties must
    dominate any two-edge path cost). Termination is checked after every
    full step. Deterministic for fixed inputs.
    """
    if not params.is_calibrated(inst):
        raise ConfigurationError(
            "nu is not calibrated for this map; use ParamSet.for_instance or compute_nu")
    if max_iters < 1:
        raise ConfigurationError("max_iters must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    state = AmoebaState.initial(inst.n, level=init_level)
    diags: list[StepDiagnostics] | None = [] if trace else None
    for _ in range(max_iters):
        state, diag = step(state, inst, params, cfg, rng)
        if trace:
            diags.append(diag)
        tour = check_termination(state.x)
        if tour is not None:
            r_calc = route_length(tour, inst)
            return TrialResult(
                success=True,
                iterations=state.t,
                tour=tour,
                r_calc=r_calc,
                ratio=r_calc / estimated_route_length(inst.n),
                trace=diags,
                final_x=state.x,
            )
    return TrialResult(success=False, iterations=max_iters, trace=diags, final_x=state.x)
