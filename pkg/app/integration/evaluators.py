"""
What a sweep point computes.

Each evaluator turns one ``SweepPoint`` into one or more CSV rows. Evaluators
are module-level functions so sweep points can be shipped to worker processes.
"""

import dataclasses
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from app.core.engine import EngineOptions, OttoEngine
from app.core.exceptions import ZenoOttoError
from app.core.ledger import (
    coherence_l1,
    fit_decay_rate,
    friction_work,
    ideal_otto,
    stroke_work,
    thermalization_time,
    work_integral,
)
from app.core.linalg import DensityOperator, trace_norm
from app.core.model import (
    DriveMode,
    EngineParams,
    Stage,
    coupling,
    h_cold,
    h_hot,
    initial_joint_state,
    stroke_duration,
    thermal_state,
)
from app.core.propagation import PropagationSettings, lindblad_path, adiabatic_elimination_bound
from app.core.zeno import (
    MeasurementBasis,
    entropy_production,
    expected_stroke_energetics,
    no_jump_probability,
    pulse_schedule,
    run_ensemble,
)


# Configure Logging
logger = logging.getLogger(__name__)

Row = Dict[str, Any]

# Thermalization runs last this many relaxation times; the fit uses the second half
RELAXATION_SPAN = 12.0
RECORDED_SAMPLES = 400


@dataclasses.dataclass(frozen=True)
class SweepPoint:
    """Fully resolved inputs of one sweep point."""

    index: int
    coordinates: Dict[str, float]
    params: EngineParams
    drive_mode: DriveMode
    basis: MeasurementBasis
    stage: Stage
    settings: PropagationSettings
    options: EngineOptions


def _engine(point: SweepPoint) -> OttoEngine:
    options = point.options.model_copy(update={"stream_keys": (point.index,)})
    return OttoEngine(point.params, point.drive_mode, point.basis, point.settings, options)


def stroke_start(p: EngineParams, stage: Stage) -> DensityOperator:
    """Ideal state at the start of a stroke: Gibbs of the preceding isochore."""
    if stage is Stage.COMPRESSION:
        return thermal_state(h_cold(p), p.T_c)
    return thermal_state(h_hot(p), p.T_h)


def _stroke_hamiltonians(p: EngineParams, stage: Stage):
    return (h_cold(p), h_hot(p)) if stage is Stage.COMPRESSION else (h_hot(p), h_cold(p))


def _ideal_stroke_work(p: EngineParams, stage: Stage) -> float:
    ideal = ideal_otto(p)
    return ideal.W_comp if stage is Stage.COMPRESSION else ideal.W_exp


# --- Evaluators ---


def evaluate_cycle(point: SweepPoint) -> List[Row]:
    return [_engine(point).run().model_dump()]


def evaluate_stroke(point: SweepPoint) -> List[Row]:
    """Diagnostics of a single work stroke started from the ideal Gibbs state."""
    p, stage = point.params, point.stage
    rho_i = stroke_start(p, stage)
    result = _engine(point).run_work_stroke(stage, rho_i)
    h_i, h_f = _stroke_hamiltonians(p, stage)
    friction = friction_work(p, stage, result.times, result.path)
    work = stroke_work(h_i, h_f, rho_i, result.rho_S_final)
    return [
        {
            "W_stroke": work,
            "W_integral": work_integral(p, stage, result.times, result.path),
            "W_transitionless": _ideal_stroke_work(p, stage),
            "friction_coherent": friction.coherent_part,
            "friction_population": friction.population_part,
            "coherence": coherence_l1(result.rho_S_final, h_f),
            "negativity": result.extras.get("negativity", 0.0),
            "decoupling_cost": result.decoupling_cost,
            "W_joint": work if result.joint_energy_change is None else result.joint_energy_change,
            "W_zeno": result.zeno_work,
            "meas_heat": result.meas_heat,
            "meas_energy_cost": result.meas_energy_cost,
            "entropy_production": result.entropy_production,
            "jump_count": result.jump_count,
        }
    ]


def _sigma_exact(basis: MeasurementBasis, exact) -> float:
    """
    σ of the no-jump record, ℓ₁ = ℓ_n = reference outcome.

    p(ℓ₁) is the exact first-outcome marginal rather than 1. The two differ
    by the probability of a jump on the first pulse, O(δt²ω_L²).
    """
    reference = basis.reference_outcome
    if reference is None or exact.last_outcome_marginal[reference] <= 0:
        return math.nan
    return entropy_production(exact.last_outcome_marginal[reference], exact.first_outcome_marginal[reference])


def evaluate_ensemble(point: SweepPoint) -> List[Row]:
    """Sampled Zeno ensemble next to its exact expectations."""
    p, stage, basis = point.params, point.stage, point.basis
    rho_SL = initial_joint_state(stroke_start(p, stage), p)
    schedule = pulse_schedule(p, stage, point.settings)
    ensemble = run_ensemble(
        p, stage, rho_SL, basis, p.n_traj, p.master_seed, point.settings, stream_keys=(point.index,)
    )
    exact = expected_stroke_energetics(p, stage, rho_SL, basis, point.settings, schedule)
    p_jump = 1.0 - no_jump_probability(p, stage, rho_SL, basis, point.settings, schedule)
    dt = stroke_duration(p, stage) / p.n_meas
    return [
        {
            "mean_work": ensemble.mean_work,
            "mean_meas_heat": ensemble.mean_meas_heat,
            "std_work": ensemble.std_work,
            "jump_fraction": ensemble.jump_fraction,
            "mean_jump_count": ensemble.mean_jump_count,
            "exact_mean_work": exact.mean_work,
            "exact_mean_meas_heat": exact.mean_meas_heat,
            "p_jump": p_jump,
            "sigma_exact": _sigma_exact(basis, exact),
            "sigma_small_step": p.n_meas * (dt * p.omega_L) ** 2 / 4.0,
            "W_transitionless": _ideal_stroke_work(p, stage),
        }
    ]


def evaluate_increments(point: SweepPoint) -> List[Row]:
    """Per-step δW_k and δQ_k of every sampled trajectory."""
    p, stage = point.params, point.stage
    rho_SL = initial_joint_state(stroke_start(p, stage), p)
    ensemble = run_ensemble(
        p, stage, rho_SL, point.basis, p.n_traj, p.master_seed, point.settings, stream_keys=(point.index,)
    )
    times = np.linspace(0.0, stroke_duration(p, stage), p.n_meas + 1)[1:]
    rows: List[Row] = []
    for i, record in enumerate(ensemble.records):
        for k, outcome in enumerate(record.outcomes):
            rows.append(
                {
                    "trajectory": i,
                    "step": k,
                    "time": float(times[k]),
                    "outcome": outcome,
                    "step_work": float(record.step_work[k]),
                    "step_meas_heat": float(record.step_meas_heat[k]),
                }
            )
    return rows


def evaluate_bound(point: SweepPoint) -> List[Row]:
    p, stage = point.params, point.stage
    report = adiabatic_elimination_bound(p, stage, coupling(p, stage), point.settings)
    return [{**dataclasses.asdict(report), "holds": report.holds}]


def evaluate_thermalization(point: SweepPoint) -> List[Row]:
    """Fitted relaxation rate of ‖ρ(t) − ρ_Gibbs‖₁ against λ_gap, for both baths."""
    p = point.params
    rows: List[Row] = []
    for bath, start, target in (
        ("hot", thermal_state(h_cold(p), p.T_c), thermal_state(h_hot(p), p.T_h)),
        ("cold", thermal_state(h_hot(p), p.T_h), thermal_state(h_cold(p), p.T_c)),
    ):
        lambda_gap, tau_estimate = thermalization_time(p, bath)
        row: Row = {"bath": bath, "lambda_gap": lambda_gap, "tau_estimate": tau_estimate}
        if lambda_gap == 0:
            rows.append({**row, "fitted_rate": math.nan, "r_squared": math.nan, "relative_error": math.nan})
            continue

        duration = RELAXATION_SPAN / lambda_gap
        n_steps = math.ceil(duration / point.settings.lindblad_step)
        times, path = lindblad_path(
            bath, p, start, duration, point.settings, record_every=max(1, n_steps // RECORDED_SAMPLES)
        )
        distances = np.array([trace_norm(m - target.matrix) for m in path])
        tail = times >= 0.5 * duration
        fit = fit_decay_rate(times[tail], distances[tail])
        rows.append(
            {
                **row,
                "fitted_rate": fit.rate,
                "r_squared": fit.r_squared,
                "relative_error": abs(fit.rate - lambda_gap) / lambda_gap,
            }
        )
    return rows


# Registry of Evaluators
EVALUATORS: Dict[str, Callable[[SweepPoint], List[Row]]] = {
    "cycle": evaluate_cycle,
    "stroke": evaluate_stroke,
    "ensemble": evaluate_ensemble,
    "increments": evaluate_increments,
    "bound": evaluate_bound,
    "thermalization": evaluate_thermalization,
}


def evaluate_point(task: Tuple[str, SweepPoint]) -> Tuple[List[Row], Optional[ZenoOttoError]]:
    """
    Runs one sweep point. Simulator errors are returned, not raised, so one
    failing point never takes the rest of the sweep down.
    """
    kind, point = task
    try:
        return EVALUATORS[kind](point), None
    except ZenoOttoError as e:
        logger.error(f"Sweep point {point.index} ({kind}) failed: {e}")
        return [], e
