import logging

import numpy as np

from app.core.ledger import decoupling_cost, log_negativity, measurement_energy_cost
from app.core.linalg import DensityOperator, OperatorMatrix
from app.core.model import DriveMode, EngineParams, Stage, h_total, initial_joint_state
from app.core.strategies.base import BaseDriveStrategy, StrokeContext, StrokeResult
from app.core.strategies.strong_coupling_std import lubricant_reset_cost
from app.core.zeno import (
    entropy_production,
    expected_stroke_energetics,
    pulse_schedule,
    run_zeno_stroke,
    trajectory_rng,
)


# Configure Logging
logger = logging.getLogger(__name__)

STAGE_STREAM = {Stage.COMPRESSION: 0, Stage.EXPANSION: 1}


class ZenoStrategy(BaseDriveStrategy):
    """
    Pulsed drive under H_tot interleaved with n selective lubricant
    measurements. A cycle follows a single stochastic trajectory per stroke.
    """

    mode = DriveMode.ZENO_MONITORED

    def run_stroke(
        self,
        p: EngineParams,
        stage: Stage,
        rho_S: DensityOperator,
        context: StrokeContext,
    ) -> StrokeResult:
        rho_SL_in = initial_joint_state(rho_S, p)
        schedule = pulse_schedule(p, stage, context.settings)
        rng = trajectory_rng(context.master_seed, *context.stream_keys, STAGE_STREAM[stage])

        times = [0.0]
        path = [rho_SL_in.matrix]
        cost = {"heat": 0.0, "reset": 0.0}

        def observe(k: int, s: float, before: OperatorMatrix, after: OperatorMatrix) -> None:
            heat, reset = measurement_energy_cost(
                DensityOperator.from_matrix(before), h_total(p, s, stage), context.basis, p.beta_reset
            )
            cost["heat"] += heat
            cost["reset"] += reset
            times.append(s)
            path.append(after)

        record = run_zeno_stroke(
            p, stage, rho_SL_in, context.basis, rng, context.settings, schedule, observer=observe
        )

        # Exact marginals of the first and last outcomes for σ
        expectation = expected_stroke_energetics(
            p, stage, rho_SL_in, context.basis, context.settings, schedule
        )
        sigma = entropy_production(
            expectation.last_outcome_marginal[record.outcomes[-1]],
            expectation.first_outcome_marginal[record.outcomes[0]],
        )

        reset = lubricant_reset_cost(p, record.final_state) if context.include_reset_cost else 0.0
        logger.debug(
            f"Zeno {stage.value}: {record.jump_count} jumps, ΣδW={record.total_work:.6f}, "
            f"ΣδQ={record.total_meas_heat:.6f}"
        )
        return StrokeResult(
            rho_S_final=record.final_state.reduce("first"),
            times=np.asarray(times),
            path=path,
            rho_SL_initial=rho_SL_in,
            rho_SL_final=record.final_state,
            joint_energy_change=record.final_energy - record.initial_energy,
            decoupling_cost=decoupling_cost(p, stage, record.final_state, rho_S),
            zeno_work=record.total_work,
            meas_heat=record.total_meas_heat,
            meas_energy_cost=cost["heat"] + cost["reset"] + reset,
            entropy_production=sigma,
            jump_count=record.jump_count,
            extras={
                "negativity": log_negativity(record.final_state),
                "mean_work": expectation.mean_work,
                "mean_meas_heat": expectation.mean_meas_heat,
            },
        )
