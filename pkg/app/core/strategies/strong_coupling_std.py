import logging
from typing import Callable

from app.core.ledger import decoupling_cost, log_negativity
from app.core.linalg import DensityOperator, OperatorMatrix, von_neumann_entropy
from app.core.model import (
    DriveMode,
    EngineParams,
    Stage,
    coupling,
    h_total,
    initial_joint_state,
    lubricant_state,
    stroke_duration,
)
from app.core.propagation import evolve_path
from app.core.strategies.base import BaseDriveStrategy, StrokeContext, StrokeResult


# Configure Logging
logger = logging.getLogger(__name__)


def lubricant_reset_cost(p: EngineParams, rho_SL_final: DensityOperator) -> float:
    """Landauer cost of returning the lubricant to its prepared state."""
    s_final = von_neumann_entropy(rho_SL_final.reduce("second").matrix)
    s_prepared = von_neumann_entropy(lubricant_state(p).matrix)
    return (s_final - s_prepared) / p.beta_reset


class StrongCouplingStrategy(BaseDriveStrategy):
    """
    Always-on coupling Γ R(t) ⊗ X to a lubricant prepared fresh at the start
    of each work stroke and discarded at its end.
    """

    mode = DriveMode.STRONG_COUPLING

    def generator(self, p: EngineParams, stage: Stage) -> Callable[[float], OperatorMatrix]:
        return lambda s: h_total(p, s, stage)

    def run_stroke(
        self,
        p: EngineParams,
        stage: Stage,
        rho_S: DensityOperator,
        context: StrokeContext,
    ) -> StrokeResult:
        duration = stroke_duration(p, stage)
        rho_SL_in = initial_joint_state(rho_S, p)
        times, path = evolve_path(
            self.generator(p, stage),
            rho_SL_in,
            0.0,
            duration,
            context.settings,
            gamma=coupling(p, stage),
        )
        rho_SL_out = DensityOperator.from_matrix(path[-1])

        # Joint energetics are always measured against the physical H_tot
        energy_change = rho_SL_out.expect(h_total(p, duration, stage)) - rho_SL_in.expect(
            h_total(p, 0.0, stage)
        )
        reset = lubricant_reset_cost(p, rho_SL_out) if context.include_reset_cost else 0.0

        return StrokeResult(
            rho_S_final=rho_SL_out.reduce("first"),
            times=times,
            path=path,
            rho_SL_initial=rho_SL_in,
            rho_SL_final=rho_SL_out,
            joint_energy_change=energy_change,
            decoupling_cost=decoupling_cost(p, stage, rho_SL_out, rho_S),
            meas_energy_cost=reset,
            extras={"negativity": log_negativity(rho_SL_out)},
        )
