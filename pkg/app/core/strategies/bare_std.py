import logging

from app.core.linalg import DensityOperator
from app.core.model import DriveMode, EngineParams, Stage, h_stage, stroke_duration
from app.core.propagation import evolve_path
from app.core.strategies.base import BaseDriveStrategy, StrokeContext, StrokeResult


# Configure Logging
logger = logging.getLogger(__name__)


class BareStrategy(BaseDriveStrategy):
    """Finite-time drive of the isolated working medium, no lubricant."""

    mode = DriveMode.BARE

    def run_stroke(
        self,
        p: EngineParams,
        stage: Stage,
        rho_S: DensityOperator,
        context: StrokeContext,
    ) -> StrokeResult:
        times, path = evolve_path(
            lambda s: h_stage(p, stage, s),
            rho_S,
            0.0,
            stroke_duration(p, stage),
            context.settings,
        )
        logger.debug(f"Bare {stage.value} stroke over {len(times) - 1} substeps")
        return StrokeResult(
            rho_S_final=DensityOperator.from_matrix(path[-1]),
            times=times,
            path=path,
        )
