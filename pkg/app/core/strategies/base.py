from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from app.core.linalg import DensityOperator, OperatorMatrix
from app.core.model import DriveMode, EngineParams, Stage
from app.core.propagation import DEFAULT_SETTINGS, PropagationSettings
from app.core.zeno import MeasurementBasis


@dataclass(frozen=True)
class StrokeContext:
    """Everything a strategy needs besides the parameters and the incoming state."""

    settings: PropagationSettings = DEFAULT_SETTINGS
    basis: MeasurementBasis = MeasurementBasis.X
    master_seed: int = 0
    stream_keys: Tuple[int, ...] = ()
    include_reset_cost: bool = False


@dataclass
class StrokeResult:
    """
    Outcome of one work stroke.

    ``times``/``path`` sample the state along the stroke (2x2 or 4x4) for the
    friction decomposition. Joint quantities stay ``None`` for the bare drive.
    """

    rho_S_final: DensityOperator
    times: npt.NDArray[np.float64]
    path: List[OperatorMatrix]
    rho_SL_initial: Optional[DensityOperator] = None
    rho_SL_final: Optional[DensityOperator] = None
    joint_energy_change: Optional[float] = None
    decoupling_cost: float = 0.0
    zeno_work: float = 0.0
    meas_heat: float = 0.0
    meas_energy_cost: float = 0.0
    entropy_production: float = 0.0
    jump_count: int = 0
    extras: dict = field(default_factory=dict)


class BaseDriveStrategy(ABC):
    """
    Abstract Base Class for drive modes.
    Defines the contract for evolving the working medium through one work stroke.
    """

    mode: DriveMode

    @abstractmethod
    def run_stroke(
        self,
        p: EngineParams,
        stage: Stage,
        rho_S: DensityOperator,
        context: StrokeContext,
    ) -> StrokeResult:
        """
        Evolve the working medium through a compression or expansion stroke.

        Args:
            p (EngineParams): Model parameters.
            stage (Stage): Compression or expansion.
            rho_S (DensityOperator): Working-medium state entering the stroke.
            context (StrokeContext): Resolution, basis and random-stream keys.

        Returns:
            StrokeResult: Final reduced state plus stroke-level energetics.
        """
        pass
